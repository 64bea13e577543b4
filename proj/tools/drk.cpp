#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#ifdef _OPENMP
#include <omp.h>
#endif

#include "drk/checkpoint.hpp"
#include "drk/config.hpp"
#include "drk/gradcheck_suites.hpp"
#include "drk/pgm.hpp"
#include "drk/train.hpp"

namespace {

void apply_threads(long threads) {
    if (threads <= 0) return;
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(threads));
#endif
}

long threads_from_env() {
    const char* env = std::getenv("DRK_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw drk::ValueError(std::string("DRK_THREADS: invalid value '") + env + "'");
    return v;
}

int run_gradcheck(const std::string& module, std::uint64_t seed) {
    std::vector<std::string> mods;
    if (module == "all") mods = drk::gradcheck_modules();
    else mods.push_back(module);
    bool ok = true;
    for (const std::string& m : mods) {
        drk::SuiteResult r = drk::run_gradcheck_suite(m, seed);
        std::cout << "module=" << m << " max_rel_err=" << drk::fmt_double(r.report.max_rel_err)
                  << " pass=" << (r.report.passed ? "true" : "false") << "\n";
        ok = ok && r.report.passed;
    }
    return ok ? 0 : 2;
}

struct MakeDataArgs {
    std::string out;
    long n = 1000;
    long size = 64;
    std::uint64_t seed = 0;
    long min_distractors = 1;
    long max_distractors = 4;
};

int run_make_data(const MakeDataArgs& a) {
    drk::DatasetSpec spec;
    spec.n_samples = a.n;
    spec.image_size = a.size;
    spec.seed = a.seed;
    spec.min_distractors = a.min_distractors;
    spec.max_distractors = a.max_distractors;
    std::vector<drk::ToySample> ds = drk::generate(spec);
    drk::save_dataset(a.out, ds);
    std::cout << "wrote " << ds.size() << " samples to " << a.out << "\n";
    return 0;
}

// Toy-budget defaults; a config file or flags override them.
drk::TrainConfig toy_defaults() {
    drk::TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch = 16;
    cfg.milestones = {10, 20};
    return cfg;
}

struct TrainArgs {
    std::string data, out, config, history;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_train(const TrainArgs& a) {
    std::vector<drk::ToySample> ds = drk::load_dataset(a.data);
    drk::TrainConfig cfg = toy_defaults();
    if (!a.config.empty()) drk::apply_train_config(cfg, drk::parse_config_file(a.config));
    if (a.seed_set) cfg.seed = a.seed;
    const std::string history = a.history.empty() ? a.out + ".history.csv" : a.history;
    drk::TrainResult r = drk::train(ds, cfg, a.out, history);
    const drk::EpochRecord& last = r.history.back();
    std::cout << "epochs=" << cfg.epochs << " final_loss=" << drk::fmt_double(last.loss_total)
              << " val_miou=" << drk::fmt_double(last.val_miou) << "\n";
    std::cout << "checkpoint=" << a.out << " history=" << history << "\n";
    return 0;
}

struct EvalArgs {
    std::string data, ckpt, pred_dir, out;
    long batch = 16;
    double threshold = 0.5;
};

int run_eval(const EvalArgs& a) {
    if (a.ckpt.empty() == a.pred_dir.empty())
        throw drk::ValueError("eval: exactly one of --ckpt and --pred-dir is required");
    std::vector<drk::ToySample> ds = drk::load_dataset(a.data);
    std::vector<drk::MaskPair> pairs;
    if (!a.ckpt.empty()) {
        drk::MicroModel m = drk::load_model(a.ckpt);
        std::vector<long> idx(ds.size());
        std::iota(idx.begin(), idx.end(), 0L);
        pairs = drk::predict_masks(m, ds, idx, a.batch, a.threshold);
    } else {
        for (const drk::ToySample& s : ds) {
            drk::MaskPair mp;
            mp.pred = drk::load_mask_pgm(a.pred_dir + "/" + s.sample_id + ".mask.pgm");
            mp.gt = s.mask;
            mp.sample_id = s.sample_id;
            pairs.push_back(std::move(mp));
        }
    }
    drk::EvalReport rep = drk::evaluate(pairs);
    if (a.out.empty()) {
        drk::write_eval_csv(std::cout, pairs, rep);
    } else {
        std::ofstream os(a.out, std::ios::binary);
        if (!os) throw drk::IoError(a.out + ": cannot open for writing");
        drk::write_eval_csv(os, pairs, rep);
        std::cout << "miou=" << drk::fmt_double(rep.miou) << " csv=" << a.out << "\n";
    }
    return 0;
}

struct AblateArgs {
    std::string data, out, config;
    long seeds = 3;
    std::uint64_t seed = 0;
};

int run_ablate(const AblateArgs& a) {
    std::vector<drk::ToySample> ds = drk::load_dataset(a.data);
    drk::TrainConfig base = toy_defaults();
    if (!a.config.empty()) drk::apply_train_config(base, drk::parse_config_file(a.config));
    base.seed = a.seed;
    std::vector<drk::AblationRow> rows = drk::ablate(ds, base, a.seeds);
    drk::write_ablation_csv(std::cout, rows);
    if (!a.out.empty()) {
        std::ofstream os(a.out, std::ios::binary);
        if (!os) throw drk::IoError(a.out + ": cannot open for writing");
        drk::write_ablation_csv(os, rows);
    }
    return 0;
}

struct BenchArgs {
    std::string op;
    long size = 64;
    long iters = 20;
    std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& a) {
    if (a.iters < 1) throw drk::ValueError("bench: --iters must be >= 1");
    if (a.size < 8) throw drk::ValueError("bench: --size must be >= 8");
    drk::Rng rng(a.seed);
    const long C = 8;
    drk::Tensor<double> x = drk::rand_normal<double>(rng, drk::Shape{1, C, a.size, a.size}, 0.0, 1.0);

    drk::DeformConvParams<double> p;
    p.main.weight = drk::rand_normal<double>(rng, drk::Shape{C, C, 3, 3}, 0.0, 0.5);
    p.main.bias = drk::rand_normal<double>(rng, drk::Shape{C}, 0.0, 0.2);
    p.main.stride = 1;
    p.main.padding = 1;
    p.offset_branch.weight = drk::rand_uniform<double>(rng, drk::Shape{18, C, 3, 3}, -0.005, 0.005);
    p.offset_branch.bias = drk::rand_uniform<double>(rng, drk::Shape{18}, 0.15, 0.35);
    p.offset_branch.stride = 1;
    p.offset_branch.padding = 1;

    double sink = 0;
    auto call = [&]() {
        if (a.op == "conv") sink += drk::conv2d_fwd(x, p.main).data[0];
        else sink += drk::deform_conv_fwd(x, p).y.data[0];
    };
    if (a.op != "conv" && a.op != "deform") throw drk::ValueError("bench: --op must be conv or deform");

    for (int w = 0; w < 3; ++w) call();
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(a.iters));
    for (long i = 0; i < a.iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        call();
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::nth_element(ms.begin(), ms.begin() + static_cast<long>(ms.size() / 2), ms.end());
    const double median = ms[ms.size() / 2];
    if (!std::isfinite(sink)) throw drk::NumericError("bench: non-finite output");
    std::cout << "op=" << a.op << " size=" << a.size << " iters=" << a.iters
              << " median_ms=" << drk::fmt_double(median) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drk: referring-segmentation kernels, gradcheck oracle, toy training"};
    app.require_subcommand(1);
    long threads = 0;
    app.add_option("--threads", threads, "cap worker threads (falls back to env DRK_THREADS)");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    std::string gc_module = "all";
    std::uint64_t gc_seed = 0;
    gc->add_option("--module", gc_module, "module name or 'all'");
    gc->add_option("--seed", gc_seed, "rng seed");

    auto* md = app.add_subcommand("make-data", "generate the toy referring dataset");
    MakeDataArgs md_args;
    md->add_option("--out", md_args.out, "output directory")->required();
    md->add_option("--n", md_args.n, "number of samples");
    md->add_option("--size", md_args.size, "image height/width");
    md->add_option("--seed", md_args.seed, "rng seed");
    md->add_option("--min-distractors", md_args.min_distractors, "minimum distractor count");
    md->add_option("--max-distractors", md_args.max_distractors, "maximum distractor count");

    auto* tr = app.add_subcommand("train", "train the micro model");
    TrainArgs tr_args;
    tr->add_option("--data", tr_args.data, "dataset directory")->required();
    tr->add_option("--out", tr_args.out, "checkpoint path")->required();
    tr->add_option("--config", tr_args.config, "key = value config file");
    tr->add_option("--history", tr_args.history, "history csv path (default <out>.history.csv)");
    auto* tr_seed = tr->add_option("--seed", tr_args.seed, "seed override");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or prediction directory");
    EvalArgs ev_args;
    ev->add_option("--data", ev_args.data, "dataset directory")->required();
    ev->add_option("--ckpt", ev_args.ckpt, "model checkpoint");
    ev->add_option("--pred-dir", ev_args.pred_dir, "directory of <id>.mask.pgm predictions");
    ev->add_option("--out", ev_args.out, "metrics csv path (default stdout)");
    ev->add_option("--batch", ev_args.batch, "inference batch size");
    ev->add_option("--threshold", ev_args.threshold, "binarization threshold");

    auto* ab = app.add_subcommand("ablate", "train the four-variant ablation");
    AblateArgs ab_args;
    ab->add_option("--data", ab_args.data, "dataset directory")->required();
    ab->add_option("--seeds", ab_args.seeds, "number of seeds to average");
    ab->add_option("--seed", ab_args.seed, "base seed");
    ab->add_option("--out", ab_args.out, "table csv path");
    ab->add_option("--config", ab_args.config, "key = value config file");

    auto* be = app.add_subcommand("bench", "micro-benchmark a kernel");
    BenchArgs be_args;
    be->add_option("--op", be_args.op, "conv or deform")->required();
    be->add_option("--size", be_args.size, "square input extent");
    be->add_option("--iters", be_args.iters, "timed iterations (median reported)");
    be->add_option("--seed", be_args.seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (threads == 0) threads = threads_from_env();
        apply_threads(threads);
        tr_args.seed_set = tr_seed->count() > 0;
        if (app.got_subcommand(gc)) return run_gradcheck(gc_module, gc_seed);
        if (app.got_subcommand(md)) return run_make_data(md_args);
        if (app.got_subcommand(tr)) return run_train(tr_args);
        if (app.got_subcommand(ev)) return run_eval(ev_args);
        if (app.got_subcommand(ab)) return run_ablate(ab_args);
        if (app.got_subcommand(be)) return run_bench(be_args);
    } catch (const drk::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
