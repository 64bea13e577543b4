#include "drk/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

#include "drk/checkpoint.hpp"

namespace drk {

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("train: epochs must be >= 1");
    if (batch < 1) throw ValueError("train: batch must be >= 1");
    if (base_lr <= 0) throw ValueError("train: base_lr must be positive");
    if (decay <= 0 || decay > 1) throw ValueError("train: decay must be in (0,1]");
    if (clip_max_norm < 0) throw ValueError("train: clip_max_norm must be >= 0");
    raf.validate();
    model.validate();
}

std::pair<std::vector<long>, std::vector<long>> split_indices(long n) {
    if (n < 1) throw ValueError("split_indices: empty dataset");
    long n_val = n / 5;
    if (n_val == 0 && n >= 2) n_val = 1;
    std::vector<long> tr, va;
    for (long i = 0; i < n - n_val; ++i) tr.push_back(i);
    for (long i = n - n_val; i < n; ++i) va.push_back(i);
    return {std::move(tr), std::move(va)};
}

namespace {

// Shuffle stream is separate from the init stream so changing the model
// layout cannot silently reorder the data.
constexpr std::uint64_t kShuffleSalt = 0x7f4a7c1593d2b8e1ull;

void fisher_yates(std::vector<long>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

void write_history_file(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(path + ": cannot open for writing");
    write_history_csv(os, history);
    if (!os) throw IoError(path + ": write failed");
}

}  // namespace

TrainResult train(const std::vector<ToySample>& dataset, const TrainConfig& cfg, const std::string& ckpt_path,
                  const std::string& history_path) {
    cfg.validate();
    if (dataset.empty()) throw ValueError("train: empty dataset");

    TrainResult res;
    res.model = make_model(cfg.model, cfg.seed);
    std::vector<NamedParam> params = res.model.params();
    OptimState st = make_optim_state(params, cfg.base_lr, cfg.milestones, cfg.decay, cfg.clip_max_norm);

    auto [train_idx, val_idx] = split_indices(static_cast<long>(dataset.size()));
    Rng shuffle_rng(cfg.seed ^ kShuffleSalt);

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        st.lr = lr_at(epoch, st);
        fisher_yates(train_idx, shuffle_rng);

        double sum_total = 0, sum_bce = 0, sum_focal = 0, sum_dice = 0;
        long n_batches = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch));
            std::vector<long> chunk(train_idx.begin() + static_cast<long>(start),
                                    train_idx.begin() + static_cast<long>(end));
            ModelCache cache;
            Tensor<double> prob = model_forward(res.model, batch_images(dataset, chunk), batch_attrs(dataset, chunk),
                                                &cache);
            Tensor<double> masks = batch_masks(dataset, chunk);
            // Loss per sample, then averaged. The dice denominator is a
            // per-mask quantity; batch-global sums would let large masks
            // drown the gradient signal of small ones.
            const long bn = prob.shape.n();
            const long px = prob.shape.c() * prob.shape.h() * prob.shape.w();
            Tensor<double> grad_p = Tensor<double>::zeros(prob.shape);
            LossOutput<double> acc;
            const Shape one{1, prob.shape.c(), prob.shape.h(), prob.shape.w()};
            for (long s = 0; s < bn; ++s) {
                Tensor<double> ps, ys;
                ps.shape = one;
                ys.shape = one;
                ps.data = prob.data.segment(s * px, px);
                ys.data = masks.data.segment(s * px, px);
                LossOutput<double> lo = raf(ps, ys, cfg.raf);
                acc.total += lo.total;
                acc.bce += lo.bce;
                acc.focal += lo.focal;
                acc.dice += lo.dice;
                grad_p.data.segment(s * px, px) = lo.grad_p.data / static_cast<double>(bn);
            }
            acc.total /= static_cast<double>(bn);
            acc.bce /= static_cast<double>(bn);
            acc.focal /= static_cast<double>(bn);
            acc.dice /= static_cast<double>(bn);
            if (!std::isfinite(acc.total))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", last completed epoch kept on disk");
            std::vector<Tensor<double>> grads = model_backward(res.model, cache, grad_p);
            clip_grads(grads, cfg.clip_max_norm);
            adam_step(params, grads, st);
            sum_total += acc.total;
            sum_bce += acc.bce;
            sum_focal += acc.focal;
            sum_dice += acc.dice;
            ++n_batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = st.lr;
        rec.loss_total = sum_total / static_cast<double>(n_batches);
        rec.loss_bce = sum_bce / static_cast<double>(n_batches);
        rec.loss_focal = sum_focal / static_cast<double>(n_batches);
        rec.loss_dice = sum_dice / static_cast<double>(n_batches);
        rec.val_miou = std::numeric_limits<double>::quiet_NaN();
        if (!val_idx.empty() && (cfg.eval_every_epoch || epoch == cfg.epochs - 1))
            rec.val_miou = evaluate(predict_masks(res.model, dataset, val_idx, cfg.batch)).miou;
        res.history.push_back(rec);

        if (!ckpt_path.empty()) save_model(ckpt_path, res.model);
        if (!history_path.empty()) write_history_file(history_path, res.history);
    }
    return res;
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
    os << "epoch,lr,loss_total,loss_bce,loss_focal,loss_dice,val_miou\n";
    for (const EpochRecord& r : history) {
        os << r.epoch << ',' << fmt_double(r.lr) << ',' << fmt_double(r.loss_total) << ',' << fmt_double(r.loss_bce)
           << ',' << fmt_double(r.loss_focal) << ',' << fmt_double(r.loss_dice) << ',' << fmt_double(r.val_miou)
           << '\n';
    }
}

std::vector<AblationRow> ablate(const std::vector<ToySample>& dataset, const TrainConfig& base, long n_seeds) {
    if (n_seeds < 1) throw ValueError("ablate: n_seeds must be >= 1");
    struct Variant {
        const char* name;
        bool use_deform, use_se, bce_only;
    };
    const Variant variants[4] = {
        {"a_plain_bce", false, false, true},
        {"b_plain_raf", false, false, false},
        {"c_deform_raf", true, false, false},
        {"d_full_raf", true, true, false},
    };

    auto [train_idx, val_idx] = split_indices(static_cast<long>(dataset.size()));
    (void)train_idx;

    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        AblationRow row;
        row.variant = v.name;
        for (long s = 0; s < n_seeds; ++s) {
            TrainConfig cfg = base;
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            cfg.eval_every_epoch = false;
            cfg.model.use_deform = v.use_deform;
            cfg.model.use_se = v.use_se;
            if (v.bce_only) {
                cfg.raf.lambda1 = 1.0;
                cfg.raf.lambda2 = 0.0;
                cfg.raf.lambda3 = 0.0;
            }
            TrainResult r = train(dataset, cfg);
            EvalReport rep = evaluate(predict_masks(r.model, dataset, val_idx, cfg.batch));
            row.miou += rep.miou;
            int k = 0;
            for (const int t : kPrecThresholds) row.prec[k++] += rep.prec_at.at(t);
        }
        row.miou /= static_cast<double>(n_seeds);
        for (double& p : row.prec) p /= static_cast<double>(n_seeds);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
    os << "variant,miou,prec@50,prec@60,prec@70,prec@80,prec@90\n";
    for (const AblationRow& r : rows) {
        os << r.variant << ',' << fmt_double(r.miou);
        for (const double p : r.prec) os << ',' << fmt_double(p);
        os << '\n';
    }
}

}  // namespace drk
