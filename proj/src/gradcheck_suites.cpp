#include "drk/gradcheck_suites.hpp"

#include <cmath>

#include "drk/enhance.hpp"
#include "drk/raf_loss.hpp"

// Every suite uses the projection trick: for a tensor-valued op F and a
// fixed random projection P, the scalar f(inputs) = <F(inputs), P> has
// df/dinput equal to the backward pass evaluated at grad_out = P. The
// finite-difference side only ever calls forward code.

namespace drk {

namespace {

constexpr int kInstances = 5;

Rng instance_rng(std::uint64_t seed, int i) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1)));
}

double proj(const Tensor<double>& a, const Tensor<double>& b) {
    if (a.shape != b.shape) throw ShapeError("proj: " + a.shape.str() + " vs " + b.shape.str());
    double s = 0;
    for (long i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
    return s;
}

Tensor<double> binary_mask(Rng& rng, const Shape& shape) {
    Tensor<double> t = Tensor<double>::zeros(shape);
    for (long i = 0; i < t.numel(); ++i) t.data[i] = static_cast<double>(rng.next_below(2));
    return t;
}

GradReport conv2d_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> x = rand_normal<double>(rng, Shape{2, 3, 5, 6}, 0.0, 1.0);
        Conv2dParams<double> p;
        p.weight = rand_normal<double>(rng, Shape{4, 3, 3, 3}, 0.0, 0.5);
        p.bias = rand_normal<double>(rng, Shape{4}, 0.0, 0.2);
        p.stride = 1 + (i % 2);
        p.padding = (i % 3 == 0) ? 0 : 1;
        Tensor<double> P = rand_uniform<double>(rng, conv2d_fwd(x, p).shape, -1.0, 1.0);

        Conv2dGrads<double> g = conv2d_bwd(x, p, P);
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(conv2d_fwd(t, p), P); }, x),
                        gc::kTolSmooth));
        fold(all, check(g.weight, fd_gradient(
                                      [&](const Tensor<double>& t) {
                                          Conv2dParams<double> q = p;
                                          q.weight = t;
                                          return proj(conv2d_fwd(x, q), P);
                                      },
                                      p.weight),
                        gc::kTolSmooth));
        fold(all, check(g.bias, fd_gradient(
                                    [&](const Tensor<double>& t) {
                                        Conv2dParams<double> q = p;
                                        q.bias = t;
                                        return proj(conv2d_fwd(x, q), P);
                                    },
                                    p.bias),
                        gc::kTolSmooth));
    }
    return all;
}

GradReport bilinear_suite(std::uint64_t seed) {
    const long H = 5, W = 6, Q = 8;
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> x = rand_normal<double>(rng, Shape{1, 1, H, W}, 0.0, 1.0);
        // Keep every query 0.15 away from the lattice so the h = 1e-5
        // stencil cannot cross a cell boundary.
        Tensor<double> coords = Tensor<double>::zeros(Shape{2 * Q});
        for (long q = 0; q < Q; ++q) {
            coords.data[2 * q] = static_cast<double>(rng.next_below(H - 1)) + rng.uniform(0.15, 0.85);
            coords.data[2 * q + 1] = static_cast<double>(rng.next_below(W - 1)) + rng.uniform(0.15, 0.85);
        }
        Tensor<double> P = rand_uniform<double>(rng, Shape{Q}, -1.0, 1.0);

        auto value = [&](const Tensor<double>& img, const Tensor<double>& cs) {
            double s = 0;
            for (long q = 0; q < Q; ++q) s += P.data[q] * bilinear_sample(img, 0, 0, cs.data[2 * q], cs.data[2 * q + 1]);
            return s;
        };

        Tensor<double> gx = Tensor<double>::zeros(x.shape);
        Tensor<double> gcoords = Tensor<double>::zeros(coords.shape);
        for (long q = 0; q < Q; ++q) {
            detail::bilin_scatter(gx.ptr(), H, W, coords.data[2 * q], coords.data[2 * q + 1], P.data[q]);
            double dpy = 0, dpx = 0;
            detail::bilin_coord_grad(x.ptr(), H, W, coords.data[2 * q], coords.data[2 * q + 1], dpy, dpx);
            gcoords.data[2 * q] = P.data[q] * dpy;
            gcoords.data[2 * q + 1] = P.data[q] * dpx;
        }

        fold(all, check(gx, fd_gradient([&](const Tensor<double>& t) { return value(t, coords); }, x), gc::kTolDeform));
        fold(all, check(gcoords, fd_gradient([&](const Tensor<double>& t) { return value(x, t); }, coords),
                        gc::kTolDeform));
    }
    return all;
}

DeformConvParams<double> random_deform(Rng& rng, long c_in, long c_out, int k, int stride, int pad) {
    DeformConvParams<double> p;
    p.main.weight = rand_normal<double>(rng, Shape{c_out, c_in, k, k}, 0.0, 0.5);
    p.main.bias = rand_normal<double>(rng, Shape{c_out}, 0.0, 0.2);
    p.main.stride = stride;
    p.main.padding = pad;
    // Small weights plus a positive bias keep every sampling point
    // strictly off-lattice, where the value is differentiable.
    p.offset_branch.weight = rand_uniform<double>(rng, Shape{2L * k * k, c_in, k, k}, -0.005, 0.005);
    p.offset_branch.bias = rand_uniform<double>(rng, Shape{2L * k * k}, 0.15, 0.35);
    p.offset_branch.stride = stride;
    p.offset_branch.padding = pad;
    return p;
}

GradReport deform_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> x = rand_normal<double>(rng, Shape{1, 2, 5, 6}, 0.0, 1.0);
        DeformConvParams<double> p = random_deform(rng, 2, 3, 3, i < 3 ? 1 : 2, 1);
        Tensor<double> P = rand_uniform<double>(rng, deform_conv_fwd(x, p).y.shape, -1.0, 1.0);

        DeformConvGrads<double> g = deform_conv_bwd(x, p, P);
        auto with = [&](auto mut) {
            DeformConvParams<double> q = p;
            mut(q);
            return q;
        };
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(deform_conv_fwd(t, p).y, P); }, x),
                        gc::kTolDeform));
        fold(all, check(g.main_weight,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                return proj(deform_conv_fwd(x, with([&](auto& q) { q.main.weight = t; })).y, P);
                            },
                            p.main.weight),
                        gc::kTolDeform));
        fold(all, check(g.main_bias,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                return proj(deform_conv_fwd(x, with([&](auto& q) { q.main.bias = t; })).y, P);
                            },
                            p.main.bias),
                        gc::kTolDeform));
        fold(all, check(g.offset_weight,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                return proj(deform_conv_fwd(x, with([&](auto& q) { q.offset_branch.weight = t; })).y, P);
                            },
                            p.offset_branch.weight),
                        gc::kTolDeform));
        fold(all, check(g.offset_bias,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                return proj(deform_conv_fwd(x, with([&](auto& q) { q.offset_branch.bias = t; })).y, P);
                            },
                            p.offset_branch.bias),
                        gc::kTolDeform));
    }
    return all;
}

GradReport se_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        const long C = 5;
        Tensor<double> x = rand_normal<double>(rng, Shape{2, C, 3, 4}, 0.0, 1.0);
        SeParams<double> p;
        p.reduction = (i % 2) ? 2 : 4;
        const long hidden = se_hidden_dim(C, p.reduction);
        p.fc1.weight = rand_normal<double>(rng, Shape{hidden, C}, 0.0, 0.5);
        p.fc1.bias = rand_normal<double>(rng, Shape{hidden}, 0.0, 0.2);
        p.fc2.weight = rand_normal<double>(rng, Shape{C, hidden}, 0.0, 0.5);
        p.fc2.bias = rand_normal<double>(rng, Shape{C}, 0.0, 0.2);
        Tensor<double> P = rand_uniform<double>(rng, x.shape, -1.0, 1.0);

        SeGrads<double> g = se_bwd(x, p, P);
        auto with = [&](auto mut) {
            SeParams<double> q = p;
            mut(q);
            return q;
        };
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(se_fwd(t, p).x_sc, P); }, x),
                        gc::kTolSmooth));
        fold(all, check(g.fc1_weight,
                        fd_gradient([&](const Tensor<double>& t) { return proj(se_fwd(x, with([&](auto& q) { q.fc1.weight = t; })).x_sc, P); },
                                    p.fc1.weight),
                        gc::kTolSmooth));
        fold(all, check(g.fc1_bias,
                        fd_gradient([&](const Tensor<double>& t) { return proj(se_fwd(x, with([&](auto& q) { q.fc1.bias = t; })).x_sc, P); },
                                    p.fc1.bias),
                        gc::kTolSmooth));
        fold(all, check(g.fc2_weight,
                        fd_gradient([&](const Tensor<double>& t) { return proj(se_fwd(x, with([&](auto& q) { q.fc2.weight = t; })).x_sc, P); },
                                    p.fc2.weight),
                        gc::kTolSmooth));
        fold(all, check(g.fc2_bias,
                        fd_gradient([&](const Tensor<double>& t) { return proj(se_fwd(x, with([&](auto& q) { q.fc2.bias = t; })).x_sc, P); },
                                    p.fc2.bias),
                        gc::kTolSmooth));
    }
    return all;
}

GradReport residual_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> x = rand_normal<double>(rng, Shape{1, 3, 4, 5}, 0.0, 1.0);
        ResidualParams<double> p;
        p.factor = 1 + (i % 2);
        p.shortcut.weight = rand_normal<double>(rng, Shape{2, 3, 1, 1}, 0.0, 0.5);
        p.shortcut.bias = rand_normal<double>(rng, Shape{2}, 0.0, 0.2);
        p.shortcut.stride = 1;
        p.shortcut.padding = 0;
        Tensor<double> x_se = rand_normal<double>(rng, Shape{1, 2, 4L * p.factor, 5L * p.factor}, 0.0, 1.0);
        Tensor<double> P = rand_uniform<double>(rng, x_se.shape, -1.0, 1.0);

        ResidualGrads<double> g = residual_fuse_bwd(x, p, P);
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(residual_fuse(t, x_se, p), P); }, x),
                        gc::kTolSmooth));
        fold(all, check(g.x_se, fd_gradient([&](const Tensor<double>& t) { return proj(residual_fuse(x, t, p), P); }, x_se),
                        gc::kTolSmooth));
        fold(all, check(g.shortcut_weight,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                ResidualParams<double> q = p;
                                q.shortcut.weight = t;
                                return proj(residual_fuse(x, x_se, q), P);
                            },
                            p.shortcut.weight),
                        gc::kTolSmooth));
        fold(all, check(g.shortcut_bias,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                ResidualParams<double> q = p;
                                q.shortcut.bias = t;
                                return proj(residual_fuse(x, x_se, q), P);
                            },
                            p.shortcut.bias),
                        gc::kTolSmooth));
    }
    return all;
}

GradReport dynconv_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> x = rand_normal<double>(rng, Shape{2, 3, 3, 4}, 0.0, 1.0);
        Tensor<double> emb = rand_normal<double>(rng, Shape{2, 7}, 0.0, 1.0);
        DynConvParams<double> p;
        p.kernel_gen.weight = rand_normal<double>(rng, Shape{16, 7}, 0.0, 0.3);
        p.kernel_gen.bias = rand_normal<double>(rng, Shape{16}, 0.0, 0.2);
        Tensor<double> P = rand_uniform<double>(rng, dyn_conv_apply(x, emb, p).shape, -1.0, 1.0);

        DynConvGrads<double> g = dyn_conv_bwd(x, emb, p, P);
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(dyn_conv_apply(t, emb, p), P); }, x),
                        gc::kTolSmooth));
        fold(all, check(g.emb, fd_gradient([&](const Tensor<double>& t) { return proj(dyn_conv_apply(x, t, p), P); }, emb),
                        gc::kTolSmooth));
        fold(all, check(g.gen_weight,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                DynConvParams<double> q = p;
                                q.kernel_gen.weight = t;
                                return proj(dyn_conv_apply(x, emb, q), P);
                            },
                            p.kernel_gen.weight),
                        gc::kTolSmooth));
        fold(all, check(g.gen_bias,
                        fd_gradient(
                            [&](const Tensor<double>& t) {
                                DynConvParams<double> q = p;
                                q.kernel_gen.bias = t;
                                return proj(dyn_conv_apply(x, emb, q), P);
                            },
                            p.kernel_gen.bias),
                        gc::kTolSmooth));
    }
    return all;
}

GradReport enhance_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        const long C = 4;
        Tensor<double> x = rand_normal<double>(rng, Shape{1, C, 6, 6}, 0.0, 1.0);
        EnhanceParams<double> p;
        p.deform = random_deform(rng, C, C, 3, 1, 1);
        p.se.reduction = 2;
        const long hidden = se_hidden_dim(C, p.se.reduction);
        p.se.fc1.weight = rand_normal<double>(rng, Shape{hidden, C}, 0.0, 0.5);
        p.se.fc1.bias = rand_normal<double>(rng, Shape{hidden}, 0.0, 0.2);
        p.se.fc2.weight = rand_normal<double>(rng, Shape{C, hidden}, 0.0, 0.5);
        p.se.fc2.bias = rand_normal<double>(rng, Shape{C}, 0.0, 0.2);
        p.residual.factor = 1 + (i % 2);
        p.residual.shortcut.weight = rand_normal<double>(rng, Shape{C, C, 1, 1}, 0.0, 0.5);
        p.residual.shortcut.bias = rand_normal<double>(rng, Shape{C}, 0.0, 0.2);
        p.residual.shortcut.stride = 1;
        p.residual.shortcut.padding = 0;
        Tensor<double> P = rand_uniform<double>(rng, enhance_block_fwd(x, p).shape, -1.0, 1.0);

        EnhanceGrads<double> g = enhance_block_bwd(x, p, P);
        fold(all, check(g.x, fd_gradient([&](const Tensor<double>& t) { return proj(enhance_block_fwd(t, p), P); }, x),
                        gc::kTolDeform));
        struct Entry {
            const Tensor<double>* analytic;
            Tensor<double>* target;
        };
        EnhanceParams<double> q = p;
        const Entry entries[] = {
            {&g.main_weight, &q.deform.main.weight},
            {&g.main_bias, &q.deform.main.bias},
            {&g.offset_weight, &q.deform.offset_branch.weight},
            {&g.offset_bias, &q.deform.offset_branch.bias},
            {&g.fc1_weight, &q.se.fc1.weight},
            {&g.fc1_bias, &q.se.fc1.bias},
            {&g.fc2_weight, &q.se.fc2.weight},
            {&g.fc2_bias, &q.se.fc2.bias},
            {&g.shortcut_weight, &q.residual.shortcut.weight},
            {&g.shortcut_bias, &q.residual.shortcut.bias},
        };
        for (const Entry& e : entries) {
            const Tensor<double> base = *e.target;
            Tensor<double> num = fd_gradient(
                [&](const Tensor<double>& t) {
                    *e.target = t;
                    const double v = proj(enhance_block_fwd(x, q), P);
                    return v;
                },
                base);
            *e.target = base;
            fold(all, check(*e.analytic, num, gc::kTolDeform));
        }
    }
    return all;
}

GradReport bce_suite(std::uint64_t seed) {
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> p = rand_uniform<double>(rng, Shape{1, 1, 6, 6}, 0.1, 0.9);
        Tensor<double> y = binary_mask(rng, p.shape);
        const Normalize norm = (i % 2) ? Normalize::mean : Normalize::sum;
        ScalarGrad<double> g = bce(p, y, 1e-7, norm);
        fold(all, check(g.grad, fd_gradient([&](const Tensor<double>& t) { return bce(t, y, 1e-7, norm).value; }, p),
                        gc::kTolLoss));
    }
    return all;
}

GradReport focal_suite(std::uint64_t seed) {
    const double gammas[kInstances] = {2.0, 0.0, 1.0, 0.5, 3.0};
    const double alphas[kInstances] = {0.25, 0.5, 0.75, 0.4, 0.6};
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> p = rand_uniform<double>(rng, Shape{1, 1, 6, 6}, 0.1, 0.9);
        Tensor<double> y = binary_mask(rng, p.shape);
        const Normalize norm = (i % 2) ? Normalize::mean : Normalize::sum;
        ScalarGrad<double> g = focal(p, y, alphas[i], gammas[i], 1e-7, norm);
        fold(all, check(g.grad,
                        fd_gradient([&](const Tensor<double>& t) { return focal(t, y, alphas[i], gammas[i], 1e-7, norm).value; }, p),
                        gc::kTolLoss));
    }
    return all;
}

// Frozen-alpha dice surrogate: the adaptive weights are a stop-gradient
// term, so the oracle differentiates the value with alpha pinned at the
// base point.
double frozen_dice_value(const Tensor<double>& p, const Tensor<double>& y, const Tensor<double>& alpha0, double eps) {
    double num = 0, den = 0;
    for (long i = 0; i < p.numel(); ++i) {
        num += alpha0.data[i] * p.data[i] * y.data[i];
        den += alpha0.data[i] * (p.data[i] + y.data[i]);
    }
    return 1.0 - (2.0 * num + eps) / (den + eps);
}

Tensor<double> frozen_alpha(const Tensor<double>& p, const Tensor<double>& y, AdaptiveMode mode, double gamma) {
    Tensor<double> a = Tensor<double>::zeros(p.shape);
    for (long i = 0; i < p.numel(); ++i)
        a.data[i] = mode == AdaptiveMode::abs_diff ? std::abs(p.data[i] - y.data[i]) : std::pow(1.0 - p.data[i], gamma);
    return a;
}

GradReport dice_suite(std::uint64_t seed) {
    const double gammas[kInstances] = {2.0, 1.0, 0.5, 2.0, 1.5};
    const double epss[kInstances] = {1.0, 0.5, 1.0, 2.0, 1.0};
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> p = rand_uniform<double>(rng, Shape{1, 1, 6, 6}, 0.1, 0.9);
        Tensor<double> y = binary_mask(rng, p.shape);
        const AdaptiveMode mode = (i % 2) ? AdaptiveMode::focal_style : AdaptiveMode::abs_diff;
        Tensor<double> a0 = frozen_alpha(p, y, mode, gammas[i]);
        ScalarGrad<double> g = adaptive_dice(p, y, mode, gammas[i], epss[i]);
        fold(all, check(g.grad,
                        fd_gradient([&](const Tensor<double>& t) { return frozen_dice_value(t, y, a0, epss[i]); }, p),
                        gc::kTolLoss));
    }
    return all;
}

GradReport raf_suite(std::uint64_t seed) {
    struct Cfg {
        double l1, l2, l3, alpha, gamma;
        AdaptiveMode mode;
        Normalize norm;
    };
    const Cfg cfgs[kInstances] = {
        {1.0, 1.0, 1.0, 0.25, 2.0, AdaptiveMode::abs_diff, Normalize::sum},
        {0.7, 0.2, 0.1, 0.5, 0.0, AdaptiveMode::focal_style, Normalize::mean},
        {1.0, 0.0, 1.0, 0.25, 1.0, AdaptiveMode::abs_diff, Normalize::mean},
        {2.0, 0.5, 0.0, 0.4, 0.5, AdaptiveMode::focal_style, Normalize::sum},
        {0.0, 1.0, 2.0, 0.6, 3.0, AdaptiveMode::abs_diff, Normalize::sum},
    };
    GradReport all;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng = instance_rng(seed, i);
        Tensor<double> p = rand_uniform<double>(rng, Shape{1, 1, 6, 6}, 0.1, 0.9);
        Tensor<double> y = binary_mask(rng, p.shape);
        RafConfig cfg;
        cfg.lambda1 = cfgs[i].l1;
        cfg.lambda2 = cfgs[i].l2;
        cfg.lambda3 = cfgs[i].l3;
        cfg.alpha = cfgs[i].alpha;
        cfg.gamma = cfgs[i].gamma;
        cfg.adaptive_mode = cfgs[i].mode;
        cfg.normalize = cfgs[i].norm;

        Tensor<double> a0 = frozen_alpha(p, y, cfg.adaptive_mode, cfg.gamma);
        LossOutput<double> out = raf(p, y, cfg);
        auto surrogate = [&](const Tensor<double>& t) {
            double v = 0;
            if (cfg.lambda1 != 0) v += cfg.lambda1 * bce(t, y, cfg.clamp, cfg.normalize).value;
            if (cfg.lambda2 != 0) v += cfg.lambda2 * focal(t, y, cfg.alpha, cfg.gamma, cfg.clamp, cfg.normalize).value;
            if (cfg.lambda3 != 0) v += cfg.lambda3 * frozen_dice_value(t, y, a0, cfg.eps);
            return v;
        };
        fold(all, check(out.grad_p, fd_gradient(surrogate, p), gc::kTolLoss));
    }
    return all;
}

struct Suite {
    const char* name;
    GradReport (*run)(std::uint64_t);
    double rel_tol;
};

const Suite kSuites[] = {
    {"conv2d", conv2d_suite, gc::kTolSmooth},
    {"bilinear", bilinear_suite, gc::kTolDeform},
    {"deform", deform_suite, gc::kTolDeform},
    {"se", se_suite, gc::kTolSmooth},
    {"residual", residual_suite, gc::kTolSmooth},
    {"dynconv", dynconv_suite, gc::kTolSmooth},
    {"enhance", enhance_suite, gc::kTolDeform},
    {"bce", bce_suite, gc::kTolLoss},
    {"focal", focal_suite, gc::kTolLoss},
    {"dice", dice_suite, gc::kTolLoss},
    {"raf", raf_suite, gc::kTolLoss},
};

}  // namespace

std::vector<std::string> gradcheck_modules() {
    std::vector<std::string> names;
    for (const Suite& s : kSuites) names.emplace_back(s.name);
    return names;
}

SuiteResult run_gradcheck_suite(const std::string& module, std::uint64_t seed) {
    for (const Suite& s : kSuites) {
        if (module != s.name) continue;
        SuiteResult r;
        r.module = module;
        r.rel_tol = s.rel_tol;
        r.report = s.run(seed);
        return r;
    }
    throw ValueError("gradcheck: unknown module " + module);
}

}  // namespace drk
