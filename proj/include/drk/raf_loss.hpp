#pragma once

#include <cmath>

#include "drk/tensor.hpp"

// Referring-aware fusion loss: weighted BCE + focal + pixel-adaptive dice
// over probability maps (not logits). BCE and focal clamp probabilities to
// [clamp, 1-clamp] for log safety and are differentiated after the clamp;
// the dice term runs on raw probabilities so a perfect binary prediction
// scores exactly zero. The adaptive dice weights alpha_i are treated as
// constants in the gradient (stop-gradient).

namespace drk {

enum class AdaptiveMode { abs_diff, focal_style };
// Applies to the pixel-summed terms (bce, focal); dice is a global ratio
// and is unaffected.
enum class Normalize { sum, mean };

struct RafConfig {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
    double alpha = 0.25;
    double gamma = 2.0;
    double eps = 1.0;
    AdaptiveMode adaptive_mode = AdaptiveMode::abs_diff;
    double clamp = 1e-7;
    Normalize normalize = Normalize::sum;

    void validate() const {
        if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ValueError("raf: term weights must be nonnegative");
        if (lambda1 == 0 && lambda2 == 0 && lambda3 == 0) throw ValueError("raf: at least one term weight must be positive");
        if (!(alpha > 0 && alpha < 1)) throw ValueError("raf: alpha must lie in (0,1)");
        if (gamma < 0) throw ValueError("raf: gamma must be >= 0");
        if (!(eps > 0)) throw ValueError("raf: eps must be positive");
        if (!(clamp > 0 && clamp < 0.5)) throw ValueError("raf: clamp must lie in (0, 0.5)");
    }
};

template <class S>
struct ScalarGrad {
    double value = 0;
    Tensor<S> grad;
};

template <class S>
struct LossOutput {
    double total = 0;
    double bce = 0;
    double focal = 0;
    double dice = 0;
    Tensor<S> grad_p;
};

namespace detail {

template <class S>
void validate_loss_pair(const Tensor<S>& p, const Tensor<S>& y) {
    if (p.shape != y.shape) throw ShapeError("loss: prediction " + p.shape.str() + " vs target " + y.shape.str());
    for (long i = 0; i < y.numel(); ++i)
        if (y.data[i] != S(0) && y.data[i] != S(1)) throw ValueError("loss: target must be binary (0/1)");
}

inline double clamp_prob(double p, double c) { return p < c ? c : (p > 1.0 - c ? 1.0 - c : p); }

}  // namespace detail

template <class S>
ScalarGrad<S> bce(const Tensor<S>& p, const Tensor<S>& y, double clamp, Normalize norm = Normalize::sum) {
    detail::validate_loss_pair(p, y);
    ScalarGrad<S> out;
    out.grad = Tensor<S>::zeros(p.shape);
    const long n = p.numel();
    const double scale = norm == Normalize::mean ? 1.0 / static_cast<double>(n) : 1.0;
    double acc = 0;
    for (long i = 0; i < n; ++i) {
        const double pi = static_cast<double>(p.data[i]);
        const double yi = static_cast<double>(y.data[i]);
        const double pc = detail::clamp_prob(pi, clamp);
        acc += -(yi * std::log(pc) + (1.0 - yi) * std::log(1.0 - pc));
        if (pi > clamp && pi < 1.0 - clamp)
            out.grad.data[i] = static_cast<S>(scale * (-yi / pc + (1.0 - yi) / (1.0 - pc)));
    }
    out.value = scale * acc;
    return out;
}

template <class S>
ScalarGrad<S> focal(const Tensor<S>& p, const Tensor<S>& y, double alpha, double gamma, double clamp,
                    Normalize norm = Normalize::sum) {
    detail::validate_loss_pair(p, y);
    ScalarGrad<S> out;
    out.grad = Tensor<S>::zeros(p.shape);
    const long n = p.numel();
    const double scale = norm == Normalize::mean ? 1.0 / static_cast<double>(n) : 1.0;
    double acc = 0;
    for (long i = 0; i < n; ++i) {
        const double pi = static_cast<double>(p.data[i]);
        const double yi = static_cast<double>(y.data[i]);
        const double pc = detail::clamp_prob(pi, clamp);
        const bool interior = pi > clamp && pi < 1.0 - clamp;
        if (yi == 1.0) {
            const double w = std::pow(1.0 - pc, gamma);
            acc += -alpha * w * std::log(pc);
            if (interior) {
                const double dw = gamma == 0.0 ? 0.0 : gamma * std::pow(1.0 - pc, gamma - 1.0) * std::log(pc);
                out.grad.data[i] = static_cast<S>(scale * (alpha * dw - alpha * w / pc));
            }
        } else {
            const double w = std::pow(pc, gamma);
            acc += -(1.0 - alpha) * w * std::log(1.0 - pc);
            if (interior) {
                const double dw = gamma == 0.0 ? 0.0 : gamma * std::pow(pc, gamma - 1.0) * std::log(1.0 - pc);
                out.grad.data[i] = static_cast<S>(scale * (-(1.0 - alpha) * dw + (1.0 - alpha) * w / (1.0 - pc)));
            }
        }
    }
    out.value = scale * acc;
    return out;
}

// 1 - (2*sum(a*p*y) + eps) / (sum(a*p) + sum(a*y) + eps), with
// a_i = |p_i - y_i| (abs_diff) or (1 - p_i)^gamma (focal_style), frozen in
// the gradient.
template <class S>
ScalarGrad<S> adaptive_dice(const Tensor<S>& p, const Tensor<S>& y, AdaptiveMode mode, double gamma, double eps) {
    detail::validate_loss_pair(p, y);
    const long n = p.numel();
    double num = 0, den_p = 0, den_y = 0;
    for (long i = 0; i < n; ++i) {
        const double pi = static_cast<double>(p.data[i]);
        const double yi = static_cast<double>(y.data[i]);
        const double ai = mode == AdaptiveMode::abs_diff ? std::abs(pi - yi) : std::pow(1.0 - pi, gamma);
        num += ai * pi * yi;
        den_p += ai * pi;
        den_y += ai * yi;
    }
    const double Nm = 2.0 * num + eps;
    const double D = den_p + den_y + eps;

    ScalarGrad<S> out;
    out.value = 1.0 - Nm / D;
    out.grad = Tensor<S>::zeros(p.shape);
    for (long i = 0; i < n; ++i) {
        const double pi = static_cast<double>(p.data[i]);
        const double yi = static_cast<double>(y.data[i]);
        const double ai = mode == AdaptiveMode::abs_diff ? std::abs(pi - yi) : std::pow(1.0 - pi, gamma);
        out.grad.data[i] = static_cast<S>(ai * (Nm - 2.0 * yi * D) / (D * D));
    }
    return out;
}

template <class S>
LossOutput<S> raf(const Tensor<S>& p, const Tensor<S>& y, const RafConfig& cfg) {
    cfg.validate();
    ScalarGrad<S> b = bce(p, y, cfg.clamp, cfg.normalize);
    ScalarGrad<S> f = focal(p, y, cfg.alpha, cfg.gamma, cfg.clamp, cfg.normalize);
    ScalarGrad<S> d = adaptive_dice(p, y, cfg.adaptive_mode, cfg.gamma, cfg.eps);

    LossOutput<S> out;
    out.bce = b.value;
    out.focal = f.value;
    out.dice = d.value;
    out.total = cfg.lambda1 * b.value + cfg.lambda2 * f.value + cfg.lambda3 * d.value;
    out.grad_p.shape = p.shape;
    out.grad_p.data = S(cfg.lambda1) * b.grad.data + S(cfg.lambda2) * f.grad.data + S(cfg.lambda3) * d.grad.data;
    return out;
}

}  // namespace drk
