#pragma once

#include <cmath>
#include <string>

#include "drk/tensor.hpp"

// Finite-difference oracle. Everything runs in f64 with central
// differences; the oracle never touches an analytic backward, so a passing
// check is genuine independent evidence.

namespace drk {

namespace gc {
inline constexpr double kStep = 1e-5;
inline constexpr double kTolSmooth = 1e-6;   // smooth layers
inline constexpr double kTolDeform = 1e-5;   // composites containing bilinear sampling
inline constexpr double kTolLoss = 1e-8;     // loss surfaces
inline constexpr double kAbsTol = 1e-8;
inline constexpr double kRelFloor = 1e-8;    // denominator floor of the relative error
}  // namespace gc

struct GradReport {
    double max_rel_err = 0;
    double max_abs_err = 0;
    long worst_index = -1;
    long n_checked = 0;
    bool passed = true;
};

// (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
template <class F>
Tensor<double> fd_gradient(const F& f, const Tensor<double>& x, double h = gc::kStep) {
    if (!(h > 0)) throw ValueError("fd_gradient: h must be positive");
    Tensor<double> g = Tensor<double>::zeros(x.shape);
    Tensor<double> xp = x;
    for (long i = 0; i < x.numel(); ++i) {
        const double orig = xp.data[i];
        xp.data[i] = orig + h;
        const double fp = f(xp);
        xp.data[i] = orig - h;
        const double fm = f(xp);
        xp.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("fd_gradient: non-finite evaluation at element " + std::to_string(i));
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Element passes if its relative error (floored denominator) is within
// rel_tol or its absolute error is within abs_tol. worst_index tracks the
// largest relative error.
inline GradReport check(const Tensor<double>& analytic, const Tensor<double>& numeric, double rel_tol,
                        double abs_tol = gc::kAbsTol) {
    if (analytic.shape != numeric.shape)
        throw ShapeError("gradcheck: analytic " + analytic.shape.str() + " vs numeric " + numeric.shape.str());
    GradReport r;
    r.n_checked = analytic.numel();
    for (long i = 0; i < analytic.numel(); ++i) {
        const double a = analytic.data[i];
        const double n = numeric.data[i];
        const double abs_err = std::abs(a - n);
        const double rel_err = abs_err / std::max({std::abs(a), std::abs(n), gc::kRelFloor});
        if (rel_err > r.max_rel_err) {
            r.max_rel_err = rel_err;
            r.worst_index = i;
        }
        if (abs_err > r.max_abs_err) r.max_abs_err = abs_err;
        if (rel_err > rel_tol && abs_err > abs_tol) r.passed = false;
    }
    return r;
}

inline void fold(GradReport& into, const GradReport& r) {
    if (r.max_rel_err > into.max_rel_err) {
        into.max_rel_err = r.max_rel_err;
        into.worst_index = r.worst_index;
    }
    into.max_abs_err = std::max(into.max_abs_err, r.max_abs_err);
    into.n_checked += r.n_checked;
    into.passed = into.passed && r.passed;
}

}  // namespace drk
