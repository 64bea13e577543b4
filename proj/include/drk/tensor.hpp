#pragma once

#include <Eigen/Core>
#include <cmath>
#include <type_traits>
#include <vector>

#include "drk/errors.hpp"
#include "drk/rng.hpp"
#include "drk/shape.hpp"

namespace drk {

// Dense rank-1..4 array, row-major, templated on the scalar (float or
// double). Storage is a flat Eigen array so callers can lean on Eigen
// expressions via .data directly. Operations never mutate their inputs;
// reductions accumulate in double regardless of the scalar type.
template <class S>
struct Tensor {
    static_assert(std::is_floating_point_v<S>, "Tensor scalar must be float or double");

    using Storage = Eigen::Array<S, Eigen::Dynamic, 1>;

    Shape shape;
    Storage data;

    Tensor() = default;

    static Tensor full(const Shape& shape, S fill) {
        Tensor t;
        t.shape = shape;
        t.data = Storage::Constant(shape.numel(), fill);
        return t;
    }

    static Tensor zeros(const Shape& shape) { return full(shape, S(0)); }

    static Tensor from_values(const Shape& shape, const std::vector<S>& values) {
        if (static_cast<long>(values.size()) != shape.numel())
            throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape " + shape.str());
        Tensor t;
        t.shape = shape;
        t.data.resize(shape.numel());
        for (long i = 0; i < t.data.size(); ++i) t.data[i] = values[static_cast<std::size_t>(i)];
        return t;
    }

    long numel() const { return data.size(); }

    S& operator[](long i) { return data[i]; }
    S operator[](long i) const { return data[i]; }

    S& at4(long n, long c, long h, long w) { return data[shape.index4(n, c, h, w)]; }
    S at4(long n, long c, long h, long w) const { return data[shape.index4(n, c, h, w)]; }

    const S* ptr() const { return data.data(); }
    S* ptr() { return data.data(); }

    bool all_finite() const {
        for (long i = 0; i < data.size(); ++i)
            if (!std::isfinite(static_cast<double>(data[i]))) return false;
        return true;
    }

    template <class T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data = data.template cast<T>();
        return out;
    }
};

enum class EwiseOp { add, sub, mul, max };
enum class ReduceOp { sum, mean };

namespace detail {

// b broadcast per channel: a is [N,C,H,W], b is [1,C,1,1].
template <class S>
bool channel_broadcastable(const Shape& a, const Shape& b) {
    return a.rank() == 4 && b.rank() == 4 && b.dim(0) == 1 && b.dim(1) == a.dim(1) && b.dim(2) == 1 && b.dim(3) == 1;
}

template <class S>
S apply_op(EwiseOp op, S x, S y) {
    switch (op) {
        case EwiseOp::add: return x + y;
        case EwiseOp::sub: return x - y;
        case EwiseOp::mul: return x * y;
        case EwiseOp::max: return x > y ? x : y;
    }
    return S(0);
}

}  // namespace detail

template <class S>
Tensor<S> ewise(EwiseOp op, const Tensor<S>& a, const Tensor<S>& b) {
    Tensor<S> out;
    out.shape = a.shape;
    if (a.shape == b.shape) {
        switch (op) {
            case EwiseOp::add: out.data = a.data + b.data; break;
            case EwiseOp::sub: out.data = a.data - b.data; break;
            case EwiseOp::mul: out.data = a.data * b.data; break;
            case EwiseOp::max: out.data = a.data.max(b.data); break;
        }
        return out;
    }
    if (detail::channel_broadcastable<S>(a.shape, b.shape)) {
        out.data.resize(a.numel());
        const long N = a.shape.n(), C = a.shape.c(), HW = a.shape.h() * a.shape.w();
        const S* pa = a.ptr();
        const S* pb = b.ptr();
        S* po = out.ptr();
        for (long n = 0; n < N; ++n)
            for (long c = 0; c < C; ++c) {
                const S bv = pb[c];
                const long base = (n * C + c) * HW;
                for (long i = 0; i < HW; ++i) po[base + i] = detail::apply_op(op, pa[base + i], bv);
            }
        return out;
    }
    throw ShapeError("ewise: incompatible shapes " + a.shape.str() + " vs " + b.shape.str());
}

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) { return ewise(EwiseOp::add, a, b); }
template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) { return ewise(EwiseOp::sub, a, b); }
template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) { return ewise(EwiseOp::mul, a, b); }
template <class S>
Tensor<S> emax(const Tensor<S>& a, const Tensor<S>& b) { return ewise(EwiseOp::max, a, b); }

// Reduce over the given axes; reduced extents collapse to 1. An empty
// axis list reduces over every axis. Accumulation is sequential over
// the row-major element order, in double.
template <class S>
Tensor<S> reduce(ReduceOp op, const Tensor<S>& x, std::vector<int> axes) {
    const int rank = x.shape.rank();
    if (axes.empty())
        for (int i = 0; i < rank; ++i) axes.push_back(i);
    std::vector<bool> reduced(static_cast<std::size_t>(rank), false);
    for (int a : axes) {
        if (a < 0 || a >= rank) throw ShapeError("reduce: axis " + std::to_string(a) + " invalid for rank " + std::to_string(rank));
        if (reduced[static_cast<std::size_t>(a)]) throw ShapeError("reduce: duplicate axis " + std::to_string(a));
        reduced[static_cast<std::size_t>(a)] = true;
    }

    std::vector<long> out_dims;
    long count = 1;
    for (int i = 0; i < rank; ++i) {
        if (reduced[static_cast<std::size_t>(i)]) {
            out_dims.push_back(1);
            count *= x.shape.dim(i);
        } else {
            out_dims.push_back(x.shape.dim(i));
        }
    }

    Shape out_shape(out_dims);
    std::vector<double> acc(static_cast<std::size_t>(out_shape.numel()), 0.0);

    // Row-major strides of the output, with reduced axes pinned at 0.
    std::array<long, 4> ostride{0, 0, 0, 0};
    {
        long s = 1;
        for (int i = rank - 1; i >= 0; --i) {
            ostride[static_cast<std::size_t>(i)] = reduced[static_cast<std::size_t>(i)] ? 0 : s;
            s *= out_shape.dim(i);
        }
    }

    std::array<long, 4> coord{0, 0, 0, 0};
    const S* px = x.ptr();
    const long n = x.numel();
    for (long flat = 0; flat < n; ++flat) {
        long oi = 0;
        for (int i = 0; i < rank; ++i) oi += coord[static_cast<std::size_t>(i)] * ostride[static_cast<std::size_t>(i)];
        acc[static_cast<std::size_t>(oi)] += static_cast<double>(px[flat]);
        for (int i = rank - 1; i >= 0; --i) {
            if (++coord[static_cast<std::size_t>(i)] < x.shape.dim(i)) break;
            coord[static_cast<std::size_t>(i)] = 0;
        }
    }

    Tensor<S> out;
    out.shape = out_shape;
    out.data.resize(out_shape.numel());
    const double scale = op == ReduceOp::mean ? 1.0 / static_cast<double>(count) : 1.0;
    for (long i = 0; i < out.numel(); ++i) out.data[i] = static_cast<S>(acc[static_cast<std::size_t>(i)] * scale);
    return out;
}

template <class S>
Tensor<S> reduce_sum(const Tensor<S>& x, std::vector<int> axes = {}) { return reduce(ReduceOp::sum, x, std::move(axes)); }
template <class S>
Tensor<S> reduce_mean(const Tensor<S>& x, std::vector<int> axes = {}) { return reduce(ReduceOp::mean, x, std::move(axes)); }

// i.i.d. normal fill in flat element order.
template <class S>
Tensor<S> rand_normal(Rng& rng, const Shape& shape, double mean, double std) {
    Tensor<S> out;
    out.shape = shape;
    out.data.resize(shape.numel());
    for (long i = 0; i < out.numel(); ++i) out.data[i] = static_cast<S>(rng.normal(mean, std));
    return out;
}

template <class S>
Tensor<S> rand_uniform(Rng& rng, const Shape& shape, double lo, double hi) {
    Tensor<S> out;
    out.shape = shape;
    out.data.resize(shape.numel());
    for (long i = 0; i < out.numel(); ++i) out.data[i] = static_cast<S>(rng.uniform(lo, hi));
    return out;
}

template <class S>
double max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape != b.shape) throw ShapeError("max_abs_diff: shapes " + a.shape.str() + " vs " + b.shape.str());
    double m = 0;
    for (long i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

}  // namespace drk
