#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "drk/errors.hpp"
#include "drk/tensor.hpp"

// Differentiable building blocks. Every backward here is analytic and is
// validated against the finite-difference oracle in the test suites.
// Convolutions run as im2col + Eigen GEMM with double accumulation; all
// loops have a fixed element order so results are reproducible run to run
// and independent of the thread count.

namespace drk {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

template <class S>
struct Conv2dParams {
    Tensor<S> weight;  // [C_out, C_in, k, k]
    Tensor<S> bias;    // [C_out]
    int stride = 1;
    int padding = 0;

    long c_out() const { return weight.shape.dim(0); }
    long c_in() const { return weight.shape.dim(1); }
    long k() const { return weight.shape.dim(2); }
};

template <class S>
struct Conv2dGrads {
    Tensor<S> x;
    Tensor<S> weight;
    Tensor<S> bias;
};

namespace detail {

template <class S>
void validate_conv(const Tensor<S>& x, const Conv2dParams<S>& p) {
    if (x.shape.rank() != 4) throw ShapeError("conv2d: input must be rank 4, got " + x.shape.str());
    if (p.weight.shape.rank() != 4) throw ShapeError("conv2d: weight must be rank 4, got " + p.weight.shape.str());
    if (p.weight.shape.dim(2) != p.weight.shape.dim(3)) throw ShapeError("conv2d: kernel must be square, got " + p.weight.shape.str());
    if (p.bias.shape.rank() != 1 || p.bias.shape.dim(0) != p.c_out())
        throw ShapeError("conv2d: bias shape " + p.bias.shape.str() + " does not match C_out " + std::to_string(p.c_out()));
    if (x.shape.c() != p.c_in())
        throw ShapeError("conv2d: input has " + std::to_string(x.shape.c()) + " channels, weight expects " + std::to_string(p.c_in()));
    if (p.stride < 1) throw ShapeError("conv2d: stride must be >= 1");
    if (p.padding < 0) throw ShapeError("conv2d: padding must be >= 0");
}

inline long conv_out_extent(long in, long k, int stride, int padding) {
    return (in + 2 * padding - k) / stride + 1;
}

// Column matrix for one sample: [C_in*k*k x Ho*Wo], zero padding.
template <class S>
void im2col(const S* x, long C, long H, long W, long k, int stride, int pad, long Ho, long Wo, MatX& col) {
    for (long i = 0; i < Ho; ++i) {
        for (long j = 0; j < Wo; ++j) {
            const long pos = i * Wo + j;
            double* out = col.col(pos).data();
            long row = 0;
            for (long c = 0; c < C; ++c) {
                const S* plane = x + c * H * W;
                for (long u = 0; u < k; ++u) {
                    const long iy = i * stride + u - pad;
                    if (iy < 0 || iy >= H) {
                        for (long v = 0; v < k; ++v) out[row++] = 0.0;
                        continue;
                    }
                    const S* rowp = plane + iy * W;
                    for (long v = 0; v < k; ++v) {
                        const long ix = j * stride + v - pad;
                        out[row++] = (ix < 0 || ix >= W) ? 0.0 : static_cast<double>(rowp[ix]);
                    }
                }
            }
        }
    }
}

template <class S>
void col2im_add(const MatX& colgrad, S* gx, long C, long H, long W, long k, int stride, int pad, long Ho, long Wo) {
    for (long i = 0; i < Ho; ++i) {
        for (long j = 0; j < Wo; ++j) {
            const long pos = i * Wo + j;
            const double* g = colgrad.col(pos).data();
            long row = 0;
            for (long c = 0; c < C; ++c) {
                S* plane = gx + c * H * W;
                for (long u = 0; u < k; ++u) {
                    const long iy = i * stride + u - pad;
                    for (long v = 0; v < k; ++v, ++row) {
                        const long ix = j * stride + v - pad;
                        if (iy >= 0 && iy < H && ix >= 0 && ix < W) plane[iy * W + ix] += static_cast<S>(g[row]);
                    }
                }
            }
        }
    }
}

template <class S>
MatX weight_matrix(const Conv2dParams<S>& p) {
    const long Co = p.c_out(), ckk = p.c_in() * p.k() * p.k();
    MatX Wm(Co, ckk);
    for (long o = 0; o < Co; ++o)
        for (long r = 0; r < ckk; ++r) Wm(o, r) = static_cast<double>(p.weight.data[o * ckk + r]);
    return Wm;
}

}  // namespace detail

// out[n,o,i,j] = bias[o] + sum_{c,u,v} w[o,c,u,v] * x_pad[n,c, i*s+u-pad, j*s+v-pad]
template <class S>
Tensor<S> conv2d_fwd(const Tensor<S>& x, const Conv2dParams<S>& p) {
    detail::validate_conv(x, p);
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long Co = p.c_out(), k = p.k();
    const long Ho = detail::conv_out_extent(H, k, p.stride, p.padding);
    const long Wo = detail::conv_out_extent(W, k, p.stride, p.padding);
    if (Ho < 1 || Wo < 1) throw ShapeError("conv2d: output extent < 1 for input " + x.shape.str());

    Tensor<S> y = Tensor<S>::zeros(Shape{N, Co, Ho, Wo});
    const MatX Wm = detail::weight_matrix(p);
    VecX bv(Co);
    for (long o = 0; o < Co; ++o) bv[o] = static_cast<double>(p.bias.data[o]);

#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
        MatX col(C * k * k, Ho * Wo);
        detail::im2col(x.ptr() + n * C * H * W, C, H, W, k, p.stride, p.padding, Ho, Wo, col);
        MatX out = Wm * col;
        out.colwise() += bv;
        S* py = y.ptr() + n * Co * Ho * Wo;
        for (long o = 0; o < Co; ++o)
            for (long pos = 0; pos < Ho * Wo; ++pos) py[o * Ho * Wo + pos] = static_cast<S>(out(o, pos));
    }
    return y;
}

template <class S>
Conv2dGrads<S> conv2d_bwd(const Tensor<S>& x, const Conv2dParams<S>& p, const Tensor<S>& grad_out) {
    detail::validate_conv(x, p);
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long Co = p.c_out(), k = p.k();
    const long Ho = detail::conv_out_extent(H, k, p.stride, p.padding);
    const long Wo = detail::conv_out_extent(W, k, p.stride, p.padding);
    if (grad_out.shape != Shape{N, Co, Ho, Wo})
        throw ShapeError("conv2d_bwd: grad shape " + grad_out.shape.str() + " does not match output");

    Conv2dGrads<S> g;
    g.x = Tensor<S>::zeros(x.shape);
    g.weight = Tensor<S>::zeros(p.weight.shape);
    g.bias = Tensor<S>::zeros(p.bias.shape);

    const MatX Wm = detail::weight_matrix(p);
    std::vector<MatX> gw(static_cast<std::size_t>(N));
    std::vector<VecX> gb(static_cast<std::size_t>(N));

#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
        MatX col(C * k * k, Ho * Wo);
        detail::im2col(x.ptr() + n * C * H * W, C, H, W, k, p.stride, p.padding, Ho, Wo, col);
        MatX G(Co, Ho * Wo);
        const S* pg = grad_out.ptr() + n * Co * Ho * Wo;
        for (long o = 0; o < Co; ++o)
            for (long pos = 0; pos < Ho * Wo; ++pos) G(o, pos) = static_cast<double>(pg[o * Ho * Wo + pos]);
        gw[static_cast<std::size_t>(n)] = G * col.transpose();
        gb[static_cast<std::size_t>(n)] = G.rowwise().sum();
        MatX colgrad = Wm.transpose() * G;
        detail::col2im_add(colgrad, g.x.ptr() + n * C * H * W, C, H, W, k, p.stride, p.padding, Ho, Wo);
    }

    // Fixed-order reduction over the batch keeps gradients deterministic.
    const long ckk = C * k * k;
    for (long n = 0; n < N; ++n) {
        for (long o = 0; o < Co; ++o) {
            g.bias.data[o] += static_cast<S>(gb[static_cast<std::size_t>(n)][o]);
            for (long r = 0; r < ckk; ++r) g.weight.data[o * ckk + r] += static_cast<S>(gw[static_cast<std::size_t>(n)](o, r));
        }
    }
    return g;
}

template <class S>
struct LinearParams {
    Tensor<S> weight;  // [out, in]
    Tensor<S> bias;    // [out]

    long out_dim() const { return weight.shape.dim(0); }
    long in_dim() const { return weight.shape.dim(1); }
};

template <class S>
struct LinearGrads {
    Tensor<S> x;
    Tensor<S> weight;
    Tensor<S> bias;
};

template <class S>
Tensor<S> linear_fwd(const Tensor<S>& x, const LinearParams<S>& p) {
    if (x.shape.rank() != 2) throw ShapeError("linear: input must be rank 2, got " + x.shape.str());
    const long N = x.shape.dim(0), in = x.shape.dim(1), out = p.out_dim();
    if (in != p.in_dim()) throw ShapeError("linear: input dim " + std::to_string(in) + " vs weight " + p.weight.shape.str());
    Tensor<S> y = Tensor<S>::zeros(Shape{N, out});
    for (long n = 0; n < N; ++n)
        for (long o = 0; o < out; ++o) {
            double acc = static_cast<double>(p.bias.data[o]);
            for (long i = 0; i < in; ++i) acc += static_cast<double>(p.weight.data[o * in + i]) * static_cast<double>(x.data[n * in + i]);
            y.data[n * out + o] = static_cast<S>(acc);
        }
    return y;
}

template <class S>
LinearGrads<S> linear_bwd(const Tensor<S>& x, const LinearParams<S>& p, const Tensor<S>& grad_out) {
    const long N = x.shape.dim(0), in = x.shape.dim(1), out = p.out_dim();
    if (grad_out.shape != Shape{N, out}) throw ShapeError("linear_bwd: grad shape " + grad_out.shape.str());
    LinearGrads<S> g;
    g.x = Tensor<S>::zeros(x.shape);
    g.weight = Tensor<S>::zeros(p.weight.shape);
    g.bias = Tensor<S>::zeros(p.bias.shape);
    for (long n = 0; n < N; ++n)
        for (long o = 0; o < out; ++o) {
            const double go = static_cast<double>(grad_out.data[n * out + o]);
            g.bias.data[o] += static_cast<S>(go);
            for (long i = 0; i < in; ++i) {
                g.weight.data[o * in + i] += static_cast<S>(go * static_cast<double>(x.data[n * in + i]));
                g.x.data[n * in + i] += static_cast<S>(go * static_cast<double>(p.weight.data[o * in + i]));
            }
        }
    return g;
}

namespace detail {

inline double stable_sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace detail

template <class S>
Tensor<S> relu(const Tensor<S>& x) {
    Tensor<S> y;
    y.shape = x.shape;
    y.data = x.data.max(S(0));
    return y;
}

// Subgradient at 0 is 0 (active side is x > 0).
template <class S>
Tensor<S> relu_bwd(const Tensor<S>& x_pre, const Tensor<S>& grad) {
    if (x_pre.shape != grad.shape) throw ShapeError("relu_bwd: shape mismatch");
    Tensor<S> g;
    g.shape = grad.shape;
    g.data.resize(grad.numel());
    for (long i = 0; i < grad.numel(); ++i) g.data[i] = x_pre.data[i] > S(0) ? grad.data[i] : S(0);
    return g;
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& x) {
    Tensor<S> y;
    y.shape = x.shape;
    y.data.resize(x.numel());
    for (long i = 0; i < x.numel(); ++i) y.data[i] = static_cast<S>(detail::stable_sigmoid(static_cast<double>(x.data[i])));
    return y;
}

// Takes the forward output y = sigmoid(x).
template <class S>
Tensor<S> sigmoid_bwd_from_y(const Tensor<S>& y, const Tensor<S>& grad) {
    if (y.shape != grad.shape) throw ShapeError("sigmoid_bwd: shape mismatch");
    Tensor<S> g;
    g.shape = grad.shape;
    g.data = grad.data * y.data * (S(1) - y.data);
    return g;
}

enum class Act { relu, sigmoid };

template <class S>
Tensor<S> activation(Act kind, const Tensor<S>& x) {
    return kind == Act::relu ? relu(x) : sigmoid(x);
}

template <class S>
Tensor<S> activation_bwd(Act kind, const Tensor<S>& x_pre, const Tensor<S>& grad) {
    if (kind == Act::relu) return relu_bwd(x_pre, grad);
    return sigmoid_bwd_from_y(sigmoid(x_pre), grad);
}

// ---------------------------------------------------------------------------
// Bilinear sampling with zero padding. Coordinates fully outside
// [-1,H]x[-1,W] contribute 0; neighbours outside the image read as 0.

namespace detail {

template <class S>
inline double read_zero(const S* p, long H, long W, long y, long x) {
    return (y < 0 || y >= H || x < 0 || x >= W) ? 0.0 : static_cast<double>(p[y * W + x]);
}

template <class S>
inline double bilin_value(const S* p, long H, long W, double py, double px) {
    if (py <= -1.0 || py >= static_cast<double>(H) || px <= -1.0 || px >= static_cast<double>(W)) return 0.0;
    const long y0 = static_cast<long>(std::floor(py));
    const long x0 = static_cast<long>(std::floor(px));
    const double wy = py - static_cast<double>(y0);
    const double wx = px - static_cast<double>(x0);
    const double v00 = read_zero(p, H, W, y0, x0);
    const double v01 = read_zero(p, H, W, y0, x0 + 1);
    const double v10 = read_zero(p, H, W, y0 + 1, x0);
    const double v11 = read_zero(p, H, W, y0 + 1, x0 + 1);
    const double top = v00 + wx * (v01 - v00);
    const double bot = v10 + wx * (v11 - v10);
    return top + wy * (bot - top);
}

// Piecewise-linear coordinate derivatives. At exact lattice coordinates
// the left-cell sub-derivative is used, which keeps gradcheck
// deterministic (tests keep offsets off the lattice anyway).
template <class S>
inline void bilin_coord_grad(const S* p, long H, long W, double py, double px, double& dpy, double& dpx) {
    dpy = 0.0;
    dpx = 0.0;
    if (py <= -1.0 || py >= static_cast<double>(H) || px <= -1.0 || px >= static_cast<double>(W)) return;
    long y0 = static_cast<long>(std::floor(py));
    long x0 = static_cast<long>(std::floor(px));
    const double wy = py - static_cast<double>(y0);
    const double wx = px - static_cast<double>(x0);

    long y0d = (wy == 0.0) ? y0 - 1 : y0;
    long x0d = (wx == 0.0) ? x0 - 1 : x0;

    // d/dpy: difference of the two x-interpolated rows of the y-cell.
    {
        const double a0 = read_zero(p, H, W, y0d, x0);
        const double a1 = read_zero(p, H, W, y0d, x0 + 1);
        const double b0 = read_zero(p, H, W, y0d + 1, x0);
        const double b1 = read_zero(p, H, W, y0d + 1, x0 + 1);
        dpy = (b0 + wx * (b1 - b0)) - (a0 + wx * (a1 - a0));
    }
    // d/dpx: difference of the two y-interpolated columns of the x-cell.
    {
        const double a0 = read_zero(p, H, W, y0, x0d);
        const double b0 = read_zero(p, H, W, y0 + 1, x0d);
        const double a1 = read_zero(p, H, W, y0, x0d + 1);
        const double b1 = read_zero(p, H, W, y0 + 1, x0d + 1);
        dpx = (a1 + wy * (b1 - a1)) - (a0 + wy * (b0 - a0));
    }
}

// Scatter g through the sampling weights into the 4 neighbours.
template <class S>
inline void bilin_scatter(S* p, long H, long W, double py, double px, double g) {
    if (py <= -1.0 || py >= static_cast<double>(H) || px <= -1.0 || px >= static_cast<double>(W)) return;
    const long y0 = static_cast<long>(std::floor(py));
    const long x0 = static_cast<long>(std::floor(px));
    const double wy = py - static_cast<double>(y0);
    const double wx = px - static_cast<double>(x0);
    const bool y0in = y0 >= 0 && y0 < H, y1in = y0 + 1 >= 0 && y0 + 1 < H;
    const bool x0in = x0 >= 0 && x0 < W, x1in = x0 + 1 >= 0 && x0 + 1 < W;
    if (y0in && x0in) p[y0 * W + x0] += static_cast<S>(g * (1.0 - wy) * (1.0 - wx));
    if (y0in && x1in) p[y0 * W + x0 + 1] += static_cast<S>(g * (1.0 - wy) * wx);
    if (y1in && x0in) p[(y0 + 1) * W + x0] += static_cast<S>(g * wy * (1.0 - wx));
    if (y1in && x1in) p[(y0 + 1) * W + x0 + 1] += static_cast<S>(g * wy * wx);
}

}  // namespace detail

template <class S>
S bilinear_sample(const Tensor<S>& x, long n, long c, double py, double px) {
    if (x.shape.rank() != 4) throw ShapeError("bilinear_sample: input must be rank 4");
    const long H = x.shape.h(), W = x.shape.w();
    const S* plane = x.ptr() + (n * x.shape.c() + c) * H * W;
    return static_cast<S>(detail::bilin_value(plane, H, W, py, px));
}

// ---------------------------------------------------------------------------
// Bilinear upsampling, align-corners-false: src = (dst + 0.5)/factor - 0.5,
// source coordinates clamped to the image (border replicate). Outputs are
// convex combinations of inputs, so min/max bounds are preserved.

namespace detail {

struct UpsampleTable {
    std::vector<long> i0, i1;
    std::vector<double> w;  // weight of i1
};

inline UpsampleTable upsample_table(long out, long in, int factor) {
    UpsampleTable t;
    t.i0.resize(static_cast<std::size_t>(out));
    t.i1.resize(static_cast<std::size_t>(out));
    t.w.resize(static_cast<std::size_t>(out));
    for (long d = 0; d < out; ++d) {
        double s = (static_cast<double>(d) + 0.5) / static_cast<double>(factor) - 0.5;
        if (s < 0) s = 0;
        const double maxc = static_cast<double>(in - 1);
        if (s > maxc) s = maxc;
        long i0 = static_cast<long>(std::floor(s));
        t.i0[static_cast<std::size_t>(d)] = i0;
        t.i1[static_cast<std::size_t>(d)] = i0 + 1 < in ? i0 + 1 : in - 1;
        t.w[static_cast<std::size_t>(d)] = s - static_cast<double>(i0);
    }
    return t;
}

}  // namespace detail

template <class S>
Tensor<S> upsample_bilinear(const Tensor<S>& x, int factor) {
    if (x.shape.rank() != 4) throw ShapeError("upsample_bilinear: input must be rank 4");
    if (factor < 1) throw ValueError("upsample_bilinear: factor must be >= 1");
    if (factor == 1) return x;
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long Ho = H * factor, Wo = W * factor;
    const auto ty = detail::upsample_table(Ho, H, factor);
    const auto tx = detail::upsample_table(Wo, W, factor);
    Tensor<S> y = Tensor<S>::zeros(Shape{N, C, Ho, Wo});
#pragma omp parallel for schedule(static)
    for (long nc = 0; nc < N * C; ++nc) {
        const S* src = x.ptr() + nc * H * W;
        S* dst = y.ptr() + nc * Ho * Wo;
        for (long i = 0; i < Ho; ++i) {
            const long y0 = ty.i0[static_cast<std::size_t>(i)], y1 = ty.i1[static_cast<std::size_t>(i)];
            const double wy = ty.w[static_cast<std::size_t>(i)];
            for (long j = 0; j < Wo; ++j) {
                const long x0 = tx.i0[static_cast<std::size_t>(j)], x1 = tx.i1[static_cast<std::size_t>(j)];
                const double wx = tx.w[static_cast<std::size_t>(j)];
                const double a = static_cast<double>(src[y0 * W + x0]);
                const double b = static_cast<double>(src[y0 * W + x1]);
                const double c = static_cast<double>(src[y1 * W + x0]);
                const double d = static_cast<double>(src[y1 * W + x1]);
                const double top = a + wx * (b - a);
                const double bot = c + wx * (d - c);
                dst[i * Wo + j] = static_cast<S>(top + wy * (bot - top));
            }
        }
    }
    return y;
}

template <class S>
Tensor<S> upsample_bilinear_bwd(const Tensor<S>& grad_out, long in_h, long in_w, int factor) {
    if (factor < 1) throw ValueError("upsample_bilinear_bwd: factor must be >= 1");
    if (factor == 1) return grad_out;
    const long N = grad_out.shape.n(), C = grad_out.shape.c(), Ho = grad_out.shape.h(), Wo = grad_out.shape.w();
    if (Ho != in_h * factor || Wo != in_w * factor) throw ShapeError("upsample_bilinear_bwd: grad shape " + grad_out.shape.str());
    const auto ty = detail::upsample_table(Ho, in_h, factor);
    const auto tx = detail::upsample_table(Wo, in_w, factor);
    Tensor<S> gx = Tensor<S>::zeros(Shape{N, C, in_h, in_w});
#pragma omp parallel for schedule(static)
    for (long nc = 0; nc < N * C; ++nc) {
        const S* g = grad_out.ptr() + nc * Ho * Wo;
        S* dst = gx.ptr() + nc * in_h * in_w;
        for (long i = 0; i < Ho; ++i) {
            const long y0 = ty.i0[static_cast<std::size_t>(i)], y1 = ty.i1[static_cast<std::size_t>(i)];
            const double wy = ty.w[static_cast<std::size_t>(i)];
            for (long j = 0; j < Wo; ++j) {
                const long x0 = tx.i0[static_cast<std::size_t>(j)], x1 = tx.i1[static_cast<std::size_t>(j)];
                const double wx = tx.w[static_cast<std::size_t>(j)];
                const double gv = static_cast<double>(g[i * Wo + j]);
                dst[y0 * in_w + x0] += static_cast<S>(gv * (1.0 - wy) * (1.0 - wx));
                dst[y0 * in_w + x1] += static_cast<S>(gv * (1.0 - wy) * wx);
                dst[y1 * in_w + x0] += static_cast<S>(gv * wy * (1.0 - wx));
                dst[y1 * in_w + x1] += static_cast<S>(gv * wy * wx);
            }
        }
    }
    return gx;
}

// Global average pooling: [N,C,H,W] -> [N,C].
template <class S>
Tensor<S> gap(const Tensor<S>& x) {
    if (x.shape.rank() != 4) throw ShapeError("gap: input must be rank 4");
    const long N = x.shape.n(), C = x.shape.c(), HW = x.shape.h() * x.shape.w();
    Tensor<S> y = Tensor<S>::zeros(Shape{N, C});
    for (long nc = 0; nc < N * C; ++nc) {
        const S* p = x.ptr() + nc * HW;
        double acc = 0;
        for (long i = 0; i < HW; ++i) acc += static_cast<double>(p[i]);
        y.data[nc] = static_cast<S>(acc / static_cast<double>(HW));
    }
    return y;
}

template <class S>
Tensor<S> gap_bwd(const Tensor<S>& grad_pooled, long H, long W) {
    const long N = grad_pooled.shape.dim(0), C = grad_pooled.shape.dim(1);
    Tensor<S> g = Tensor<S>::zeros(Shape{N, C, H, W});
    const double inv = 1.0 / static_cast<double>(H * W);
    for (long nc = 0; nc < N * C; ++nc) {
        const S v = static_cast<S>(static_cast<double>(grad_pooled.data[nc]) * inv);
        S* p = g.ptr() + nc * H * W;
        for (long i = 0; i < H * W; ++i) p[i] = v;
    }
    return g;
}

// normal(0, sqrt(2/fan_in)) draws.
template <class S>
Tensor<S> kaiming_init(Rng& rng, const Shape& shape, long fan_in) {
    if (fan_in < 1) throw ValueError("kaiming_init: fan_in must be >= 1");
    return rand_normal<S>(rng, shape, 0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

}  // namespace drk
