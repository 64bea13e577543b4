#pragma once

#include <utility>

#include "drk/layers.hpp"

// Deformable-attentive enhancement path: deformable convolution with a
// learned offset branch, squeeze-excitation channel recalibration, a
// bilinear-upsampled residual shortcut, and a text-conditioned dynamic
// 1x1 convolution. Backwards are analytic; the deformable backward
// differentiates the bilinear sampler w.r.t. both values and coordinates.

namespace drk {

// Offsets layout: channel 2t is the y offset and 2t+1 the x offset of tap
// t = u*k + v. Sampling position for output (i,j) at tap (u,v):
//   py = i*stride + u - padding + dy,  px = j*stride + v - padding + dx.
template <class S>
struct DeformConvParams {
    Conv2dParams<S> main;            // [C_out, C_in, k, k]
    Conv2dParams<S> offset_branch;   // [2*k*k, C_in, k, k], same geometry

    long c_out() const { return main.c_out(); }
    long k() const { return main.k(); }
};

template <class S>
struct DeformConvOut {
    Tensor<S> y;
    Tensor<S> offsets;  // [N, 2*k*k, Ho, Wo]
};

template <class S>
struct DeformConvGrads {
    Tensor<S> x;
    Tensor<S> main_weight, main_bias;
    Tensor<S> offset_weight, offset_bias;
};

namespace detail {

template <class S>
void validate_deform(const Tensor<S>& x, const DeformConvParams<S>& p) {
    validate_conv(x, p.main);
    validate_conv(x, p.offset_branch);
    const long k = p.main.k();
    if (p.offset_branch.c_out() != 2 * k * k)
        throw ShapeError("deform_conv: offset branch has " + std::to_string(p.offset_branch.c_out()) +
                         " output channels, expected " + std::to_string(2 * k * k));
    if (p.offset_branch.k() != k || p.offset_branch.stride != p.main.stride || p.offset_branch.padding != p.main.padding)
        throw ShapeError("deform_conv: offset branch geometry does not match main conv");
}

// Column matrix with bilinearly sampled taps; zero offsets reproduce
// im2col bit for bit.
template <class S>
void deform_im2col(const S* x, const S* off, long C, long H, long W, long k, int stride, int pad, long Ho, long Wo,
                   MatX& col) {
    const long npos = Ho * Wo;
    for (long i = 0; i < Ho; ++i) {
        for (long j = 0; j < Wo; ++j) {
            const long pos = i * Wo + j;
            double* out = col.col(pos).data();
            long row = 0;
            for (long c = 0; c < C; ++c) {
                const S* plane = x + c * H * W;
                for (long u = 0; u < k; ++u) {
                    for (long v = 0; v < k; ++v) {
                        const long t = u * k + v;
                        const double py = static_cast<double>(i * stride + u - pad) + static_cast<double>(off[(2 * t) * npos + pos]);
                        const double px = static_cast<double>(j * stride + v - pad) + static_cast<double>(off[(2 * t + 1) * npos + pos]);
                        out[row++] = bilin_value(plane, H, W, py, px);
                    }
                }
            }
        }
    }
}

}  // namespace detail

template <class S>
DeformConvOut<S> deform_conv_fwd(const Tensor<S>& x, const DeformConvParams<S>& p) {
    detail::validate_deform(x, p);
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long Co = p.c_out(), k = p.k();
    const long Ho = detail::conv_out_extent(H, k, p.main.stride, p.main.padding);
    const long Wo = detail::conv_out_extent(W, k, p.main.stride, p.main.padding);
    if (Ho < 1 || Wo < 1) throw ShapeError("deform_conv: output extent < 1 for input " + x.shape.str());

    DeformConvOut<S> out;
    out.offsets = conv2d_fwd(x, p.offset_branch);
    out.y = Tensor<S>::zeros(Shape{N, Co, Ho, Wo});

    const MatX Wm = detail::weight_matrix(p.main);
    VecX bv(Co);
    for (long o = 0; o < Co; ++o) bv[o] = static_cast<double>(p.main.bias.data[o]);

#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
        MatX col(C * k * k, Ho * Wo);
        detail::deform_im2col(x.ptr() + n * C * H * W, out.offsets.ptr() + n * 2 * k * k * Ho * Wo, C, H, W, k,
                              p.main.stride, p.main.padding, Ho, Wo, col);
        MatX ym = Wm * col;
        ym.colwise() += bv;
        S* py = out.y.ptr() + n * Co * Ho * Wo;
        for (long o = 0; o < Co; ++o)
            for (long pos = 0; pos < Ho * Wo; ++pos) py[o * Ho * Wo + pos] = static_cast<S>(ym(o, pos));
    }
    return out;
}

// Overload taking the forward pass's offset maps, so callers holding them
// skip one offset-branch evaluation. Results are identical either way.
template <class S>
DeformConvGrads<S> deform_conv_bwd(const Tensor<S>& x, const Tensor<S>& offsets, const DeformConvParams<S>& p,
                                   const Tensor<S>& grad_y) {
    detail::validate_deform(x, p);
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long Co = p.c_out(), k = p.k();
    const long Ho = detail::conv_out_extent(H, k, p.main.stride, p.main.padding);
    const long Wo = detail::conv_out_extent(W, k, p.main.stride, p.main.padding);
    if (grad_y.shape != Shape{N, Co, Ho, Wo})
        throw ShapeError("deform_conv_bwd: grad shape " + grad_y.shape.str() + " does not match output");
    if (offsets.shape != Shape{N, 2 * k * k, Ho, Wo})
        throw ShapeError("deform_conv_bwd: offsets shape " + offsets.shape.str() + " does not match output");

    Tensor<S> grad_offsets = Tensor<S>::zeros(offsets.shape);

    DeformConvGrads<S> g;
    g.x = Tensor<S>::zeros(x.shape);
    g.main_weight = Tensor<S>::zeros(p.main.weight.shape);
    g.main_bias = Tensor<S>::zeros(p.main.bias.shape);

    const MatX Wm = detail::weight_matrix(p.main);
    const long npos = Ho * Wo, stride = p.main.stride, pad = p.main.padding;
    std::vector<MatX> gw(static_cast<std::size_t>(N));
    std::vector<VecX> gb(static_cast<std::size_t>(N));

#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
        const S* xp = x.ptr() + n * C * H * W;
        const S* off = offsets.ptr() + n * 2 * k * k * npos;
        MatX col(C * k * k, npos);
        detail::deform_im2col(xp, off, C, H, W, k, static_cast<int>(stride), static_cast<int>(pad), Ho, Wo, col);
        MatX G(Co, npos);
        const S* pg = grad_y.ptr() + n * Co * npos;
        for (long o = 0; o < Co; ++o)
            for (long pos = 0; pos < npos; ++pos) G(o, pos) = static_cast<double>(pg[o * npos + pos]);
        gw[static_cast<std::size_t>(n)] = G * col.transpose();
        gb[static_cast<std::size_t>(n)] = G.rowwise().sum();

        MatX colgrad = Wm.transpose() * G;
        MatX goff = MatX::Zero(2 * k * k, npos);
        S* gxp = g.x.ptr() + n * C * H * W;
        for (long i = 0; i < Ho; ++i) {
            for (long j = 0; j < Wo; ++j) {
                const long pos = i * Wo + j;
                long row = 0;
                for (long c = 0; c < C; ++c) {
                    const S* plane = xp + c * H * W;
                    S* gplane = gxp + c * H * W;
                    for (long u = 0; u < k; ++u) {
                        for (long v = 0; v < k; ++v, ++row) {
                            const long t = u * k + v;
                            const double py = static_cast<double>(i * stride + u - pad) + static_cast<double>(off[(2 * t) * npos + pos]);
                            const double px = static_cast<double>(j * stride + v - pad) + static_cast<double>(off[(2 * t + 1) * npos + pos]);
                            const double gval = colgrad(row, pos);
                            detail::bilin_scatter(gplane, H, W, py, px, gval);
                            double dpy, dpx;
                            detail::bilin_coord_grad(plane, H, W, py, px, dpy, dpx);
                            goff(2 * t, pos) += gval * dpy;
                            goff(2 * t + 1, pos) += gval * dpx;
                        }
                    }
                }
            }
        }
        S* gop = grad_offsets.ptr() + n * 2 * k * k * npos;
        for (long ch = 0; ch < 2 * k * k; ++ch)
            for (long pos = 0; pos < npos; ++pos) gop[ch * npos + pos] = static_cast<S>(goff(ch, pos));
    }

    const long ckk = C * k * k;
    for (long n = 0; n < N; ++n) {
        for (long o = 0; o < Co; ++o) {
            g.main_bias.data[o] += static_cast<S>(gb[static_cast<std::size_t>(n)][o]);
            for (long r = 0; r < ckk; ++r) g.main_weight.data[o * ckk + r] += static_cast<S>(gw[static_cast<std::size_t>(n)](o, r));
        }
    }

    // Second x contribution flows through the offset branch.
    Conv2dGrads<S> og = conv2d_bwd(x, p.offset_branch, grad_offsets);
    g.x.data += og.x.data;
    g.offset_weight = std::move(og.weight);
    g.offset_bias = std::move(og.bias);
    return g;
}

template <class S>
DeformConvGrads<S> deform_conv_bwd(const Tensor<S>& x, const DeformConvParams<S>& p, const Tensor<S>& grad_y) {
    detail::validate_deform(x, p);
    return deform_conv_bwd(x, conv2d_fwd(x, p.offset_branch), p, grad_y);
}

// ---------------------------------------------------------------------------
// Squeeze-excitation: s = sigmoid(fc2(relu(fc1(gap(x))))), y = s (.) x.

template <class S>
struct SeParams {
    LinearParams<S> fc1;  // [hidden, C]
    LinearParams<S> fc2;  // [C, hidden]
    int reduction = 16;
};

template <class S>
struct SeOut {
    Tensor<S> x_sc;
    Tensor<S> s;  // [N, C], every element strictly in (0,1)
};

template <class S>
struct SeGrads {
    Tensor<S> x;
    Tensor<S> fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

inline long se_hidden_dim(long channels, int reduction) {
    if (reduction < 1) throw ValueError("se: reduction must be >= 1");
    return (channels + reduction - 1) / reduction;
}

namespace detail {

template <class S>
void validate_se(const Tensor<S>& x, const SeParams<S>& p) {
    if (x.shape.rank() != 4) throw ShapeError("se: input must be rank 4");
    const long C = x.shape.c();
    if (p.fc1.in_dim() != C) throw ShapeError("se: fc1 expects " + std::to_string(p.fc1.in_dim()) + " channels, input has " + std::to_string(C));
    if (p.fc2.in_dim() != p.fc1.out_dim()) throw ShapeError("se: fc2 input dim does not match fc1 output");
    if (p.fc2.out_dim() != C) throw ShapeError("se: fc2 must emit one scale per channel");
}

}  // namespace detail

template <class S>
SeOut<S> se_fwd(const Tensor<S>& x, const SeParams<S>& p) {
    detail::validate_se(x, p);
    const long N = x.shape.n(), C = x.shape.c(), HW = x.shape.h() * x.shape.w();
    SeOut<S> out;
    Tensor<S> pooled = gap(x);
    Tensor<S> h = relu(linear_fwd(pooled, p.fc1));
    out.s = sigmoid(linear_fwd(h, p.fc2));
    out.x_sc.shape = x.shape;
    out.x_sc.data.resize(x.numel());
    for (long nc = 0; nc < N * C; ++nc) {
        const S scale = out.s.data[nc];
        const S* src = x.ptr() + nc * HW;
        S* dst = out.x_sc.ptr() + nc * HW;
        for (long i = 0; i < HW; ++i) dst[i] = scale * src[i];
    }
    return out;
}

template <class S>
SeGrads<S> se_bwd(const Tensor<S>& x, const SeParams<S>& p, const Tensor<S>& grad_out) {
    detail::validate_se(x, p);
    if (grad_out.shape != x.shape) throw ShapeError("se_bwd: grad shape " + grad_out.shape.str());
    const long N = x.shape.n(), C = x.shape.c(), H = x.shape.h(), W = x.shape.w();
    const long HW = H * W;

    Tensor<S> pooled = gap(x);
    Tensor<S> h_pre = linear_fwd(pooled, p.fc1);
    Tensor<S> h = relu(h_pre);
    Tensor<S> s = sigmoid(linear_fwd(h, p.fc2));

    SeGrads<S> g;
    g.x = Tensor<S>::zeros(x.shape);
    Tensor<S> grad_s = Tensor<S>::zeros(Shape{N, C});
    for (long nc = 0; nc < N * C; ++nc) {
        const S scale = s.data[nc];
        const S* xp = x.ptr() + nc * HW;
        const S* gp = grad_out.ptr() + nc * HW;
        S* gxp = g.x.ptr() + nc * HW;
        double acc = 0;
        for (long i = 0; i < HW; ++i) {
            gxp[i] = scale * gp[i];
            acc += static_cast<double>(gp[i]) * static_cast<double>(xp[i]);
        }
        grad_s.data[nc] = static_cast<S>(acc);
    }

    Tensor<S> gs_pre = sigmoid_bwd_from_y(s, grad_s);
    LinearGrads<S> l2 = linear_bwd(h, p.fc2, gs_pre);
    Tensor<S> gh_pre = relu_bwd(h_pre, l2.x);
    LinearGrads<S> l1 = linear_bwd(pooled, p.fc1, gh_pre);
    Tensor<S> gpool = gap_bwd(l1.x, H, W);
    g.x.data += gpool.data;

    g.fc1_weight = std::move(l1.weight);
    g.fc1_bias = std::move(l1.bias);
    g.fc2_weight = std::move(l2.weight);
    g.fc2_bias = std::move(l2.bias);
    return g;
}

// ---------------------------------------------------------------------------
// Residual fusion: out = x_se + shortcut_conv(upsample_bilinear(x, factor)).

template <class S>
struct ResidualParams {
    Conv2dParams<S> shortcut;  // 1x1, stride 1, padding 0
    int factor = 1;
};

template <class S>
struct ResidualGrads {
    Tensor<S> x;
    Tensor<S> x_se;
    Tensor<S> shortcut_weight, shortcut_bias;
};

namespace detail {

template <class S>
void validate_residual(const ResidualParams<S>& p) {
    if (p.shortcut.k() != 1 || p.shortcut.stride != 1 || p.shortcut.padding != 0)
        throw ShapeError("residual: shortcut conv must be 1x1, stride 1, padding 0");
    if (p.factor < 1) throw ValueError("residual: upsample factor must be >= 1");
}

}  // namespace detail

template <class S>
Tensor<S> residual_fuse(const Tensor<S>& x, const Tensor<S>& x_se, const ResidualParams<S>& p) {
    detail::validate_residual(p);
    Tensor<S> x_res = conv2d_fwd(upsample_bilinear(x, p.factor), p.shortcut);
    if (x_res.shape != x_se.shape)
        throw ShapeError("residual: shortcut output " + x_res.shape.str() + " does not match main path " + x_se.shape.str());
    Tensor<S> out;
    out.shape = x_se.shape;
    out.data = x_se.data + x_res.data;
    return out;
}

template <class S>
ResidualGrads<S> residual_fuse_bwd(const Tensor<S>& x, const ResidualParams<S>& p, const Tensor<S>& grad_out) {
    detail::validate_residual(p);
    Tensor<S> x_up = upsample_bilinear(x, p.factor);
    Conv2dGrads<S> cg = conv2d_bwd(x_up, p.shortcut, grad_out);
    ResidualGrads<S> g;
    g.x = upsample_bilinear_bwd(cg.x, x.shape.h(), x.shape.w(), p.factor);
    g.x_se = grad_out;
    g.shortcut_weight = std::move(cg.weight);
    g.shortcut_bias = std::move(cg.bias);
    return g;
}

// ---------------------------------------------------------------------------
// Full block: x -> upsample(factor) -> deform conv -> SE -> + shortcut(x).
// The shared factor lives in ResidualParams so both paths emit
// [N, C_out, factor*H, factor*W].

template <class S>
struct EnhanceParams {
    DeformConvParams<S> deform;
    SeParams<S> se;
    ResidualParams<S> residual;
};

template <class S>
struct EnhanceGrads {
    Tensor<S> x;
    Tensor<S> main_weight, main_bias, offset_weight, offset_bias;
    Tensor<S> fc1_weight, fc1_bias, fc2_weight, fc2_bias;
    Tensor<S> shortcut_weight, shortcut_bias;
};

template <class S>
Tensor<S> enhance_block_fwd(const Tensor<S>& x, const EnhanceParams<S>& p) {
    Tensor<S> x_up = upsample_bilinear(x, p.residual.factor);
    DeformConvOut<S> d = deform_conv_fwd(x_up, p.deform);
    SeOut<S> se = se_fwd(d.y, p.se);
    return residual_fuse(x, se.x_sc, p.residual);
}

template <class S>
EnhanceGrads<S> enhance_block_bwd(const Tensor<S>& x, const EnhanceParams<S>& p, const Tensor<S>& grad_out) {
    Tensor<S> x_up = upsample_bilinear(x, p.residual.factor);
    DeformConvOut<S> d = deform_conv_fwd(x_up, p.deform);

    ResidualGrads<S> rg = residual_fuse_bwd(x, p.residual, grad_out);
    SeGrads<S> sg = se_bwd(d.y, p.se, rg.x_se);
    DeformConvGrads<S> dg = deform_conv_bwd(x_up, p.deform, sg.x);
    Tensor<S> gx_main = upsample_bilinear_bwd(dg.x, x.shape.h(), x.shape.w(), p.residual.factor);

    EnhanceGrads<S> g;
    g.x = std::move(rg.x);
    g.x.data += gx_main.data;
    g.main_weight = std::move(dg.main_weight);
    g.main_bias = std::move(dg.main_bias);
    g.offset_weight = std::move(dg.offset_weight);
    g.offset_bias = std::move(dg.offset_bias);
    g.fc1_weight = std::move(sg.fc1_weight);
    g.fc1_bias = std::move(sg.fc1_bias);
    g.fc2_weight = std::move(sg.fc2_weight);
    g.fc2_bias = std::move(sg.fc2_bias);
    g.shortcut_weight = std::move(rg.shortcut_weight);
    g.shortcut_bias = std::move(rg.shortcut_bias);
    return g;
}

// ---------------------------------------------------------------------------
// Language-modulated dynamic convolution: one linear map turns each text
// embedding into a per-sample 1x1 kernel plus bias. Generated vector
// layout: C_out*C_in kernel entries (output-major), then C_out biases.
// C_out is recovered from kernel_gen's output width and the input's
// channel count.

template <class S>
struct DynConvParams {
    LinearParams<S> kernel_gen;  // [C_out*(C_in+1), D]
};

template <class S>
struct DynConvGrads {
    Tensor<S> x;
    Tensor<S> emb;
    Tensor<S> gen_weight, gen_bias;
};

namespace detail {

template <class S>
long dyn_c_out(const Tensor<S>& x, const Tensor<S>& emb, const DynConvParams<S>& p) {
    if (x.shape.rank() != 4) throw ShapeError("dyn_conv: input must be rank 4");
    if (emb.shape.rank() != 2) throw ShapeError("dyn_conv: embedding must be rank 2");
    if (emb.shape.dim(0) != x.shape.n())
        throw ShapeError("dyn_conv: batch mismatch, input " + x.shape.str() + " vs embedding " + emb.shape.str());
    if (emb.shape.dim(1) != p.kernel_gen.in_dim())
        throw ShapeError("dyn_conv: embedding dim " + std::to_string(emb.shape.dim(1)) + " vs kernel_gen " + p.kernel_gen.weight.shape.str());
    const long Cin = x.shape.c(), O = p.kernel_gen.out_dim();
    if (O % (Cin + 1) != 0)
        throw ShapeError("dyn_conv: kernel_gen output " + std::to_string(O) + " not divisible by C_in+1 = " + std::to_string(Cin + 1));
    return O / (Cin + 1);
}

}  // namespace detail

template <class S>
Tensor<S> dyn_conv_apply(const Tensor<S>& x, const Tensor<S>& emb, const DynConvParams<S>& p) {
    const long Co = detail::dyn_c_out(x, emb, p);
    const long N = x.shape.n(), Cin = x.shape.c(), HW = x.shape.h() * x.shape.w();
    Tensor<S> v = linear_fwd(emb, p.kernel_gen);
    if (!v.all_finite()) throw NumericError("dyn_conv: generated kernel is not finite");
    const long O = p.kernel_gen.out_dim();
    Tensor<S> y = Tensor<S>::zeros(Shape{N, Co, x.shape.h(), x.shape.w()});
    for (long n = 0; n < N; ++n) {
        const S* vk = v.ptr() + n * O;
        const S* xp = x.ptr() + n * Cin * HW;
        S* yp = y.ptr() + n * Co * HW;
        for (long o = 0; o < Co; ++o) {
            const double bias = static_cast<double>(vk[Co * Cin + o]);
            for (long i = 0; i < HW; ++i) {
                double acc = bias;
                for (long c = 0; c < Cin; ++c) acc += static_cast<double>(vk[o * Cin + c]) * static_cast<double>(xp[c * HW + i]);
                yp[o * HW + i] = static_cast<S>(acc);
            }
        }
    }
    return y;
}

template <class S>
DynConvGrads<S> dyn_conv_bwd(const Tensor<S>& x, const Tensor<S>& emb, const DynConvParams<S>& p, const Tensor<S>& grad_out) {
    const long Co = detail::dyn_c_out(x, emb, p);
    const long N = x.shape.n(), Cin = x.shape.c(), HW = x.shape.h() * x.shape.w();
    if (grad_out.shape != Shape{N, Co, x.shape.h(), x.shape.w()})
        throw ShapeError("dyn_conv_bwd: grad shape " + grad_out.shape.str() + " does not match output");
    const long O = p.kernel_gen.out_dim();
    Tensor<S> v = linear_fwd(emb, p.kernel_gen);
    Tensor<S> gv = Tensor<S>::zeros(Shape{N, O});

    DynConvGrads<S> g;
    g.x = Tensor<S>::zeros(x.shape);
    for (long n = 0; n < N; ++n) {
        const S* vk = v.ptr() + n * O;
        const S* xp = x.ptr() + n * Cin * HW;
        const S* gp = grad_out.ptr() + n * Co * HW;
        S* gvk = gv.ptr() + n * O;
        S* gxp = g.x.ptr() + n * Cin * HW;
        for (long o = 0; o < Co; ++o) {
            double gbias = 0;
            for (long i = 0; i < HW; ++i) gbias += static_cast<double>(gp[o * HW + i]);
            gvk[Co * Cin + o] = static_cast<S>(gbias);
            for (long c = 0; c < Cin; ++c) {
                double gk = 0;
                for (long i = 0; i < HW; ++i) gk += static_cast<double>(gp[o * HW + i]) * static_cast<double>(xp[c * HW + i]);
                gvk[o * Cin + c] = static_cast<S>(gk);
            }
        }
        for (long c = 0; c < Cin; ++c)
            for (long i = 0; i < HW; ++i) {
                double acc = 0;
                for (long o = 0; o < Co; ++o) acc += static_cast<double>(vk[o * Cin + c]) * static_cast<double>(gp[o * HW + i]);
                gxp[c * HW + i] += static_cast<S>(acc);
            }
    }

    LinearGrads<S> lg = linear_bwd(emb, p.kernel_gen, gv);
    g.emb = std::move(lg.x);
    g.gen_weight = std::move(lg.weight);
    g.gen_bias = std::move(lg.bias);
    return g;
}

}  // namespace drk
