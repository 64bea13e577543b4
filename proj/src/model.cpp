#include "drk/model.hpp"

namespace drk {

void ModelConfig::validate() const {
    if (channels < 1) throw ValueError("model: channels must be >= 1");
    if (attr_dim < 1) throw ValueError("model: attr_dim must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ValueError("model: kernel must be odd and >= 1");
    if (reduction < 1) throw ValueError("model: reduction must be >= 1");
}

namespace {

Conv2dParams<double> make_conv(Rng& rng, long co, long ci, int k, int stride, int pad) {
    Conv2dParams<double> p;
    p.weight = kaiming_init<double>(rng, Shape{co, ci, k, k}, ci * k * k);
    p.bias = Tensor<double>::zeros(Shape{co});
    p.stride = stride;
    p.padding = pad;
    return p;
}

}  // namespace

// Fixed output multiplier on the head logits. Adam moves each weight by
// roughly the learning rate per step regardless of gradient scale, so at
// the protocol rate the raw readout cannot span a useful logit range
// within the toy budget; the gain restores that span without touching
// the optimizer.
const double kLogitGain = 128.0;

// The dynamic conv emits this many attention-modulated channels per input
// channel. Widening here is nearly free (1x1 kernels) and gives the head a
// rich text-conditioned basis to read from.
const long kDynWidthRatio = 8;

// Fixed gain on the attribute vector fed to the kernel generator, for the
// same reason as kLogitGain: it scales how far each generator weight step
// moves the produced kernels, which is where the referent/distractor
// discrimination has to be learned.
const double kModGain = 8.0;

MicroModel make_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    MicroModel m;
    m.cfg = cfg;
    Rng rng(seed);
    const long C = cfg.channels;
    const int k = cfg.kernel;

    // One fixed draw order; variant flags never touch it, so every
    // ablation variant starts from bit-identical parameters.
    m.enc1 = make_conv(rng, C, 3, 3, 2, 1);
    m.enc2 = make_conv(rng, C, C, 3, 2, 1);
    m.fusion = make_conv(rng, C, C + cfg.attr_dim + 2, 1, 1, 0);
    m.enhance.deform.main = make_conv(rng, C, C, k, 1, k / 2);
    m.enhance.deform.offset_branch.weight = Tensor<double>::zeros(Shape{2L * k * k, C, k, k});
    m.enhance.deform.offset_branch.bias = Tensor<double>::zeros(Shape{2L * k * k});
    m.enhance.deform.offset_branch.stride = 1;
    m.enhance.deform.offset_branch.padding = k / 2;
    const long hidden = se_hidden_dim(C, cfg.reduction);
    m.enhance.se.fc1.weight = kaiming_init<double>(rng, Shape{hidden, C}, C);
    m.enhance.se.fc1.bias = Tensor<double>::zeros(Shape{hidden});
    m.enhance.se.fc2.weight = kaiming_init<double>(rng, Shape{C, hidden}, hidden);
    m.enhance.se.fc2.bias = Tensor<double>::zeros(Shape{C});
    m.enhance.se.reduction = cfg.reduction;
    m.enhance.residual.shortcut = make_conv(rng, C, C, 1, 1, 0);
    m.enhance.residual.factor = 2;
    const long Cd = kDynWidthRatio * C;
    const long Ci = 2 * C + 2;  // enhance output, enc1 skip, coord channels
    m.dynconv.kernel_gen.weight = kaiming_init<double>(rng, Shape{Cd * (Ci + 1), cfg.attr_dim}, cfg.attr_dim);
    // Compensates kModGain at init so the generated kernels start at the
    // same scale they would have without the gain.
    m.dynconv.kernel_gen.weight.data *= 1.0 / kModGain;
    // Bias encodes a tiled identity kernel so the dynamic conv starts as a
    // pass-through perturbed by the text embedding.
    m.dynconv.kernel_gen.bias = Tensor<double>::zeros(Shape{Cd * (Ci + 1)});
    for (long o = 0; o < Cd; ++o) m.dynconv.kernel_gen.bias.data[o * Ci + o % Ci] = 1.0;
    // Readout drawn at Kaiming scale, then shrunk by the gain so the
    // initial mask sits near the background prior instead of amplified
    // random noise. Keeping it nonzero lets gradient reach the rest of
    // the network from the first step.
    m.head.weight = kaiming_init<double>(rng, Shape{1, Cd, 1, 1}, Cd);
    m.head.weight.data *= 1.0 / kLogitGain;
    m.head.bias = Tensor<double>::zeros(Shape{1});
    m.head.stride = 1;
    m.head.padding = 0;
    m.head.bias.data[0] = -2.0 / kLogitGain;
    return m;
}

std::vector<NamedParam> MicroModel::params() {
    return {
        {"enc1.weight", &enc1.weight},
        {"enc1.bias", &enc1.bias},
        {"enc2.weight", &enc2.weight},
        {"enc2.bias", &enc2.bias},
        {"fusion.weight", &fusion.weight},
        {"fusion.bias", &fusion.bias},
        {"enhance.main.weight", &enhance.deform.main.weight},
        {"enhance.main.bias", &enhance.deform.main.bias},
        {"enhance.offset.weight", &enhance.deform.offset_branch.weight},
        {"enhance.offset.bias", &enhance.deform.offset_branch.bias},
        {"enhance.fc1.weight", &enhance.se.fc1.weight},
        {"enhance.fc1.bias", &enhance.se.fc1.bias},
        {"enhance.fc2.weight", &enhance.se.fc2.weight},
        {"enhance.fc2.bias", &enhance.se.fc2.bias},
        {"enhance.shortcut.weight", &enhance.residual.shortcut.weight},
        {"enhance.shortcut.bias", &enhance.residual.shortcut.bias},
        {"dynconv.gen.weight", &dynconv.kernel_gen.weight},
        {"dynconv.gen.bias", &dynconv.kernel_gen.bias},
        {"head.weight", &head.weight},
        {"head.bias", &head.bias},
    };
}

std::vector<std::pair<std::string, const Tensor<double>*>> MicroModel::named_tensors() const {
    auto& self = const_cast<MicroModel&>(*this);
    std::vector<std::pair<std::string, const Tensor<double>*>> out;
    for (const NamedParam& p : self.params()) out.emplace_back(p.name, p.value);
    return out;
}

Tensor<double> model_forward(const MicroModel& m, const Tensor<double>& img, const Tensor<double>& attr,
                             ModelCache* cache) {
    if (img.shape.rank() != 4 || img.shape.c() != 3) throw ShapeError("model: image batch must be [N,3,H,W]");
    if (attr.shape.rank() != 2 || attr.shape.dim(0) != img.shape.n() || attr.shape.dim(1) != m.cfg.attr_dim)
        throw ShapeError("model: attribute batch " + attr.shape.str() + " does not match images " + img.shape.str());

    ModelCache local;
    ModelCache& cc = cache ? *cache : local;
    cc.img = img;
    cc.attr = attr;

    cc.e1_pre = conv2d_fwd(img, m.enc1);
    cc.e1 = relu(cc.e1_pre);
    cc.e2_pre = conv2d_fwd(cc.e1, m.enc2);
    cc.e2 = relu(cc.e2_pre);

    const long N = cc.e2.shape.n(), C = cc.e2.shape.c(), h = cc.e2.shape.h(), w = cc.e2.shape.w();
    const long A = m.cfg.attr_dim;
    cc.fin = Tensor<double>::zeros(Shape{N, C + A + 2, h, w});
    for (long n = 0; n < N; ++n) {
        double* dst = cc.fin.ptr() + n * (C + A + 2) * h * w;
        const double* src = cc.e2.ptr() + n * C * h * w;
        for (long i = 0; i < C * h * w; ++i) dst[i] = src[i];
        for (long a = 0; a < A; ++a) {
            const double v = attr.data[n * A + a];
            double* plane = dst + (C + a) * h * w;
            for (long i = 0; i < h * w; ++i) plane[i] = v;
        }
        // Normalized coordinate channels in (-1,1); convolution alone
        // cannot express the quadrant attribute without them.
        double* ych = dst + (C + A) * h * w;
        double* xch = dst + (C + A + 1) * h * w;
        for (long i = 0; i < h; ++i)
            for (long j = 0; j < w; ++j) {
                ych[i * w + j] = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(h) - 1.0;
                xch[i * w + j] = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(w) - 1.0;
            }
    }

    cc.fu_pre = conv2d_fwd(cc.fin, m.fusion);
    cc.fu = relu(cc.fu_pre);

    cc.x_up = upsample_bilinear(cc.fu, m.enhance.residual.factor);
    if (m.cfg.use_deform) {
        DeformConvOut<double> d = deform_conv_fwd(cc.x_up, m.enhance.deform);
        cc.offsets = std::move(d.offsets);
        cc.deform_y = std::move(d.y);
        Tensor<double> t = m.cfg.use_se ? se_fwd(cc.deform_y, m.enhance.se).x_sc : cc.deform_y;
        cc.block = residual_fuse(cc.fu, t, m.enhance.residual);
    } else {
        cc.block = conv2d_fwd(cc.x_up, m.enhance.deform.main);
    }
    cc.block_relu = relu(cc.block);

    // The readout input: enhanced features, the enc1 skip (the only feature
    // map still carrying half-resolution detail) and raw coordinate channels
    // so the generated kernels can gate on position directly.
    const long Cb = cc.block_relu.shape.c(), bh = cc.block_relu.shape.h(), bw = cc.block_relu.shape.w();
    if (cc.e1.shape.c() != Cb || cc.e1.shape.h() != bh || cc.e1.shape.w() != bw)
        throw ShapeError("model: enc1 skip " + cc.e1.shape.str() + " does not match block output " +
                         cc.block_relu.shape.str());
    cc.dyn_in = Tensor<double>::zeros(Shape{N, 2 * Cb + 2, bh, bw});
    for (long n = 0; n < N; ++n) {
        double* dst = cc.dyn_in.ptr() + n * (2 * Cb + 2) * bh * bw;
        const double* b = cc.block_relu.ptr() + n * Cb * bh * bw;
        const double* s = cc.e1.ptr() + n * Cb * bh * bw;
        for (long i = 0; i < Cb * bh * bw; ++i) dst[i] = b[i];
        for (long i = 0; i < Cb * bh * bw; ++i) dst[Cb * bh * bw + i] = s[i];
        double* ych = dst + 2 * Cb * bh * bw;
        double* xch = dst + (2 * Cb + 1) * bh * bw;
        for (long i = 0; i < bh; ++i)
            for (long j = 0; j < bw; ++j) {
                ych[i * bw + j] = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(bh) - 1.0;
                xch[i * bw + j] = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(bw) - 1.0;
            }
    }
    Tensor<double> attr_mod = attr;
    attr_mod.data *= kModGain;
    cc.dyn = dyn_conv_apply(cc.dyn_in, attr_mod, m.dynconv);
    cc.dyn_relu = relu(cc.dyn);
    cc.head_out = conv2d_fwd(cc.dyn_relu, m.head);
    cc.head_out.data *= kLogitGain;

    const long fh = img.shape.h() / cc.head_out.shape.h();
    if (fh < 1 || cc.head_out.shape.h() * fh != img.shape.h())
        throw ShapeError("model: head output " + cc.head_out.shape.str() + " does not divide input resolution");
    cc.up = upsample_bilinear(cc.head_out, static_cast<int>(fh));
    cc.prob = sigmoid(cc.up);
    return cc.prob;
}

namespace {

Tensor<double> slice_channels(const Tensor<double>& x, long c0, long c1) {
    const long N = x.shape.n(), C = x.shape.c(), HW = x.shape.h() * x.shape.w();
    Tensor<double> out = Tensor<double>::zeros(Shape{N, c1 - c0, x.shape.h(), x.shape.w()});
    for (long n = 0; n < N; ++n)
        for (long c = c0; c < c1; ++c) {
            const double* src = x.ptr() + (n * C + c) * HW;
            double* dst = out.ptr() + (n * (c1 - c0) + (c - c0)) * HW;
            for (long i = 0; i < HW; ++i) dst[i] = src[i];
        }
    return out;
}

}  // namespace

std::vector<Tensor<double>> model_backward(const MicroModel& m, const ModelCache& cc, const Tensor<double>& grad_prob) {
    Tensor<double> g_up = sigmoid_bwd_from_y(cc.prob, grad_prob);
    const int fh = static_cast<int>(cc.up.shape.h() / cc.head_out.shape.h());
    Tensor<double> g_head_out = upsample_bilinear_bwd(g_up, cc.head_out.shape.h(), cc.head_out.shape.w(), fh);
    g_head_out.data *= kLogitGain;
    Conv2dGrads<double> hg = conv2d_bwd(cc.dyn_relu, m.head, g_head_out);
    Tensor<double> g_dyn = relu_bwd(cc.dyn, hg.x);
    Tensor<double> attr_mod = cc.attr;
    attr_mod.data *= kModGain;
    DynConvGrads<double> dyg = dyn_conv_bwd(cc.dyn_in, attr_mod, m.dynconv, g_dyn);
    const long Cb = cc.block_relu.shape.c();
    Tensor<double> g_block = relu_bwd(cc.block, slice_channels(dyg.x, 0, Cb));
    Tensor<double> g_e1_skip = slice_channels(dyg.x, Cb, 2 * Cb);

    Tensor<double> g_fu;
    Tensor<double> main_w, main_b, off_w, off_b, f1w, f1b, f2w, f2b, sc_w, sc_b;
    const int factor = m.enhance.residual.factor;
    if (m.cfg.use_deform) {
        ResidualGrads<double> rg = residual_fuse_bwd(cc.fu, m.enhance.residual, g_block);
        Tensor<double> g_dy;
        if (m.cfg.use_se) {
            SeGrads<double> sg = se_bwd(cc.deform_y, m.enhance.se, rg.x_se);
            g_dy = std::move(sg.x);
            f1w = std::move(sg.fc1_weight);
            f1b = std::move(sg.fc1_bias);
            f2w = std::move(sg.fc2_weight);
            f2b = std::move(sg.fc2_bias);
        } else {
            g_dy = std::move(rg.x_se);
            f1w = Tensor<double>::zeros(m.enhance.se.fc1.weight.shape);
            f1b = Tensor<double>::zeros(m.enhance.se.fc1.bias.shape);
            f2w = Tensor<double>::zeros(m.enhance.se.fc2.weight.shape);
            f2b = Tensor<double>::zeros(m.enhance.se.fc2.bias.shape);
        }
        DeformConvGrads<double> dg = deform_conv_bwd(cc.x_up, cc.offsets, m.enhance.deform, g_dy);
        g_fu = upsample_bilinear_bwd(dg.x, cc.fu.shape.h(), cc.fu.shape.w(), factor);
        g_fu.data += rg.x.data;
        main_w = std::move(dg.main_weight);
        main_b = std::move(dg.main_bias);
        off_w = std::move(dg.offset_weight);
        off_b = std::move(dg.offset_bias);
        sc_w = std::move(rg.shortcut_weight);
        sc_b = std::move(rg.shortcut_bias);
    } else {
        Conv2dGrads<double> cg = conv2d_bwd(cc.x_up, m.enhance.deform.main, g_block);
        g_fu = upsample_bilinear_bwd(cg.x, cc.fu.shape.h(), cc.fu.shape.w(), factor);
        main_w = std::move(cg.weight);
        main_b = std::move(cg.bias);
        off_w = Tensor<double>::zeros(m.enhance.deform.offset_branch.weight.shape);
        off_b = Tensor<double>::zeros(m.enhance.deform.offset_branch.bias.shape);
        f1w = Tensor<double>::zeros(m.enhance.se.fc1.weight.shape);
        f1b = Tensor<double>::zeros(m.enhance.se.fc1.bias.shape);
        f2w = Tensor<double>::zeros(m.enhance.se.fc2.weight.shape);
        f2b = Tensor<double>::zeros(m.enhance.se.fc2.bias.shape);
        sc_w = Tensor<double>::zeros(m.enhance.residual.shortcut.weight.shape);
        sc_b = Tensor<double>::zeros(m.enhance.residual.shortcut.bias.shape);
    }

    Tensor<double> g_fu_pre = relu_bwd(cc.fu_pre, g_fu);
    Conv2dGrads<double> fg = conv2d_bwd(cc.fin, m.fusion, g_fu_pre);
    Tensor<double> g_e2 = slice_channels(fg.x, 0, m.cfg.channels);
    Tensor<double> g_e2_pre = relu_bwd(cc.e2_pre, g_e2);
    Conv2dGrads<double> e2g = conv2d_bwd(cc.e1, m.enc2, g_e2_pre);
    e2g.x.data += g_e1_skip.data;  // enc1 feeds both enc2 and the readout skip
    Tensor<double> g_e1_pre = relu_bwd(cc.e1_pre, e2g.x);
    Conv2dGrads<double> e1g = conv2d_bwd(cc.img, m.enc1, g_e1_pre);

    std::vector<Tensor<double>> grads;
    grads.reserve(20);
    grads.push_back(std::move(e1g.weight));
    grads.push_back(std::move(e1g.bias));
    grads.push_back(std::move(e2g.weight));
    grads.push_back(std::move(e2g.bias));
    grads.push_back(std::move(fg.weight));
    grads.push_back(std::move(fg.bias));
    grads.push_back(std::move(main_w));
    grads.push_back(std::move(main_b));
    grads.push_back(std::move(off_w));
    grads.push_back(std::move(off_b));
    grads.push_back(std::move(f1w));
    grads.push_back(std::move(f1b));
    grads.push_back(std::move(f2w));
    grads.push_back(std::move(f2b));
    grads.push_back(std::move(sc_w));
    grads.push_back(std::move(sc_b));
    grads.push_back(std::move(dyg.gen_weight));
    grads.push_back(std::move(dyg.gen_bias));
    grads.push_back(std::move(hg.weight));
    grads.push_back(std::move(hg.bias));
    return grads;
}

Tensor<double> batch_images(const std::vector<ToySample>& ds, const std::vector<long>& idx) {
    if (idx.empty()) throw ValueError("batch_images: empty index list");
    const Shape& s0 = ds[static_cast<std::size_t>(idx[0])].image.shape;
    const long H = s0.dim(1), W = s0.dim(2);
    Tensor<double> out = Tensor<double>::zeros(Shape{static_cast<long>(idx.size()), 3, H, W});
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const Tensor<float>& img = ds[static_cast<std::size_t>(idx[b])].image;
        if (img.shape != s0) throw ShapeError("batch_images: inconsistent image dims");
        double* dst = out.ptr() + static_cast<long>(b) * 3 * H * W;
        for (long i = 0; i < 3 * H * W; ++i) dst[i] = static_cast<double>(img.data[i]);
    }
    return out;
}

Tensor<double> batch_attrs(const std::vector<ToySample>& ds, const std::vector<long>& idx) {
    if (idx.empty()) throw ValueError("batch_attrs: empty index list");
    const long D = ds[static_cast<std::size_t>(idx[0])].attr.shape.dim(0);
    Tensor<double> out = Tensor<double>::zeros(Shape{static_cast<long>(idx.size()), D});
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const Tensor<float>& a = ds[static_cast<std::size_t>(idx[b])].attr;
        for (long i = 0; i < D; ++i) out.data[static_cast<long>(b) * D + i] = static_cast<double>(a.data[i]);
    }
    return out;
}

Tensor<double> batch_masks(const std::vector<ToySample>& ds, const std::vector<long>& idx) {
    if (idx.empty()) throw ValueError("batch_masks: empty index list");
    const Mask& m0 = ds[static_cast<std::size_t>(idx[0])].mask;
    Tensor<double> out = Tensor<double>::zeros(Shape{static_cast<long>(idx.size()), 1, m0.h, m0.w});
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const Mask& m = ds[static_cast<std::size_t>(idx[b])].mask;
        double* dst = out.ptr() + static_cast<long>(b) * m0.h * m0.w;
        for (long i = 0; i < m0.h * m0.w; ++i) dst[i] = m.data[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    return out;
}

std::vector<MaskPair> predict_masks(const MicroModel& m, const std::vector<ToySample>& ds, const std::vector<long>& idx,
                                    long batch, double threshold) {
    if (batch < 1) throw ValueError("predict_masks: batch must be >= 1");
    std::vector<MaskPair> pairs;
    pairs.reserve(idx.size());
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch)) {
        const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(batch));
        std::vector<long> chunk(idx.begin() + static_cast<long>(start), idx.begin() + static_cast<long>(end));
        Tensor<double> prob = model_forward(m, batch_images(ds, chunk), batch_attrs(ds, chunk));
        const long H = prob.shape.h(), W = prob.shape.w();
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            Tensor<double> plane;
            plane.shape = Shape{H, W};
            plane.data = prob.data.segment(static_cast<long>(b) * H * W, H * W);
            MaskPair mp;
            mp.pred = binarize(plane, threshold);
            mp.gt = ds[static_cast<std::size_t>(chunk[b])].mask;
            mp.sample_id = ds[static_cast<std::size_t>(chunk[b])].sample_id;
            pairs.push_back(std::move(mp));
        }
    }
    return pairs;
}

}  // namespace drk
