#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drk/enhance.hpp"
#include "drk/metrics.hpp"
#include "drk/optim.hpp"
#include "drk/toy_data.hpp"

// Micro referring-segmentation model in f64:
//   img [N,3,64,64] -> enc1 s2 -> enc2 s2 -> concat(tiled attr, coord
//   channels) -> 1x1 fusion -> enhancement block (factor 2) -> concat
//   enc1 skip -> dynamic 1x1 conv (widened) -> 1x1 head -> bilinear x2
//   -> sigmoid -> [N,1,64,64].
// The enc1 skip feeds the readout the finest feature map; without it the
// head only sees detail that survived the stride-4 bottleneck.
// use_deform/use_se only rewire the forward path; every parameter is
// materialized from the same RNG stream regardless, so ablation variants
// are bit-identical at init.

namespace drk {

struct ModelConfig {
    long channels = 8;
    long attr_dim = kAttrDim;
    int kernel = 3;
    int reduction = 4;
    bool use_deform = true;
    bool use_se = true;

    void validate() const;
};

struct MicroModel {
    ModelConfig cfg;
    Conv2dParams<double> enc1;    // 3 -> C, k3 s2 p1
    Conv2dParams<double> enc2;    // C -> C, k3 s2 p1
    Conv2dParams<double> fusion;  // C + attr_dim + 2 -> C, 1x1
    EnhanceParams<double> enhance;
    DynConvParams<double> dynconv;  // 2C+2 -> Cd per-sample 1x1
    Conv2dParams<double> head;      // Cd -> 1, 1x1

    std::vector<NamedParam> params();
    std::vector<std::pair<std::string, const Tensor<double>*>> named_tensors() const;
};

MicroModel make_model(const ModelConfig& cfg, std::uint64_t seed);

struct ModelCache {
    Tensor<double> img, attr;
    Tensor<double> e1_pre, e1, e2_pre, e2;
    Tensor<double> fin;     // [N, C+attr+2, h, w] fusion input
    Tensor<double> fu_pre, fu;
    Tensor<double> x_up;                 // upsampled fu, shared by fwd and bwd
    Tensor<double> offsets, deform_y;    // deform-path intermediates
    Tensor<double> block, block_relu;
    Tensor<double> dyn_in, dyn, dyn_relu;
    Tensor<double> head_out, up, prob;
};

Tensor<double> model_forward(const MicroModel& m, const Tensor<double>& img, const Tensor<double>& attr,
                             ModelCache* cache = nullptr);

// Gradients parallel to params() order; unused-path parameters get zeros.
std::vector<Tensor<double>> model_backward(const MicroModel& m, const ModelCache& cache, const Tensor<double>& grad_prob);

// Batch helpers: f32 samples to f64 batch tensors.
Tensor<double> batch_images(const std::vector<ToySample>& ds, const std::vector<long>& idx);
Tensor<double> batch_attrs(const std::vector<ToySample>& ds, const std::vector<long>& idx);
Tensor<double> batch_masks(const std::vector<ToySample>& ds, const std::vector<long>& idx);

// Runs inference and binarizes predictions against the ground truth.
std::vector<MaskPair> predict_masks(const MicroModel& m, const std::vector<ToySample>& ds, const std::vector<long>& idx,
                                    long batch, double threshold = 0.5);

}  // namespace drk
