#pragma once

#include <string>
#include <vector>

#include "drk/metrics.hpp"
#include "drk/rng.hpp"
#include "drk/tensor.hpp"

// Synthetic referring-segmentation triplets: images of colored geometric
// shapes on a gray background, an attribute vector standing in for the
// text embedding, and the referred shape's binary mask. Generation is
// sequential and fully determined by the seed.

namespace drk {

inline constexpr int kShapeKinds = 3;  // circle, square, triangle
inline constexpr int kColorCount = 6;
inline constexpr int kSizeBuckets = 2;  // small, large
inline constexpr int kQuadrants = 4;    // TL, TR, BL, BR
inline constexpr long kAttrDim = kShapeKinds + kColorCount + kSizeBuckets + kQuadrants;

// Fixed palette, RGB in [0,1].
inline constexpr double kPalette[kColorCount][3] = {
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1},
};

struct ToySample {
    std::string sample_id;
    Tensor<float> image;  // [3, H, W], values in [0,1]
    Tensor<float> attr;   // [kAttrDim], concatenated one-hot blocks
    Mask mask;            // H x W
};

struct DatasetSpec {
    long n_samples = 1000;
    long image_size = 64;
    long min_distractors = 1;
    long max_distractors = 4;
    std::uint64_t seed = 0;
    double frac_lo = 0.01;  // allowed mask area fraction bounds
    double frac_hi = 0.25;

    void validate() const;
};

// Scene bookkeeping, exposed so tests can replay the generator's geometry
// independently of the stored mask.
struct SceneShape {
    int kind = 0;
    int color = 0;
    int size = 0;
    int quad = 0;
    double cy = 0, cx = 0;
    double param = 0;   // circle radius, square half-side, triangle side
    double jitter = 1;  // per-shape intensity in [0.8, 1.0]
};

struct Scene {
    std::vector<SceneShape> shapes;
    int referent = 0;
};

Mask rasterize_shape(const SceneShape& s, long h, long w);

std::vector<ToySample> generate(const DatasetSpec& spec, std::vector<Scene>* scenes = nullptr);

// Directory layout: index.txt (one id per line), <id>.img.dten,
// <id>.attr.dten, <id>.mask.pgm.
void save_dataset(const std::string& dir, const std::vector<ToySample>& samples);
std::vector<ToySample> load_dataset(const std::string& dir);

}  // namespace drk
