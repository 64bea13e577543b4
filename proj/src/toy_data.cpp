#include "drk/toy_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "drk/dten.hpp"
#include "drk/pgm.hpp"

namespace drk {

void DatasetSpec::validate() const {
    if (n_samples < 1) throw ValueError("dataset: n_samples must be >= 1");
    if (image_size < 16) throw ValueError("dataset: image_size must be >= 16");
    if (min_distractors < 1 || max_distractors < min_distractors)
        throw ValueError("dataset: distractor range invalid");
    if (!(frac_lo > 0 && frac_hi < 1 && frac_lo < frac_hi))
        throw ValueError("dataset: fraction bounds must satisfy 0 < lo < hi < 1");
}

namespace {

constexpr double kBackground = 0.1;
constexpr double kNoise = 0.02;
// Target mask-area fractions per size bucket; the rendered fraction stays
// well inside the DatasetSpec bounds after quantization.
constexpr double kSmallLo = 0.015, kSmallHi = 0.05;
constexpr double kLargeLo = 0.09, kLargeHi = 0.20;

double bound_radius(int kind, double param) {
    if (kind == 0) return param;                           // circle
    if (kind == 1) return param * std::numbers::sqrt2;     // square half-side
    return param * (std::numbers::sqrt2 / 2.0);            // triangle side
}

double size_param(int kind, int size, double area_px, Rng& rng) {
    const double lo = size == 0 ? kSmallLo : kLargeLo;
    const double hi = size == 0 ? kSmallHi : kLargeHi;
    const double a = rng.uniform(lo, hi) * area_px;
    if (kind == 0) return std::sqrt(a / std::numbers::pi);
    if (kind == 1) return std::sqrt(a) / 2.0;
    return std::sqrt(2.0 * a);
}

// Center bounds: inside the quadrant and far enough from the image edge
// that the whole shape fits.
bool center_range(int quad, long ext, double br, bool row, double& lo, double& hi) {
    const double half = static_cast<double>(ext) / 2.0;
    const bool second = row ? (quad >= 2) : (quad % 2 == 1);
    lo = std::max(br, second ? half : 0.0);
    hi = std::min(static_cast<double>(ext - 1) - br, second ? static_cast<double>(ext - 1) : half - 1.0);
    return lo <= hi;
}

bool try_build_scene(const DatasetSpec& sp, Rng& rng, Scene& out) {
    const long H = sp.image_size, W = sp.image_size;
    const long span = sp.max_distractors - sp.min_distractors + 1;
    const long n_shapes = 1 + sp.min_distractors + static_cast<long>(rng.next_below(static_cast<std::uint64_t>(span)));
    out.shapes.clear();
    std::vector<std::array<int, 4>> used;
    for (long s = 0; s < n_shapes; ++s) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            SceneShape sh;
            sh.kind = static_cast<int>(rng.next_below(kShapeKinds));
            sh.color = static_cast<int>(rng.next_below(kColorCount));
            sh.size = static_cast<int>(rng.next_below(kSizeBuckets));
            sh.quad = static_cast<int>(rng.next_below(kQuadrants));
            const std::array<int, 4> tup{sh.kind, sh.color, sh.size, sh.quad};
            if (std::find(used.begin(), used.end(), tup) != used.end()) continue;
            sh.param = size_param(sh.kind, sh.size, static_cast<double>(H * W), rng);
            const double br = bound_radius(sh.kind, sh.param);
            double ylo, yhi, xlo, xhi;
            if (!center_range(sh.quad, H, br, true, ylo, yhi)) continue;
            if (!center_range(sh.quad, W, br, false, xlo, xhi)) continue;
            sh.cy = rng.uniform(ylo, yhi);
            sh.cx = rng.uniform(xlo, xhi);
            bool overlap = false;
            for (const SceneShape& other : out.shapes) {
                const double dy = sh.cy - other.cy, dx = sh.cx - other.cx;
                const double min_d = br + bound_radius(other.kind, other.param) + 1.0;
                if (dy * dy + dx * dx <= min_d * min_d) {
                    overlap = true;
                    break;
                }
            }
            if (overlap) continue;
            sh.jitter = rng.uniform(0.8, 1.0);
            used.push_back(tup);
            out.shapes.push_back(sh);
            placed = true;
        }
        if (!placed) return false;
    }
    out.referent = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_shapes)));
    return true;
}

long popcount_mask(const Mask& m) {
    long n = 0;
    for (std::uint8_t v : m.data) n += v;
    return n;
}

}  // namespace

Mask rasterize_shape(const SceneShape& s, long h, long w) {
    Mask m = Mask::zeros(h, w);
    if (s.kind == 0) {
        const double r2 = s.param * s.param;
        for (long i = 0; i < h; ++i)
            for (long j = 0; j < w; ++j) {
                const double dy = static_cast<double>(i) - s.cy, dx = static_cast<double>(j) - s.cx;
                if (dy * dy + dx * dx <= r2) m.data[static_cast<std::size_t>(i * w + j)] = 1;
            }
    } else if (s.kind == 1) {
        for (long i = 0; i < h; ++i)
            for (long j = 0; j < w; ++j)
                if (std::abs(static_cast<double>(i) - s.cy) <= s.param && std::abs(static_cast<double>(j) - s.cx) <= s.param)
                    m.data[static_cast<std::size_t>(i * w + j)] = 1;
    } else {
        // Isoceles triangle, apex up; height equals base width (s.param).
        const double half = s.param / 2.0;
        for (long i = 0; i < h; ++i) {
            const double ty = static_cast<double>(i) - (s.cy - half);
            if (ty < 0 || ty > s.param) continue;
            const double allowed = ty / 2.0;
            for (long j = 0; j < w; ++j)
                if (std::abs(static_cast<double>(j) - s.cx) <= allowed) m.data[static_cast<std::size_t>(i * w + j)] = 1;
        }
    }
    return m;
}

std::vector<ToySample> generate(const DatasetSpec& spec, std::vector<Scene>* scenes) {
    spec.validate();
    Rng rng(spec.seed);
    const long H = spec.image_size, W = spec.image_size;
    std::vector<ToySample> out;
    out.reserve(static_cast<std::size_t>(spec.n_samples));
    if (scenes) scenes->clear();

    for (long idx = 0; idx < spec.n_samples; ++idx) {
        Scene scene;
        Mask mask;
        bool ok = false;
        for (int restart = 0; restart < 100 && !ok; ++restart) {
            if (!try_build_scene(spec, rng, scene)) continue;
            mask = rasterize_shape(scene.shapes[static_cast<std::size_t>(scene.referent)], H, W);
            const double frac = static_cast<double>(popcount_mask(mask)) / static_cast<double>(H * W);
            if (frac >= spec.frac_lo && frac <= spec.frac_hi) ok = true;
        }
        if (!ok) throw ValueError("dataset: no feasible scene after bounded retries (constraints too tight)");

        ToySample s;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "s%06ld", idx);
        s.sample_id = buf;
        s.mask = mask;
        s.image = Tensor<float>::full(Shape{3, H, W}, static_cast<float>(kBackground));
        for (std::size_t si = 0; si < scene.shapes.size(); ++si) {
            const SceneShape& sh = scene.shapes[si];
            const Mask sm = static_cast<int>(si) == scene.referent ? mask : rasterize_shape(sh, H, W);
            for (int c = 0; c < 3; ++c) {
                const float v = static_cast<float>(kPalette[sh.color][c] * sh.jitter);
                float* plane = s.image.ptr() + c * H * W;
                for (long p = 0; p < H * W; ++p)
                    if (sm.data[static_cast<std::size_t>(p)]) plane[p] = v;
            }
        }
        for (long i = 0; i < s.image.numel(); ++i) {
            double v = static_cast<double>(s.image.data[i]) + rng.uniform(-kNoise, kNoise);
            s.image.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }

        const SceneShape& ref = scene.shapes[static_cast<std::size_t>(scene.referent)];
        s.attr = Tensor<float>::zeros(Shape{kAttrDim});
        s.attr.data[ref.kind] = 1;
        s.attr.data[kShapeKinds + ref.color] = 1;
        s.attr.data[kShapeKinds + kColorCount + ref.size] = 1;
        s.attr.data[kShapeKinds + kColorCount + kSizeBuckets + ref.quad] = 1;

        out.push_back(std::move(s));
        if (scenes) scenes->push_back(scene);
    }
    return out;
}

void save_dataset(const std::string& dir, const std::vector<ToySample>& samples) {
    std::filesystem::create_directories(dir);
    const std::string index_path = dir + "/index.txt";
    std::ofstream idx(index_path, std::ios::binary);
    if (!idx) throw IoError(index_path + ": cannot open for writing");
    for (const ToySample& s : samples) idx << s.sample_id << '\n';
    if (!idx) throw IoError(index_path + ": write failed");
    idx.close();
    for (const ToySample& s : samples) {
        const std::string base = dir + "/" + s.sample_id;
        save_dten(base + ".img.dten", s.image);
        save_dten(base + ".attr.dten", s.attr);
        save_mask_pgm(base + ".mask.pgm", s.mask);
    }
}

std::vector<ToySample> load_dataset(const std::string& dir) {
    const std::string index_path = dir + "/index.txt";
    std::ifstream idx(index_path, std::ios::binary);
    if (!idx) throw IoError(index_path + ": cannot open");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(idx, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    if (ids.empty()) throw IoError(index_path + ": empty dataset index");

    std::vector<ToySample> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
        const std::string base = dir + "/" + id;
        ToySample s;
        s.sample_id = id;
        AnyTensor img = load_dten(base + ".img.dten");
        if (!std::holds_alternative<Tensor<float>>(img)) throw IoError(base + ".img.dten: expected f32 image");
        s.image = std::get<Tensor<float>>(std::move(img));
        if (s.image.shape.rank() != 3 || s.image.shape.dim(0) != 3) throw IoError(base + ".img.dten: expected [3,H,W]");
        AnyTensor attr = load_dten(base + ".attr.dten");
        if (!std::holds_alternative<Tensor<float>>(attr)) throw IoError(base + ".attr.dten: expected f32 attributes");
        s.attr = std::get<Tensor<float>>(std::move(attr));
        if (s.attr.shape.rank() != 1 || s.attr.shape.dim(0) != kAttrDim)
            throw IoError(base + ".attr.dten: expected [" + std::to_string(kAttrDim) + "]");
        s.mask = load_mask_pgm(base + ".mask.pgm");
        if (s.mask.h != s.image.shape.dim(1) || s.mask.w != s.image.shape.dim(2))
            throw IoError(base + ".mask.pgm: mask dims do not match image");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace drk
