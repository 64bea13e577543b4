#pragma once

#include <charconv>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "drk/tensor.hpp"

// Segmentation metrics: per-sample IoU, mean IoU, and precision at IoU
// thresholds 50..90. Thresholds are strict (a sample counts when its IoU
// exceeds K/100), and binarization is strict as well.

namespace drk {

struct Mask {
    long h = 0;
    long w = 0;
    std::vector<std::uint8_t> data;  // 0/1, row-major

    static Mask zeros(long h, long w) {
        Mask m;
        m.h = h;
        m.w = w;
        m.data.assign(static_cast<std::size_t>(h * w), 0);
        return m;
    }
    long numel() const { return h * w; }
    bool operator==(const Mask& o) const { return h == o.h && w == o.w && data == o.data; }
};

struct MaskPair {
    Mask pred;
    Mask gt;
    std::string sample_id;
};

struct EvalReport {
    std::vector<double> per_sample_iou;
    double miou = 0;
    std::map<int, double> prec_at;  // {50,60,70,80,90} -> fraction
};

inline constexpr int kPrecThresholds[] = {50, 60, 70, 80, 90};

namespace detail {

inline void validate_mask(const Mask& m, const char* what) {
    if (m.h < 1 || m.w < 1 || m.data.size() != static_cast<std::size_t>(m.h * m.w))
        throw ShapeError(std::string(what) + ": malformed mask");
    for (std::uint8_t v : m.data)
        if (v > 1) throw ValueError(std::string(what) + ": mask values must be 0/1");
}

}  // namespace detail

// Both empty -> 1.0 (perfect agreement); exactly one empty -> 0.0.
inline double iou(const Mask& pred, const Mask& gt) {
    detail::validate_mask(pred, "iou");
    detail::validate_mask(gt, "iou");
    if (pred.h != gt.h || pred.w != gt.w) throw ShapeError("iou: mask dims disagree");
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool a = pred.data[i] != 0, b = gt.data[i] != 0;
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Accepts [H,W] or any shape whose leading dims are all 1 (e.g. [1,1,H,W]).
template <class S>
Mask binarize(const Tensor<S>& prob, double threshold = 0.5) {
    const int rank = prob.shape.rank();
    for (int i = 0; i + 2 < rank; ++i)
        if (prob.shape.dim(i) != 1) throw ShapeError("binarize: expected a single plane, got " + prob.shape.str());
    const long h = prob.shape.dim(rank - 2), w = prob.shape.dim(rank - 1);
    Mask m = Mask::zeros(h, w);
    for (long i = 0; i < h * w; ++i) m.data[static_cast<std::size_t>(i)] = static_cast<double>(prob.data[i]) > threshold ? 1 : 0;
    return m;
}

inline EvalReport evaluate(const std::vector<MaskPair>& pairs) {
    if (pairs.empty()) throw ValueError("evaluate: empty sample list");
    EvalReport r;
    r.per_sample_iou.reserve(pairs.size());
    double acc = 0;
    for (const MaskPair& mp : pairs) {
        const double v = iou(mp.pred, mp.gt);
        r.per_sample_iou.push_back(v);
        acc += v;
    }
    r.miou = acc / static_cast<double>(pairs.size());
    for (int k : kPrecThresholds) {
        const double thr = static_cast<double>(k) / 100.0;
        long hits = 0;
        for (double v : r.per_sample_iou)
            if (v > thr) ++hits;
        r.prec_at[k] = static_cast<double>(hits) / static_cast<double>(pairs.size());
    }
    return r;
}

// Shortest round-trip decimal form; keeps emitted CSVs byte-stable.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_eval_csv(std::ostream& os, const std::vector<MaskPair>& pairs, const EvalReport& r) {
    os << "sample_id,iou\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) os << pairs[i].sample_id << ',' << fmt_double(r.per_sample_iou[i]) << '\n';
    os << "miou," << fmt_double(r.miou) << '\n';
    for (int k : kPrecThresholds) os << "prec@" << k << ',' << fmt_double(r.prec_at.at(k)) << '\n';
}

}  // namespace drk
