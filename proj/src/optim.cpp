#include "drk/optim.hpp"

#include <algorithm>
#include <cmath>

namespace drk {

OptimState make_optim_state(const std::vector<NamedParam>& params, double base_lr, std::vector<long> milestones,
                            double decay, double clip_max_norm) {
    if (base_lr <= 0) throw ValueError("optim: base_lr must be positive");
    if (decay <= 0 || decay > 1) throw ValueError("optim: decay must lie in (0,1]");
    if (clip_max_norm < 0) throw ValueError("optim: clip_max_norm must be >= 0");
    OptimState st;
    st.base_lr = base_lr;
    st.lr = base_lr;
    std::sort(milestones.begin(), milestones.end());
    st.milestones = std::move(milestones);
    st.decay = decay;
    st.clip_max_norm = clip_max_norm;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const NamedParam& p : params) {
        st.m.push_back(Tensor<double>::zeros(p.value->shape));
        st.v.push_back(Tensor<double>::zeros(p.value->shape));
    }
    return st;
}

double lr_at(long epoch, const OptimState& st) {
    if (epoch < 0) throw ValueError("lr_at: epoch must be >= 0");
    int hits = 0;
    for (long ms : st.milestones)
        if (ms <= epoch) ++hits;
    return st.base_lr * std::pow(st.decay, hits);
}

double clip_grads(std::vector<Tensor<double>>& grads, double max_norm) {
    if (max_norm < 0) throw ValueError("clip_grads: max_norm must be >= 0");
    double sq = 0;
    for (const Tensor<double>& g : grads)
        for (long i = 0; i < g.numel(); ++i) sq += g.data[i] * g.data[i];
    const double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (Tensor<double>& g : grads) g.data *= scale;
    }
    return norm;
}

void adam_step(std::vector<NamedParam>& params, const std::vector<Tensor<double>>& grads, OptimState& st) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw ShapeError("adam_step: parameter/gradient/state counts disagree");
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].value->shape != grads[k].shape)
            throw ShapeError("adam_step: gradient shape mismatch for " + params[k].name);
        if (!grads[k].all_finite()) throw NumericError("adam_step: non-finite gradient for parameter " + params[k].name);
    }
    ++st.step;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& th = params[k].value->data;
        auto& m = st.m[k].data;
        auto& v = st.v[k].data;
        const auto& g = grads[k].data;
        for (long i = 0; i < th.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            th[i] -= st.lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

}  // namespace drk
