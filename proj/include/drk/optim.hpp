#pragma once

#include <string>
#include <vector>

#include "drk/tensor.hpp"

namespace drk {

struct NamedParam {
    std::string name;
    Tensor<double>* value = nullptr;
};

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8) plus a
// milestone step-decay schedule and optional global-norm clipping.
// clip_max_norm == 0 means clipping is disabled.
struct OptimState {
    std::vector<Tensor<double>> m;
    std::vector<Tensor<double>> v;
    long step = 0;
    double base_lr = 1e-4;
    double lr = 1e-4;  // effective rate used by the next step
    std::vector<long> milestones = {15, 30};
    double decay = 0.1;
    double clip_max_norm = 0;
};

OptimState make_optim_state(const std::vector<NamedParam>& params, double base_lr, std::vector<long> milestones,
                            double decay, double clip_max_norm);

// base_lr * decay^(number of milestones <= epoch)
double lr_at(long epoch, const OptimState& st);

// Global L2 norm over every tensor; scales all grads when the norm
// exceeds max_norm. No-op when max_norm == 0.
double clip_grads(std::vector<Tensor<double>>& grads, double max_norm);

void adam_step(std::vector<NamedParam>& params, const std::vector<Tensor<double>>& grads, OptimState& st);

}  // namespace drk
