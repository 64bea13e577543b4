#pragma once

#include <map>
#include <string>

#include "drk/train.hpp"

// Line-oriented config files: `key = value`, blank lines and `#` comments
// ignored, unknown keys rejected when applied.

namespace drk {

std::map<std::string, std::string> parse_config_file(const std::string& path);

// Known keys: epochs, batch, seed, base_lr, decay, milestones (comma
// separated), clip_max_norm, eval_every_epoch, channels, kernel,
// reduction, use_deform, use_se, lambda1, lambda2, lambda3, alpha, gamma,
// eps, adaptive_mode (abs_diff|focal_style), clamp, normalize (sum|mean).
void apply_train_config(TrainConfig& cfg, const std::map<std::string, std::string>& kv);

}  // namespace drk
