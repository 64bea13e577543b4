#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drk/model.hpp"

// Checkpoint container "DCKP": magic, version byte, u32 entry count, then
// per entry a u16 name length, the UTF-8 name, and an embedded DTEN
// tensor. Model checkpoints add a synthetic "config" entry holding the
// ModelConfig, so a checkpoint alone reconstructs the architecture.

namespace drk {

void save_checkpoint(const std::string& path, const std::vector<std::pair<std::string, const Tensor<double>*>>& entries);
std::vector<std::pair<std::string, Tensor<double>>> load_checkpoint(const std::string& path);

void save_model(const std::string& path, const MicroModel& m);
MicroModel load_model(const std::string& path);

}  // namespace drk
