#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "drk/model.hpp"
#include "drk/raf_loss.hpp"

// Training loop with the full protocol: Adam, milestone LR decay,
// optional global-norm clipping, Kaiming init, RAF loss. Deterministic:
// one seed fixes the init, the epoch shuffles, and therefore the history
// and checkpoints byte for byte.

namespace drk {

struct TrainConfig {
    long epochs = 50;
    long batch = 64;
    std::uint64_t seed = 0;
    RafConfig raf;
    bool eval_every_epoch = true;
    double base_lr = 1e-4;
    std::vector<long> milestones = {15, 30};
    double decay = 0.1;
    double clip_max_norm = 0;
    ModelConfig model;

    void validate() const;
};

struct EpochRecord {
    long epoch = 0;
    double lr = 0;
    double loss_total = 0, loss_bce = 0, loss_focal = 0, loss_dice = 0;
    double val_miou = 0;
};

struct TrainResult {
    MicroModel model;
    std::vector<EpochRecord> history;
};

// Split: first 80% train, last 20% validation, by sample index.
std::pair<std::vector<long>, std::vector<long>> split_indices(long n);

// ckpt_path / history_path may be empty to skip writing. The checkpoint
// is rewritten after every epoch, so a divergence abort (numeric error)
// leaves the last finite-loss epoch on disk.
TrainResult train(const std::vector<ToySample>& dataset, const TrainConfig& cfg, const std::string& ckpt_path = "",
                  const std::string& history_path = "");

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);

struct AblationRow {
    std::string variant;
    double miou = 0;
    double prec[5] = {0, 0, 0, 0, 0};  // P@50..P@90
};

// Four variants, each trained for every seed in {base_seed .. base_seed +
// n_seeds - 1} and averaged:
//   a) plain conv block, BCE-only loss
//   b) plain conv block, RAF loss
//   c) deformable conv + residual shortcut, RAF loss
//   d) full block (deformable + SE + residual), RAF loss
std::vector<AblationRow> ablate(const std::vector<ToySample>& dataset, const TrainConfig& base, long n_seeds);

void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows);

}  // namespace drk
