#pragma once
// Binary checkpoint, all numbers little-endian:
//
//   "CPSRCKPT"  u32 version  u32 dim  u32 num_relations  u32 flags
//   u64 param_count
//   f64[] rel_emb, mix, w_path, w_out
//   u64 adam_step  f64 lr, beta1, beta2, eps
//   f64[] first moments, second moments (same block order)
//   u32 epochs_done  u32 best_epoch  f64 best_valid_mrr
//
// flags bit 0: shared mixing matrix.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "cpsr/model.hpp"
#include "cpsr/optimizer.hpp"

namespace cpsr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingState {
    std::uint32_t epochs_done = 0;
    std::uint32_t best_epoch = 0;
    double best_valid_mrr = -1.0;

    bool operator==(const TrainingState&) const = default;
};

struct Checkpoint {
    ModelParams params;
    OptimizerState optimizer;
    TrainingState training;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error naming the file when it is missing or malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cpsr
