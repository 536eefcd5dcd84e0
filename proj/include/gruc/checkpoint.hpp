// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary checkpoint, little-endian:
//   magic "GRUCCKPT", u32 format version, u64 creation seed,
//   str metadata (JSON: model config, relation vocabulary, ...),
//   u64 tensor count, then per tensor: str name, u64 rows, u64 cols, f64[] values,
//   i64 adam step, f64 beta1, f64 beta2, f64 eps,
//   u64 moment count, then per entry: str name, f64[] m, f64[] v (shapes as tensor),
//   f64 schedule epoch, i64 global step, str rng state.
// where str = u64 length + bytes.

#include <cstdint>
#include <filesystem>
#include <string>

#include "gruc/optim.hpp"
#include "gruc/params.hpp"

namespace gruc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t seed = 0;
  std::string metadata;
  ParameterSet params;
  AdamState adam;
  double schedule_epoch = 0.0;
  std::int64_t global_step = 0;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gruc
