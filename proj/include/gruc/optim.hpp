// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gruc/params.hpp"

namespace gruc {

/// Linear warmup from warmup_factor * base_lr to base_lr over
/// [0, warmup_epochs], then cosine annealing from base_lr to eta_min over
/// [warmup_epochs, total_epochs].
struct LrSchedule {
  double base_lr = 1e-3;
  double warmup_epochs = 2.0;
  double warmup_factor = 0.2;
  double eta_min = 3.6e-4;
  double total_epochs = 10.0;

  /// `epoch` is fractional progress in [0, total_epochs].
  double lr_at(double epoch) const;
  void validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::map<std::string, AdamMoments, std::less<>> moments;
};

/// One bias-corrected Adam update using each parameter's `grad`. All
/// gradients are checked before any parameter moves; a non-finite entry
/// raises DataError naming the parameter and leaves `params` untouched.
void adam_step(ParameterSet& params, AdamState& state, double lr);

}  // namespace gruc
