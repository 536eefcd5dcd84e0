// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "gruc/params.hpp"

namespace gruc {

struct GradCheckOptions {
  double eps = 1e-6;
  double tol = 1e-4;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 8;
  /// Relative error denominator floor: |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  bool passed = false;
};

/// `loss_and_grad` evaluates the scalar loss at the current parameter values
/// and, when its second argument is true, writes d(loss)/d(param) into each
/// parameter's `grad` (which the checker zeroes first). Analytic gradients are
/// compared against central differences on sampled coordinates.
///
/// Throws DataError if two evaluations at the same point disagree.
using LossAndGrad = std::function<double(ParameterSet&, bool want_grad)>;

GradCheckReport grad_check(const LossAndGrad& loss_and_grad, ParameterSet& params,
                           const GradCheckOptions& options = {});

}  // namespace gruc
