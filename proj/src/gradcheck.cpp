// SPDX-License-Identifier: Apache-2.0
#include "gruc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "gruc/errors.hpp"

namespace gruc {

GradCheckReport grad_check(const LossAndGrad& loss_and_grad, ParameterSet& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  const double base = loss_and_grad(params, true);
  const double again = loss_and_grad(params, false);
  if (base != again) {
    throw DataError("grad_check: loss is not deterministic (" + std::to_string(base) +
                    " vs " + std::to_string(again) + ")");
  }

  // Snapshot analytic gradients; the probes below must not disturb them.
  std::map<std::string, Tensor> analytic;
  for (const auto& [name, p] : params) analytic.emplace(name, p.grad);

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (auto& [name, p] : params) {
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + options.eps;
      const double up = loss_and_grad(params, false);
      p.value[i] = saved - options.eps;
      const double down = loss_and_grad(params, false);
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic.at(name)[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (report.worst_param.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  for (auto& [name, p] : params) p.grad = analytic.at(name);
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace gruc
