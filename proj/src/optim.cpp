// SPDX-License-Identifier: Apache-2.0
#include "gruc/optim.hpp"

#include <cmath>
#include <numbers>

#include "gruc/errors.hpp"

namespace gruc {

void LrSchedule::validate() const {
  if (!(base_lr > 0.0 && eta_min > 0.0 && eta_min <= base_lr)) {
    throw DomainError("lr schedule: need 0 < eta_min <= base_lr");
  }
  if (!(warmup_factor > 0.0 && warmup_factor <= 1.0)) {
    throw DomainError("lr schedule: warmup_factor must be in (0, 1]");
  }
  if (!(warmup_epochs >= 0.0 && total_epochs > warmup_epochs)) {
    throw DomainError("lr schedule: need 0 <= warmup_epochs < total_epochs");
  }
}

double LrSchedule::lr_at(double epoch) const {
  if (!(epoch >= 0.0 && epoch <= total_epochs)) {
    throw DomainError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(total_epochs) + "]");
  }
  if (epoch <= warmup_epochs && warmup_epochs > 0.0) {
    const double frac = epoch / warmup_epochs;
    return base_lr * (warmup_factor + (1.0 - warmup_factor) * frac);
  }
  const double s = (epoch - warmup_epochs) / (total_epochs - warmup_epochs);
  return eta_min + 0.5 * (base_lr - eta_min) * (1.0 + std::cos(std::numbers::pi * s));
}

void adam_step(ParameterSet& params, AdamState& state, double lr) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) {
      throw DataError("adam: non-finite gradient for parameter '" + name + "'");
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, p] : params) {
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(name, AdamMoments{Tensor(p.value.rows(), p.value.cols()),
                                          Tensor(p.value.rows(), p.value.cols())})
               .first;
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace gruc
