// SPDX-License-Identifier: Apache-2.0
#include "gruc/params.hpp"

#include <cmath>
#include <random>

#include "gruc/errors.hpp"

namespace gruc {

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void initialize(Tensor& t, const InitSpec& spec) {
  switch (spec.scheme) {
    case InitScheme::kZeros:
      t.fill(0.0);
      return;
    case InitScheme::kConstant:
      t.fill(spec.constant);
      return;
    case InitScheme::kGlorotUniform: {
      // fan_out = rows, fan_in = cols for a weight applied as W * x.
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : t.values()) v = dist(rng);
      return;
    }
  }
}

Parameter& ParameterSet::add(const std::string& name, std::size_t rows, std::size_t cols,
                             InitScheme scheme, std::uint64_t base_seed, double constant) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("parameter '" + name + "' has an empty shape");
  }
  InitSpec spec{scheme, base_seed ^ stable_hash(name), constant};
  Tensor value(rows, cols);
  initialize(value, spec);
  return set(name, std::move(value), spec);
}

Parameter& ParameterSet::set(const std::string& name, Tensor value, InitSpec init) {
  if (entries_.contains(name)) {
    throw std::invalid_argument("parameter '" + name + "' already exists");
  }
  Tensor grad(value.rows(), value.cols());
  auto [it, _] = entries_.emplace(name, Parameter{std::move(value), std::move(grad), init});
  return it->second;
}

bool ParameterSet::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

Parameter& ParameterSet::at(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : entries_) n += p.value.size();
  return n;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [_, p] : entries_) p.grad.fill(0.0);
}

void ParameterSet::accumulate_grads(const ParameterSet& other, double scale) {
  for (auto& [name, p] : entries_) {
    const Parameter& o = other.at(name);
    if (!o.grad.same_shape(p.grad)) {
      throw DimensionError("gradient shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += scale * o.grad[i];
  }
}

void ParameterSet::scale_grads(double factor) {
  for (auto& [_, p] : entries_) {
    for (double& g : p.grad.values()) g *= factor;
  }
}

}  // namespace gruc
