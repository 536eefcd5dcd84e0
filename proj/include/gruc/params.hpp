// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gruc/tensor.hpp"

namespace gruc {

enum class InitScheme { kGlorotUniform, kZeros, kConstant };

struct InitSpec {
  InitScheme scheme = InitScheme::kGlorotUniform;
  std::uint64_t seed = 0;
  double constant = 0.0;
};

struct Parameter {
  Tensor value;
  Tensor grad;
  InitSpec init;
};

/// Named trainable tensors. Iteration order is lexicographic by name, which
/// makes optimizer updates and checkpoints independent of insertion order.
class ParameterSet {
 public:
  /// Adds and initializes a parameter. The per-parameter seed is derived from
  /// `base_seed` and the name, so values do not depend on creation order.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols,
                 InitScheme scheme, std::uint64_t base_seed, double constant = 0.0);
  /// Adds a parameter with an explicit value (checkpoint restore, tests).
  Parameter& set(const std::string& name, Tensor value, InitSpec init = {});

  bool contains(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Tensor& value(std::string_view name) { return at(name).value; }
  const Tensor& value(std::string_view name) const { return at(name).value; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;

  void zero_grad();
  /// Adds `other`'s gradients into this set's gradients (same names/shapes).
  void accumulate_grads(const ParameterSet& other, double scale = 1.0);
  void scale_grads(double factor);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Parameter, std::less<>> entries_;
};

/// FNV-1a; stable across platforms, used to derive per-name seeds.
std::uint64_t stable_hash(std::string_view text);

void initialize(Tensor& t, const InitSpec& spec);

}  // namespace gruc
