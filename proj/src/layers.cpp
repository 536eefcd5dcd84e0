// SPDX-License-Identifier: Apache-2.0
#include "gruc/layers.hpp"

#include "gruc/errors.hpp"

namespace gruc {

void add_dense(ParameterSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, bool bias, std::uint64_t seed) {
  params.add(prefix + ".W", out, in, InitScheme::kGlorotUniform, seed);
  if (bias) params.add(prefix + ".b", 1, out, InitScheme::kZeros, seed);
}

ad::Var dense(const ParameterSet& params, const std::string& prefix, ad::Var x) {
  const std::string wname = prefix + ".W";
  const Tensor& w = params.value(wname);
  if (w.cols() != x.cols()) {
    throw DimensionError("dense: parameter '" + wname + "' " + w.shape_str() +
                         " cannot take input " + x.value().shape_str());
  }
  ad::Tape& tape = *x.tape;
  ad::Var y = ad::matmul_nt(x, tape.param(params, wname));
  const std::string bname = prefix + ".b";
  if (params.contains(bname)) y = ad::add(y, tape.param(params, bname));
  return y;
}

ad::Var weight_block(const ParameterSet& params, ad::Tape& tape, const std::string& prefix,
                     std::size_t start, std::size_t len) {
  const std::string wname = prefix + ".W";
  const Tensor& w = params.value(wname);
  if (start + len > w.cols()) {
    throw DimensionError("weight_block: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") outside '" + wname + "' " +
                         w.shape_str());
  }
  ad::Var full = tape.param(params, wname);
  if (start == 0 && len == w.cols()) return full;
  return ad::slice_cols(full, start, len);
}

ad::Var add_bias(const ParameterSet& params, const std::string& prefix, ad::Var y) {
  const std::string bname = prefix + ".b";
  if (!params.contains(bname)) return y;
  return ad::add(y, y.tape->param(params, bname));
}

ad::Var dense_parts(const ParameterSet& params, const std::string& prefix,
                    std::span<const ad::Var> parts) {
  if (parts.empty()) throw DimensionError("dense_parts: no inputs for '" + prefix + "'");
  std::size_t total = 0;
  for (const ad::Var& p : parts) total += p.cols();
  const Tensor& w = params.value(prefix + ".W");
  if (total != w.cols()) {
    throw DimensionError("dense: parameter '" + prefix + ".W' " + w.shape_str() +
                         " cannot take " + std::to_string(total) + " input columns");
  }
  ad::Tape& tape = *parts.front().tape;
  std::size_t offset = 0;
  std::optional<ad::Var> y;
  for (const ad::Var& p : parts) {
    ad::Var term = ad::matmul_nt(p, weight_block(params, tape, prefix, offset, p.cols()));
    y = y ? ad::add(*y, term) : term;
    offset += p.cols();
  }
  return add_bias(params, prefix, *y);
}

void GruCell::add_params(ParameterSet& params, std::uint64_t seed) const {
  for (const char* gate : {"z", "r", "h"}) {
    const std::string g(gate);
    params.add(prefix + ".W" + g, hidden_dim, input_dim, InitScheme::kGlorotUniform, seed);
    params.add(prefix + ".U" + g, hidden_dim, hidden_dim, InitScheme::kGlorotUniform, seed);
    params.add(prefix + ".b" + g, 1, hidden_dim, InitScheme::kZeros, seed);
  }
}

ad::Var GruCell::step(const ParameterSet& params, ad::Var h, ad::Var x) const {
  if (h.cols() != hidden_dim || x.cols() != input_dim || h.rows() != x.rows()) {
    throw DimensionError("gru '" + prefix + "': h " + h.value().shape_str() + ", x " +
                         x.value().shape_str() + " for input " + std::to_string(input_dim) +
                         ", hidden " + std::to_string(hidden_dim));
  }
  ad::Tape& t = *h.tape;
  auto p = [&](const std::string& s) { return t.param(params, prefix + "." + s); };
  auto gate = [&](const std::string& g, ad::Var hh) {
    return ad::add(ad::add(ad::matmul_nt(x, p("W" + g)), ad::matmul_nt(hh, p("U" + g))),
                   p("b" + g));
  };
  ad::Var z = ad::sigmoid(gate("z", h));
  ad::Var r = ad::sigmoid(gate("r", h));
  ad::Var cand = ad::tanh(gate("h", ad::mul(r, h)));
  // (1 - z) * h + z * h~
  return ad::add(ad::mul(ad::affine(z, -1.0, 1.0), h), ad::mul(z, cand));
}

void LstmCell::add_params(ParameterSet& params, std::uint64_t seed) const {
  params.add(prefix + ".Wx", 4 * hidden_dim, input_dim, InitScheme::kGlorotUniform, seed);
  params.add(prefix + ".Wh", 4 * hidden_dim, hidden_dim, InitScheme::kGlorotUniform, seed);
  params.add(prefix + ".b", 1, 4 * hidden_dim, InitScheme::kZeros, seed);
}

void LstmCell::step(const ParameterSet& params, ad::Var x, ad::Var& h, ad::Var& c) const {
  if (x.cols() != input_dim) {
    throw DimensionError("lstm '" + prefix + "': input " + x.value().shape_str() +
                         " for input dim " + std::to_string(input_dim));
  }
  ad::Tape& t = *x.tape;
  ad::Var pre = ad::add(ad::add(ad::matmul_nt(x, t.param(params, prefix + ".Wx")),
                                ad::matmul_nt(h, t.param(params, prefix + ".Wh"))),
                        t.param(params, prefix + ".b"));
  const std::size_t hd = hidden_dim;
  ad::Var i = ad::sigmoid(ad::slice_cols(pre, 0, hd));
  ad::Var f = ad::sigmoid(ad::slice_cols(pre, hd, hd));
  ad::Var g = ad::tanh(ad::slice_cols(pre, 2 * hd, hd));
  ad::Var o = ad::sigmoid(ad::slice_cols(pre, 3 * hd, hd));
  c = ad::add(ad::mul(f, c), ad::mul(i, g));
  h = ad::mul(o, ad::tanh(c));
}

}  // namespace gruc
