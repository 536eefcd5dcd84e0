// SPDX-License-Identifier: Apache-2.0
#include "gruc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gruc/errors.hpp"
#include "gruc/kernels.hpp"

namespace gruc::ad {

const Tensor& Var::value() const { return tape->value(id); }

// ---- tape ------------------------------------------------------------------

Var Tape::constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(const ParameterSet& params, const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) {
    return Var{this, it->second};
  }
  Node n;
  n.external = &params.value(name);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(name, id);
  param_leaves_.emplace_back(name, id);
  return Var{this, id};
}

Var Tape::push(Tensor value, bool needs_grad,
               std::function<void(Tape&, std::uint32_t)> backward) {
  Node n;
  n.own = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.own;
}

Tensor& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = value(id);
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: var from another tape");
  const Tensor& lv = value(loss.id);
  if (lv.size() != 1) {
    throw DimensionError("backward: loss must be scalar, got " + lv.shape_str());
  }
  grad(loss.id)[0] += 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

void Tape::accumulate_param_grads(ParameterSet& target, double scale) const {
  for (const auto& [name, id] : param_leaves_) {
    const Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    Tensor& g = target.at(name).grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * n.grad[i];
  }
}

std::vector<std::pair<std::string, Tensor>> Tape::take_param_grads() {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(param_leaves_.size());
  for (const auto& [name, id] : param_leaves_) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    out.emplace_back(name, std::move(n.grad));
    n.grad = Tensor();
  }
  return out;
}

// ---- helpers ---------------------------------------------------------------

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("ops on vars from different tapes");
}

void require_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

void add_into(Tensor& dst, const Tensor& src) {
  kernels::axpy(1.0, src.data(), dst.data(), dst.size());
}

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv_from_output) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, deriv_from_output](Tape& t, std::uint32_t self) {
                        const Tensor& y = t.value(self);
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        const Tensor& xv = t.value(xi);
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          gx[i] += g[i] * deriv_from_output(xv[i], y[i]);
                        }
                      });
}

}  // namespace

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax_values(std::span<const double> v) {
  if (v.empty()) throw DomainError("softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    s += out[i];
  }
  for (double& o : out) o /= s;
  return out;
}

// ---- linear algebra -------------------------------------------------------

Var matmul_nt(Var x, Var w) {
  require_same_tape(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.cols() != wv.cols()) {
    throw DimensionError("matmul: input " + xv.shape_str() + " vs weight " + wv.shape_str());
  }
  Tensor out(xv.rows(), wv.rows());
  kernels::matmul_nt(xv.data(), xv.rows(), xv.cols(), wv.data(), wv.rows(), out.data());
  Tape& tape = *x.tape;
  const std::uint32_t xi = x.id, wi = w.id;
  const bool gx = tape.needs_grad(xi), gw = tape.needs_grad(wi);
  return tape.push(std::move(out), gx || gw, [xi, wi, gx, gw](Tape& t, std::uint32_t self) {
    const Tensor& xv = t.value(xi);
    const Tensor& wv = t.value(wi);
    const Tensor& g = t.grad(self);
    double* dx = gx ? t.grad(xi).data() : nullptr;
    double* dw = gw ? t.grad(wi).data() : nullptr;
    kernels::matmul_nt_backward(xv.data(), xv.rows(), xv.cols(), wv.data(), wv.rows(),
                                g.data(), dx, dw);
  });
}

Var linear(Var x, Var w, std::optional<Var> b) {
  Var y = matmul_nt(x, w);
  return b ? add(y, *b) : y;
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = !av.same_shape(bv);
  if (broadcast && !(bv.rows() == 1 && bv.cols() == av.cols())) {
    throw DimensionError("add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor out = av;
  if (broadcast) {
    for (std::size_t r = 0; r < av.rows(); ++r) {
      kernels::axpy(1.0, bv.data(), out.data() + r * av.cols(), av.cols());
    }
  } else {
    add_into(out, bv);
  }
  Tape& tape = *a.tape;
  const std::uint32_t ai = a.id, bi = b.id;
  const bool ga = tape.needs_grad(ai), gb = tape.needs_grad(bi);
  return tape.push(std::move(out), ga || gb,
                   [ai, bi, ga, gb, broadcast](Tape& t, std::uint32_t self) {
                     const Tensor& g = t.grad(self);
                     if (ga) add_into(t.grad(ai), g);
                     if (gb) {
                       Tensor& db = t.grad(bi);
                       if (broadcast) {
                         for (std::size_t r = 0; r < g.rows(); ++r) {
                           kernels::axpy(1.0, g.data() + r * g.cols(), db.data(), g.cols());
                         }
                       } else {
                         add_into(db, g);
                       }
                     }
                   });
}

Var sub(Var a, Var b) { return add(a, affine(b, -1.0, 0.0)); }

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_shape(av, bv, "mul");
  Tensor out(av.rows(), av.cols());
  kernels::mul_add(av.data(), bv.data(), out.data(), out.size());
  Tape& tape = *a.tape;
  const std::uint32_t ai = a.id, bi = b.id;
  const bool ga = tape.needs_grad(ai), gb = tape.needs_grad(bi);
  return tape.push(std::move(out), ga || gb, [ai, bi, ga, gb](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (ga) kernels::mul_add(g.data(), t.value(bi).data(), t.grad(ai).data(), g.size());
    if (gb) kernels::mul_add(g.data(), t.value(ai).data(), t.grad(bi).data(), g.size());
  });
}

Var affine(Var x, double scale, double shift) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = scale * xv[i] + shift;
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, scale](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        kernels::axpy(scale, g.data(), t.grad(xi).data(), g.size());
                      });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary(x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

// ---- shape ops ---------------------------------------------------------------

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& tape = *parts.front().tape;
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool needs = false;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
                           std::to_string(rows));
    }
    cols += p.cols();
    needs = needs || tape.needs_grad(p.id);
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.data() + r * pv.cols(), pv.cols(), out.data() + r * cols + off);
    }
    off += pv.cols();
  }
  return tape.push(std::move(out), needs, [ids, widths, cols](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (t.needs_grad(ids[p])) {
        Tensor& gp = t.grad(ids[p]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          kernels::axpy(1.0, g.data() + r * cols + off, gp.data() + r * widths[p], widths[p]);
        }
      }
      off += widths[p];
    }
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(Var x, std::size_t start, std::size_t len) {
  const Tensor& xv = x.value();
  if (start + len > xv.cols()) throw DimensionError("slice_cols: out of range");
  Tensor out(xv.rows(), len);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    std::copy_n(xv.data() + r * xv.cols() + start, len, out.data() + r * len);
  }
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, start, len](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        for (std::size_t r = 0; r < g.rows(); ++r) {
                          kernels::axpy(1.0, g.data() + r * len,
                                        gx.data() + r * gx.cols() + start, len);
                        }
                      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  Tape& tape = *parts.front().tape;
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool needs = false;
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows: column mismatch");
    rows += p.rows();
    needs = needs || tape.needs_grad(p.id);
    ids.push_back(p.id);
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    std::copy_n(pv.data(), pv.size(), out.data() + off);
    off += pv.size();
  }
  return tape.push(std::move(out), needs, [ids](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (std::uint32_t id : ids) {
      const std::size_t n = t.value(id).size();
      if (t.needs_grad(id)) kernels::axpy(1.0, g.data() + off, t.grad(id).data(), n);
      off += n;
    }
  });
}

Var gather_rows(Var x, Index idx) {
  const Tensor& xv = x.value();
  const std::size_t k = xv.cols();
  Tensor out(idx.size(), k);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= xv.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(xv.data() + idx[r] * k, k, out.data() + r * k);
  }
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, idx = std::move(idx), k](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        for (std::size_t r = 0; r < idx.size(); ++r) {
                          kernels::axpy(1.0, g.data() + r * k, gx.data() + idx[r] * k, k);
                        }
                      });
}

Var scatter_add_rows(Var x, Index idx, std::size_t rows) {
  const Tensor& xv = x.value();
  if (idx.size() != xv.rows()) throw DimensionError("scatter_add_rows: index length");
  const std::size_t k = xv.cols();
  Tensor out(rows, k);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows) throw DimensionError("scatter_add_rows: index out of range");
    kernels::axpy(1.0, xv.data() + r * k, out.data() + idx[r] * k, k);
  }
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, idx = std::move(idx), k](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        for (std::size_t r = 0; r < idx.size(); ++r) {
                          kernels::axpy(1.0, g.data() + idx[r] * k, gx.data() + r * k, k);
                        }
                      });
}

Var mul_rows(Var x, Var w) {
  require_same_tape(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (wv.cols() != 1 || wv.rows() != xv.rows()) {
    throw DimensionError("mul_rows: weights " + wv.shape_str() + " for " + xv.shape_str());
  }
  const std::size_t k = xv.cols();
  Tensor out(xv.rows(), k);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    kernels::axpy(wv[r], xv.data() + r * k, out.data() + r * k, k);
  }
  Tape& tape = *x.tape;
  const std::uint32_t xi = x.id, wi = w.id;
  const bool gx = tape.needs_grad(xi), gw = tape.needs_grad(wi);
  return tape.push(std::move(out), gx || gw, [xi, wi, gx, gw, k](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(xi);
    const Tensor& wv = t.value(wi);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (gx) kernels::axpy(wv[r], g.data() + r * k, t.grad(xi).data() + r * k, k);
      if (gw) t.grad(wi)[r] += kernels::dot(g.data() + r * k, xv.data() + r * k, k);
    }
  });
}

Var broadcast_rows(Var x, std::size_t n) {
  const Tensor& xv = x.value();
  if (xv.rows() != 1) throw DimensionError("broadcast_rows: expects a single row");
  const std::size_t k = xv.cols();
  Tensor out(n, k);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(xv.data(), k, out.data() + r * k);
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, k](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        for (std::size_t r = 0; r < g.rows(); ++r) {
                          kernels::axpy(1.0, g.data() + r * k, gx.data(), k);
                        }
                      });
}

Var sum_all(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  const std::uint32_t xi = x.id;
  return x.tape->push(Tensor(1, 1, s), x.tape->needs_grad(xi),
                      [xi](Tape& t, std::uint32_t self) {
                        const double g = t.grad(self)[0];
                        for (double& v : t.grad(xi).values()) v += g;
                      });
}

Var mean_rows(Var x) {
  const Tensor& xv = x.value();
  if (xv.rows() == 0) throw DomainError("mean_rows: no rows");
  const std::size_t k = xv.cols();
  const double inv = 1.0 / static_cast<double>(xv.rows());
  Tensor out(1, k);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    kernels::axpy(1.0, xv.data() + r * k, out.data(), k);
  }
  for (double& v : out.values()) v *= inv;
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, k, inv](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(xi);
                        for (std::size_t r = 0; r < gx.rows(); ++r) {
                          kernels::axpy(inv, g.data(), gx.data() + r * k, k);
                        }
                      });
}

// ---- normalizers and losses ----------------------------------------------------

Var softmax_segments(Var scores, Index segment, std::size_t segments) {
  const Tensor& sv = scores.value();
  if (sv.cols() != 1 || sv.rows() != segment.size()) {
    throw DimensionError("softmax_segments: scores " + sv.shape_str() + " vs " +
                         std::to_string(segment.size()) + " segment ids");
  }
  if (sv.rows() == 0) throw DomainError("softmax: empty input");
  std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < segment.size(); ++r) {
    if (segment[r] >= segments) throw DimensionError("softmax_segments: segment id");
    mx[segment[r]] = std::max(mx[segment[r]], sv[r]);
  }
  std::vector<double> denom(segments, 0.0);
  Tensor out(sv.rows(), 1);
  for (std::size_t r = 0; r < segment.size(); ++r) {
    out[r] = std::exp(sv[r] - mx[segment[r]]);
    denom[segment[r]] += out[r];
  }
  for (std::size_t r = 0; r < segment.size(); ++r) out[r] /= denom[segment[r]];
  const std::uint32_t si = scores.id;
  return scores.tape->push(
      std::move(out), scores.tape->needs_grad(si),
      [si, segment = std::move(segment), segments](Tape& t, std::uint32_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        std::vector<double> inner(segments, 0.0);
        for (std::size_t r = 0; r < segment.size(); ++r) inner[segment[r]] += g[r] * y[r];
        Tensor& gs = t.grad(si);
        for (std::size_t r = 0; r < segment.size(); ++r) {
          gs[r] += y[r] * (g[r] - inner[segment[r]]);
        }
      });
}

Var softmax(Var scores) {
  const Tensor& sv = scores.value();
  if (sv.rows() != 1 && sv.cols() != 1) throw DimensionError("softmax: expects a vector");
  if (sv.size() == 0) throw DomainError("softmax: empty input");
  Tensor out(sv.rows(), sv.cols(), softmax_values(sv.values()));
  const std::uint32_t si = scores.id;
  return scores.tape->push(std::move(out),
                           scores.tape->needs_grad(si), [si](Tape& t, std::uint32_t self) {
                             const Tensor& y = t.value(self);
                             const Tensor& g = t.grad(self);
                             const double inner = kernels::dot(g.data(), y.data(), y.size());
                             Tensor& gs = t.grad(si);
                             for (std::size_t i = 0; i < y.size(); ++i) {
                               gs[i] += y[i] * (g[i] - inner);
                             }
                           });
}

Var weighted_bce(Var probs, std::span<const double> labels, double pos_weight,
                 double neg_weight, double eps) {
  const Tensor& pv = probs.value();
  if (pv.size() != labels.size()) {
    throw DimensionError("weighted_bce: " + std::to_string(pv.size()) + " probabilities vs " +
                         std::to_string(labels.size()) + " labels");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], eps, 1.0 - eps);
    loss -= pos_weight * labels[i] * std::log(p) +
            neg_weight * (1.0 - labels[i]) * std::log(1.0 - p);
  }
  const std::uint32_t pi = probs.id;
  std::vector<double> y(labels.begin(), labels.end());
  return probs.tape->push(
      Tensor(1, 1, loss), probs.tape->needs_grad(pi),
      [pi, y = std::move(y), pos_weight, neg_weight, eps](Tape& t, std::uint32_t self) {
        const double g = t.grad(self)[0];
        const Tensor& pv = t.value(pi);
        Tensor& gp = t.grad(pi);
        for (std::size_t i = 0; i < pv.size(); ++i) {
          if (pv[i] < eps || pv[i] > 1.0 - eps) continue;  // clamped: flat
          const double p = pv[i];
          gp[i] += g * (-pos_weight * y[i] / p + neg_weight * (1.0 - y[i]) / (1.0 - p));
        }
      });
}

Var softmax_cross_entropy(Var logits, std::size_t target) {
  const Tensor& lv = logits.value();
  if (lv.rows() != 1) throw DimensionError("softmax_cross_entropy: expects a 1 x R row");
  if (target >= lv.cols()) throw DomainError("softmax_cross_entropy: target out of range");
  std::vector<double> p = softmax_values(lv.values());
  const double loss = -std::log(std::max(p[target], std::numeric_limits<double>::min()));
  const std::uint32_t li = logits.id;
  return logits.tape->push(Tensor(1, 1, loss), logits.tape->needs_grad(li),
                           [li, p = std::move(p), target](Tape& t, std::uint32_t self) {
                             const double g = t.grad(self)[0];
                             Tensor& gl = t.grad(li);
                             for (std::size_t i = 0; i < p.size(); ++i) {
                               gl[i] += g * (p[i] - (i == target ? 1.0 : 0.0));
                             }
                           });
}

Var dropout(Var x, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& xv = x.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(xv.size());
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = keep(rng) ? keep_scale : 0.0;
    out[i] = xv[i] * mask[i];
  }
  const std::uint32_t xi = x.id;
  return x.tape->push(std::move(out), x.tape->needs_grad(xi),
                      [xi, mask = std::move(mask)](Tape& t, std::uint32_t self) {
                        const Tensor& g = t.grad(self);
                        kernels::mul_add(g.data(), mask.data(), t.grad(xi).data(), g.size());
                      });
}

}  // namespace gruc::ad
