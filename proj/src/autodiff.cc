/*
 * Copyright 2026 The TabCF Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tabcf/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tabcf/errors.h"

namespace tabcf::ad {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::Constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  return Push(std::move(node));
}

Var Tape::ConstantRef(const Tensor& value) {
  Node node;
  node.ref = &value;
  return Push(std::move(node));
}

Var Tape::Param(Tensor& param) {
  Node node;
  node.ref = &param;
  if (param.requires_grad) {
    node.sink = &param;
    node.needs_grad = true;
  }
  return Push(std::move(node));
}

Var Tape::Watch(const Tensor& value) {
  Node node;
  node.ref = &value;
  node.needs_grad = true;
  return Push(std::move(node));
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value(); }

std::span<const double> Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  return node.grad;
}

std::vector<double>& Tape::GradBuffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value().size(), 0.0);
  return node.grad;
}

Var Tape::Record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape != this) {
      throw ContractError("operation mixes variables from different tapes");
    }
    node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(fn);
  return Push(std::move(node));
}

void Tape::Backward(Var loss) {
  if (consumed_) {
    throw ContractError("backward called twice on the same tape");
  }
  if (loss.tape != this) throw ContractError("loss belongs to another tape");
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        ShapeToString(lv.shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id].needs_grad) return;
  GradBuffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, node.grad);
  }
  for (Node& node : nodes_) {
    if (node.sink == nullptr || node.grad.empty()) continue;
    if (!node.sink->grad) {
      node.sink->grad = node.grad;
    } else {
      auto& g = *node.sink->grad;
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += node.grad[k];
    }
  }
}

namespace {

struct BroadcastPlan {
  Shape out;
  std::size_t a_mod = 0;  // 0 means full-size operand
  std::size_t b_mod = 0;
};

Shape StripLeadingOnes(const Shape& s) {
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == 1) ++i;
  return Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
}

bool IsSuffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(),
                    big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

BroadcastPlan PlanBroadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan plan;
  const std::size_t na = NumElements(a);
  const std::size_t nb = NumElements(b);
  if (a == b) {
    plan.out = a;
  } else if (na == nb && StripLeadingOnes(a) == StripLeadingOnes(b)) {
    plan.out = a.size() >= b.size() ? a : b;  // e.g. {1,d} with {d}
  } else if (nb == 1) {
    plan.out = a;
    plan.b_mod = 1;
  } else if (na == 1) {
    plan.out = b;
    plan.a_mod = 1;
  } else if (nb < na && IsSuffix(StripLeadingOnes(b), a)) {
    plan.out = a;
    plan.b_mod = nb;
  } else if (na < nb && IsSuffix(StripLeadingOnes(a), b)) {
    plan.out = b;
    plan.a_mod = na;
  } else {
    throw ShapeError(std::string(op) + ": cannot broadcast " +
                     ShapeToString(a) + " with " + ShapeToString(b));
  }
  return plan;
}

inline std::size_t Idx(std::size_t i, std::size_t mod) {
  return mod == 0 ? i : i % mod;
}

enum class BinaryOp { kAdd, kSub, kMul };

Var Binary(Var a, Var b, BinaryOp op, const char* name) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  BroadcastPlan plan = PlanBroadcast(av.shape(), bv.shape(), name);
  Tensor out(plan.out);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[Idx(i, plan.a_mod)];
    const double y = bv[Idx(i, plan.b_mod)];
    switch (op) {
      case BinaryOp::kAdd: out[i] = x + y; break;
      case BinaryOp::kSub: out[i] = x - y; break;
      case BinaryOp::kMul: out[i] = x * y; break;
    }
  }
  const Var inputs[] = {a, b};
  return a.tape->Record(
      std::move(out), inputs,
      [a, b, op, plan](Tape& t, const std::vector<double>& g) {
        const std::size_t n = g.size();
        if (t.NeedsGrad(a.id)) {
          auto& ga = t.GradBuffer(a.id);
          const Tensor& bv = t.value(b);
          for (std::size_t i = 0; i < n; ++i) {
            const double d = op == BinaryOp::kMul ? bv[Idx(i, plan.b_mod)] : 1.0;
            ga[Idx(i, plan.a_mod)] += g[i] * d;
          }
        }
        if (t.NeedsGrad(b.id)) {
          auto& gb = t.GradBuffer(b.id);
          const Tensor& av = t.value(a);
          for (std::size_t i = 0; i < n; ++i) {
            double d = 1.0;
            if (op == BinaryOp::kSub) d = -1.0;
            if (op == BinaryOp::kMul) d = av[Idx(i, plan.a_mod)];
            gb[Idx(i, plan.b_mod)] += g[i] * d;
          }
        }
      });
}

}  // namespace

Var Add(Var a, Var b) { return Binary(a, b, BinaryOp::kAdd, "add"); }
Var Sub(Var a, Var b) { return Binary(a, b, BinaryOp::kSub, "sub"); }
Var Mul(Var a, Var b) { return Binary(a, b, BinaryOp::kMul, "mul"); }

namespace {

// Elementwise op whose derivative is expressed through input x and output y.
template <typename F, typename DF>
Var Elementwise(Var a, F fn, DF dfn) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fn(av[i]);
  Tensor y = out;
  const Var inputs[] = {a};
  return a.tape->Record(
      std::move(out), inputs,
      [a, dfn, y = std::move(y)](Tape& t, const std::vector<double>& g) {
        auto& ga = t.GradBuffer(a.id);
        const Tensor& av = t.value(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * dfn(av[i], y[i]);
        }
      });
}

}  // namespace

Var Neg(Var a) { return Scale(a, -1.0); }

Var Scale(Var a, double factor) {
  return Elementwise(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var AddScalar(Var a, double offset) {
  return Elementwise(
      a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var Sigmoid(Var a) {
  return Elementwise(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Exp(Var a) {
  return Elementwise(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(Var a) {
  for (double x : a.value().values()) {
    if (!(x > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(x));
    }
  }
  return Elementwise(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Relu(Var a) {
  return Elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Abs(Var a) {
  return Elementwise(
      a, [](double x) { return std::abs(x); },
      [](double x, double) {
        return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      });
}

Var MaxWithConst(Var a, double c) {
  return Elementwise(
      a, [c](double x) { return x > c ? x : c; },
      [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

namespace {

std::size_t LastDim(const Tensor& t, const char* op) {
  if (t.rank() == 0 || t.shape().back() == 0) {
    throw ShapeError(std::string(op) + ": empty last dimension");
  }
  return t.shape().back();
}

}  // namespace

Var SoftmaxLastDim(Var a) {
  const Tensor& av = a.value();
  const std::size_t cols = LastDim(av, "softmax");
  const std::size_t rows = av.size() / cols;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &av[r * cols];
    double* y = &out[r * cols];
    const double m = *std::max_element(x, x + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += (y[c] = std::exp(x[c] - m));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= s;
  }
  Tensor y = out;
  const Var inputs[] = {a};
  return a.tape->Record(
      std::move(out), inputs,
      [a, rows, cols, y = std::move(y)](Tape& t, const std::vector<double>& g) {
        auto& ga = t.GradBuffer(a.id);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t o = r * cols;
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += g[o + c] * y[o + c];
          for (std::size_t c = 0; c < cols; ++c) {
            ga[o + c] += y[o + c] * (g[o + c] - dot);
          }
        }
      });
}

Var LogSoftmaxLastDim(Var a) {
  const Tensor& av = a.value();
  const std::size_t cols = LastDim(av, "log_softmax");
  const std::size_t rows = av.size() / cols;
  Tensor out(av.shape());
  Tensor probs(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &av[r * cols];
    const double m = *std::max_element(x, x + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(x[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = x[c] - lse;
      probs[r * cols + c] = std::exp(x[c] - lse);
    }
  }
  const Var inputs[] = {a};
  return a.tape->Record(
      std::move(out), inputs,
      [a, rows, cols, p = std::move(probs)](Tape& t,
                                            const std::vector<double>& g) {
        auto& ga = t.GradBuffer(a.id);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t o = r * cols;
          double total = 0.0;
          for (std::size_t c = 0; c < cols; ++c) total += g[o + c];
          for (std::size_t c = 0; c < cols; ++c) {
            ga[o + c] += g[o + c] - p[o + c] * total;
          }
        }
      });
}

Var Sum(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const Var inputs[] = {a};
  return a.tape->Record(Tensor::Scalar(s), inputs,
                        [a](Tape& t, const std::vector<double>& g) {
                          for (double& x : t.GradBuffer(a.id)) x += g[0];
                        });
}

Var Mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(n));
}

Var L2Norm(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x * x;
  const double norm = std::sqrt(s);
  const Var inputs[] = {a};
  return a.tape->Record(
      Tensor::Scalar(norm), inputs,
      [a, norm](Tape& t, const std::vector<double>& g) {
        if (norm == 0.0) return;
        auto& ga = t.GradBuffer(a.id);
        const Tensor& av = t.value(a);
        for (std::size_t i = 0; i < ga.size(); ++i) {
          ga[i] += g[0] * av[i] / norm;
        }
      });
}

Var MatMul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + ShapeToString(av.shape()) +
                     " and " + ShapeToString(bv.shape()));
  }
  const std::size_t m = av.dim(0), n = av.dim(1), p = bv.dim(1);
  Tensor out({m, p});
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out[i * p];
    for (std::size_t k = 0; k < n; ++k) {
      const double x = av[i * n + k];
      if (x == 0.0) continue;
      const double* brow = &bv[k * p];
      for (std::size_t j = 0; j < p; ++j) o[j] += x * brow[j];
    }
  }
  const Var inputs[] = {a, b};
  return a.tape->Record(
      std::move(out), inputs,
      [a, b, m, n, p](Tape& t, const std::vector<double>& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (t.NeedsGrad(a.id)) {
          auto& ga = t.GradBuffer(a.id);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
              double s = 0.0;
              const double* brow = &bv[k * p];
              const double* grow = &g[i * p];
              for (std::size_t j = 0; j < p; ++j) s += grow[j] * brow[j];
              ga[i * n + k] += s;
            }
          }
        }
        if (t.NeedsGrad(b.id)) {
          auto& gb = t.GradBuffer(b.id);
          for (std::size_t i = 0; i < m; ++i) {
            const double* grow = &g[i * p];
            for (std::size_t k = 0; k < n; ++k) {
              const double x = av[i * n + k];
              if (x == 0.0) continue;
              double* gbrow = &gb[k * p];
              for (std::size_t j = 0; j < p; ++j) gbrow[j] += x * grow[j];
            }
          }
        }
      });
}

Var BatchMatMul(Var a, Var b, bool transpose_b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool ranks_ok = av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0);
  const std::size_t inner_b = ranks_ok ? (transpose_b ? bv.dim(2) : bv.dim(1)) : 0;
  if (!ranks_ok || av.dim(2) != inner_b) {
    throw ShapeError("batch_matmul: incompatible shapes " +
                     ShapeToString(av.shape()) + " and " +
                     ShapeToString(bv.shape()) +
                     (transpose_b ? " (transposed)" : ""));
  }
  const std::size_t batch = av.dim(0), m = av.dim(1), n = av.dim(2);
  const std::size_t p = transpose_b ? bv.dim(1) : bv.dim(2);
  // Element (k, j) of the right operand within one batch slice.
  auto bidx = [transpose_b, n, p](std::size_t k, std::size_t j) {
    return transpose_b ? j * n + k : k * p + j;
  };
  Tensor out({batch, m, p});
  for (std::size_t s = 0; s < batch; ++s) {
    const double* as = &av[s * m * n];
    const double* bs = &bv[s * n * p];
    double* os = &out[s * m * p];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += as[i * n + k] * bs[bidx(k, j)];
        os[i * p + j] = acc;
      }
    }
  }
  const Var inputs[] = {a, b};
  return a.tape->Record(
      std::move(out), inputs,
      [a, b, batch, m, n, p, bidx](Tape& t, const std::vector<double>& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        const bool need_a = t.NeedsGrad(a.id);
        const bool need_b = t.NeedsGrad(b.id);
        std::vector<double>* ga = need_a ? &t.GradBuffer(a.id) : nullptr;
        std::vector<double>* gb = need_b ? &t.GradBuffer(b.id) : nullptr;
        for (std::size_t s = 0; s < batch; ++s) {
          const double* as = &av[s * m * n];
          const double* bs = &bv[s * n * p];
          const double* gs = &g[s * m * p];
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
              const double gij = gs[i * p + j];
              if (gij == 0.0) continue;
              for (std::size_t k = 0; k < n; ++k) {
                if (need_a) (*ga)[s * m * n + i * n + k] += gij * bs[bidx(k, j)];
                if (need_b) (*gb)[s * n * p + bidx(k, j)] += gij * as[i * n + k];
              }
            }
          }
        }
      });
}

Var Reshape(Var a, Shape shape) {
  Tensor out = a.value().Reshaped(std::move(shape));
  const Var inputs[] = {a};
  return a.tape->Record(std::move(out), inputs,
                        [a](Tape& t, const std::vector<double>& g) {
                          auto& ga = t.GradBuffer(a.id);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                        });
}

Var SliceCols(Var a, std::size_t start, std::size_t count) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || start + count > av.dim(1) || count == 0) {
    throw ShapeError("slice_cols [" + std::to_string(start) + ", +" +
                     std::to_string(count) + ") of " + ShapeToString(av.shape()));
  }
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  Tensor out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&av[r * cols + start], count, &out[r * count]);
  }
  const Var inputs[] = {a};
  return a.tape->Record(
      std::move(out), inputs,
      [a, rows, cols, start, count](Tape& t, const std::vector<double>& g) {
        auto& ga = t.GradBuffer(a.id);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < count; ++c) {
            ga[r * cols + start + c] += g[r * count + c];
          }
        }
      });
}

Var SliceRows(Var a, std::size_t start, std::size_t count) {
  const Tensor& av = a.value();
  if (av.rank() == 0 || start + count > av.dim(0) || count == 0) {
    throw ShapeError("slice_rows [" + std::to_string(start) + ", +" +
                     std::to_string(count) + ") of " + ShapeToString(av.shape()));
  }
  Shape shape = av.shape();
  shape[0] = count;
  const std::size_t stride = av.size() / av.dim(0);
  const std::size_t offset = start * stride;
  std::vector<double> vals(av.data().begin() + static_cast<std::ptrdiff_t>(offset),
                           av.data().begin() +
                               static_cast<std::ptrdiff_t>(offset + count * stride));
  const Var inputs[] = {a};
  return a.tape->Record(Tensor(std::move(shape), std::move(vals)), inputs,
                        [a, offset](Tape& t, const std::vector<double>& g) {
                          auto& ga = t.GradBuffer(a.id);
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            ga[offset + i] += g[i];
                          }
                        });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = parts[0].value().rank() == 2 ? parts[0].value().dim(0) : 0;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != 2 || v.dim(0) != rows) {
      throw ShapeError("concat_cols: part of shape " + ShapeToString(v.shape()) +
                       " does not have " + std::to_string(rows) + " rows");
    }
    widths.push_back(v.dim(1));
    total += v.dim(1);
  }
  Tensor out({rows, total});
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(&v[r * widths[i]], widths[i], &out[r * total + off]);
    }
    off += widths[i];
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].tape->Record(
      std::move(out), parts,
      [ins, widths, rows, total](Tape& t, const std::vector<double>& g) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < ins.size(); ++i) {
          if (t.NeedsGrad(ins[i].id)) {
            auto& gi = t.GradBuffer(ins[i].id);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < widths[i]; ++c) {
                gi[r * widths[i] + c] += g[r * total + off + c];
              }
            }
          }
          off += widths[i];
        }
      });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<double> vals;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() == 0 || !std::equal(tail.begin(), tail.end(), v.shape().begin() + 1,
                                     v.shape().end())) {
      throw ShapeError("concat_rows: mismatched part shape " +
                       ShapeToString(v.shape()));
    }
    rows += v.dim(0);
    sizes.push_back(v.size());
    vals.insert(vals.end(), v.data().begin(), v.data().end());
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].tape->Record(
      Tensor(std::move(shape), std::move(vals)), parts,
      [ins, sizes](Tape& t, const std::vector<double>& g) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < ins.size(); ++i) {
          if (t.NeedsGrad(ins[i].id)) {
            auto& gi = t.GradBuffer(ins[i].id);
            for (std::size_t k = 0; k < sizes[i]; ++k) gi[k] += g[off + k];
          }
          off += sizes[i];
        }
      });
}

Var LayerNormLastDim(Var a, double eps) {
  const Tensor& av = a.value();
  const std::size_t cols = LastDim(av, "layer_norm");
  const std::size_t rows = av.size() / cols;
  Tensor out(av.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &av[r * cols];
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += x[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (x[c] - mean) * (x[c] - mean);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = (x[c] - mean) * inv_std[r];
    }
  }
  Tensor y = out;
  const Var inputs[] = {a};
  return a.tape->Record(
      std::move(out), inputs,
      [a, rows, cols, inv_std = std::move(inv_std), y = std::move(y)](
          Tape& t, const std::vector<double>& g) {
        auto& ga = t.GradBuffer(a.id);
        const double n = static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t o = r * cols;
          double gmean = 0.0, gy = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            gmean += g[o + c];
            gy += g[o + c] * y[o + c];
          }
          gmean /= n;
          gy /= n;
          for (std::size_t c = 0; c < cols; ++c) {
            ga[o + c] += inv_std[r] * (g[o + c] - gmean - y[o + c] * gy);
          }
        }
      });
}

Var StraightThrough(Var soft, Tensor hard) {
  if (hard.shape() != soft.shape()) {
    throw ShapeError("straight_through: hard " + ShapeToString(hard.shape()) +
                     " vs soft " + ShapeToString(soft.shape()));
  }
  const Var inputs[] = {soft};
  return soft.tape->Record(std::move(hard), inputs,
                           [soft](Tape& t, const std::vector<double>& g) {
                             auto& gs = t.GradBuffer(soft.id);
                             for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i];
                           });
}

}  // namespace tabcf::ad
