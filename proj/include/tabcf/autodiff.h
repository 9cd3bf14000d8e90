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
#ifndef TABCF_AUTODIFF_H_
#define TABCF_AUTODIFF_H_

// Define-by-run reverse-mode differentiation over dense double tensors.
//
// A Tape records every primitive applied during one forward pass. Leaves
// either own their value (Constant), reference an external tensor without
// collecting gradients (ConstantRef), or reference an external trainable
// tensor (Param) whose .grad receives the accumulated gradient when
// Backward() runs. A tape can be consumed by Backward() exactly once; a
// second call throws ContractError. Build a fresh tape for the next pass.
//
// Broadcasting (Add/Sub/Mul) is limited to:
//   * identical shapes,
//   * one operand with a single element (scalar broadcast),
//   * one operand whose shape, after dropping leading 1s, equals the
//     trailing dimensions of the other (e.g. {d} or {1,d} against {n,d}).
// Anything else is a ShapeError.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tabcf/tensor.h"

namespace tabcf::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Tensor value);
  Var ConstantRef(const Tensor& value);
  // Gradients flow into param.grad only when param.requires_grad is set.
  Var Param(Tensor& param);
  // References value and collects its gradient on the tape only (read it
  // back with grad()); value itself is never written.
  Var Watch(const Tensor& value);

  const Tensor& value(Var v) const;
  // Gradient of the last Backward() target with respect to v; empty when v
  // was not reached or does not require a gradient.
  std::span<const double> grad(Var v) const;

  // loss must hold exactly one element.
  void Backward(Var loss);
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  // Used by primitive implementations.
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  bool NeedsGrad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Lazily zero-initialised gradient buffer for node id.
  std::vector<double>& GradBuffer(std::size_t id);

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor* sink = nullptr;
    bool needs_grad = false;
    std::vector<double> grad;
    BackwardFn backward;

    const Tensor& value() const { return ref != nullptr ? *ref : owned; }
  };

  Var Push(Node node);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// --- elementwise ---------------------------------------------------------
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Neg(Var a);
Var Scale(Var a, double factor);
Var AddScalar(Var a, double offset);
Var Sigmoid(Var a);
Var Exp(Var a);
// Throws DomainError on any non-positive input.
Var Log(Var a);
Var Relu(Var a);
// Subgradient 0 at the kink.
Var Abs(Var a);
// max(a, c); gradient 1 where a > c.
Var MaxWithConst(Var a, double c);
Var SoftmaxLastDim(Var a);
Var LogSoftmaxLastDim(Var a);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, Var b) { return Mul(a, b); }
inline Var operator-(Var a) { return Neg(a); }
inline Var operator*(Var a, double c) { return Scale(a, c); }
inline Var operator*(double c, Var a) { return Scale(a, c); }

// --- reductions ------------------------------------------------------------
Var Sum(Var a);
Var Mean(Var a);
// Euclidean norm of all elements; gradient taken as 0 at the origin.
Var L2Norm(Var a);

// --- linear algebra ----------------------------------------------------------
// [m,n] x [n,p] -> [m,p]
Var MatMul(Var a, Var b);
// [B,m,n] x [B,n,p] -> [B,m,p], or with transpose_b: [B,m,n] x [B,p,n]^T.
Var BatchMatMul(Var a, Var b, bool transpose_b = false);

// --- structure ---------------------------------------------------------------
Var Reshape(Var a, Shape shape);
Var SliceCols(Var a, std::size_t start, std::size_t count);
Var SliceRows(Var a, std::size_t start, std::size_t count);
Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);

// Normalises each row over the last dimension (no affine part).
Var LayerNormLastDim(Var a, double eps = 1e-5);

// Forward value is hard; the backward pass routes the incoming gradient to
// soft unchanged. hard must have soft's shape.
Var StraightThrough(Var soft, Tensor hard);

}  // namespace tabcf::ad

#endif  // TABCF_AUTODIFF_H_
