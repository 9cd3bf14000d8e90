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
#ifndef TABCF_TRANSFORMER_H_
#define TABCF_TRANSFORMER_H_

#include <cstddef>
#include <string>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/rng.h"
#include "tabcf/tensor.h"

namespace tabcf {

// One post-norm transformer block over the feature-token axis:
//   h   = LN(x + MHA(x))
//   out = LN(h + W2 relu(W1 h))
struct TransformerLayerParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // [d,d] / [d]
  Tensor ln1_gain, ln1_bias;              // [d]
  Tensor w1, b1;                          // [d,m] / [m]
  Tensor w2, b2;                          // [m,d] / [d]
  Tensor ln2_gain, ln2_bias;              // [d]

  static TransformerLayerParams Init(std::size_t width, std::size_t ffn_width,
                                     Rng& rng);
  void AppendTo(NamedTensors& out, const std::string& prefix);
};

// Softmax attention weights, one [B, T, T] tensor per (layer, head), in call
// order. Filled only when a trace is passed.
struct AttentionTrace {
  std::vector<Tensor> weights;
};

// x: [batch * seq, d] with rows grouped per sample.
ad::Var TransformerLayer(ad::Var x, std::size_t batch, std::size_t seq,
                         std::size_t heads, const TransformerLayerParams& p,
                         Binder& bind, AttentionTrace* trace = nullptr);

// Dense layer helper: x [n, in] . w [in, out] + b [out].
ad::Var Linear(ad::Var x, const Tensor& w, const Tensor& b, Binder& bind);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights.
Tensor FanInUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace tabcf

#endif  // TABCF_TRANSFORMER_H_
