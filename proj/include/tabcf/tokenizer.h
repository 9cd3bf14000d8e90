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
#ifndef TABCF_TOKENIZER_H_
#define TABCF_TOKENIZER_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/rng.h"
#include "tabcf/schema.h"
#include "tabcf/tensor.h"

namespace tabcf {

// Per-feature token maps. Numerical feature j: x_j * w_num[j] + b_num[j];
// categorical feature i: onehot_i * w_cat[i] + b_cat[i] (a row lookup).
struct TokenizerParams {
  Tensor w_num;               // [N, d]
  Tensor b_num;               // [N, d]
  std::vector<Tensor> w_cat;  // [C_i, d]
  std::vector<Tensor> b_cat;  // [1, d]

  static TokenizerParams Init(const TableSchema& schema, std::size_t token_dim,
                              Rng& rng);
  void AppendTo(NamedTensors& out, const std::string& prefix);
};

// Output heads. Numerical j: sigmoid(t_j . w_num[:, j] + b_num[j]).
// Categorical i: logits t_i . w_cat[i] + b_cat[i], sampled with Gumbel-Softmax.
struct DetokenizerParams {
  Tensor w_num;               // [d, N]
  Tensor b_num;               // [N]
  std::vector<Tensor> w_cat;  // [d, C_i]
  std::vector<Tensor> b_cat;  // [C_i]

  static DetokenizerParams Init(const TableSchema& schema,
                                std::size_t token_dim, Rng& rng);
  void AppendTo(NamedTensors& out, const std::string& prefix);
};

struct GumbelConfig {
  double tau = 1.0;
  // Forward value is the hard one-hot sample (straight-through); otherwise
  // the soft sample is returned as is.
  bool hard_forward = true;
};

// Pre-drawn Gumbel noise, one [batch, C_i] tensor per categorical block.
struct GumbelNoise {
  std::vector<Tensor> blocks;

  static GumbelNoise Draw(const TableSchema& schema, std::size_t batch, Rng& rng);
  static GumbelNoise Zero(const TableSchema& schema, std::size_t batch);
};

struct GumbelSample {
  std::vector<double> hard;
  std::vector<double> soft;
};

// soft = softmax((logits + g) / tau); hard = one-hot at argmax(soft) (lowest
// index on ties). Throws ConfigError when tau <= 0.
GumbelSample GumbelSoftmax(std::span<const double> logits,
                           std::span<const double> noise, double tau);
GumbelSample GumbelSoftmax(std::span<const double> logits, double tau, Rng& rng);

struct GumbelVars {
  ad::Var out;       // hard forward / soft backward, or soft
  ad::Var soft;      // [B, C]
  ad::Var log_soft;  // log of soft, computed stably
};
GumbelVars GumbelSoftmax(ad::Var logits, const Tensor& noise,
                         const GumbelConfig& cfg);

// x: [B, k] encoded rows -> tokens [B * F, d], row b*F + f holding token f of
// sample b (numerical tokens first).
ad::Var Tokenize(ad::Var x, const TableSchema& schema,
                 const TokenizerParams& params, Binder& bind);

struct Reconstruction {
  ad::Var x_hat;   // [B, k]; categorical blocks per GumbelConfig::hard_forward
  ad::Var x_soft;  // [B, k]; soft categorical blocks
  ad::Var numerical;                  // [B, N] (absent when N == 0)
  bool has_numerical = false;
};

// tokens: [B * F, d] -> reconstruction in encoded space.
Reconstruction Detokenize(ad::Var tokens, std::size_t batch,
                          const TableSchema& schema,
                          const DetokenizerParams& params,
                          const GumbelNoise& noise, const GumbelConfig& cfg,
                          Binder& bind);

}  // namespace tabcf

#endif  // TABCF_TOKENIZER_H_
