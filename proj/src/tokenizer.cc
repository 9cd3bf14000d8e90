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
#include "tabcf/tokenizer.h"

#include <algorithm>
#include <cmath>

#include "tabcf/errors.h"

namespace tabcf {

namespace {

Tensor UniformTensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.Uniform(-bound, bound);
  return t;
}

void CheckTau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("gumbel tau must be > 0, got " + std::to_string(tau));
  }
}

}  // namespace

TokenizerParams TokenizerParams::Init(const TableSchema& schema,
                                      std::size_t token_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(token_dim));
  const std::size_t n = schema.num_numerical();
  TokenizerParams p;
  p.w_num = UniformTensor({n, token_dim}, bound, rng);
  p.b_num = UniformTensor({n, token_dim}, bound, rng);
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    p.w_cat.push_back(UniformTensor({schema.block_size(i), token_dim}, bound, rng));
    p.b_cat.push_back(UniformTensor({1, token_dim}, bound, rng));
  }
  return p;
}

void TokenizerParams::AppendTo(NamedTensors& out, const std::string& prefix) {
  out.emplace_back(prefix + "w_num", &w_num);
  out.emplace_back(prefix + "b_num", &b_num);
  for (std::size_t i = 0; i < w_cat.size(); ++i) {
    out.emplace_back(prefix + "w_cat." + std::to_string(i), &w_cat[i]);
    out.emplace_back(prefix + "b_cat." + std::to_string(i), &b_cat[i]);
  }
}

DetokenizerParams DetokenizerParams::Init(const TableSchema& schema,
                                          std::size_t token_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(token_dim));
  const std::size_t n = schema.num_numerical();
  DetokenizerParams p;
  p.w_num = UniformTensor({token_dim, n}, bound, rng);
  p.b_num = Tensor({n}, 0.0);
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    p.w_cat.push_back(UniformTensor({token_dim, schema.block_size(i)}, bound, rng));
    p.b_cat.push_back(Tensor({schema.block_size(i)}, 0.0));
  }
  return p;
}

void DetokenizerParams::AppendTo(NamedTensors& out, const std::string& prefix) {
  out.emplace_back(prefix + "w_num", &w_num);
  out.emplace_back(prefix + "b_num", &b_num);
  for (std::size_t i = 0; i < w_cat.size(); ++i) {
    out.emplace_back(prefix + "w_cat." + std::to_string(i), &w_cat[i]);
    out.emplace_back(prefix + "b_cat." + std::to_string(i), &b_cat[i]);
  }
}

GumbelNoise GumbelNoise::Draw(const TableSchema& schema, std::size_t batch,
                              Rng& rng) {
  GumbelNoise g;
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    Tensor t({batch, schema.block_size(i)});
    for (double& v : t.values()) v = rng.Gumbel();
    g.blocks.push_back(std::move(t));
  }
  return g;
}

GumbelNoise GumbelNoise::Zero(const TableSchema& schema, std::size_t batch) {
  GumbelNoise g;
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    g.blocks.emplace_back(Shape{batch, schema.block_size(i)}, 0.0);
  }
  return g;
}

GumbelSample GumbelSoftmax(std::span<const double> logits,
                           std::span<const double> noise, double tau) {
  CheckTau(tau);
  if (logits.empty() || noise.size() != logits.size()) {
    throw ShapeError("gumbel_softmax: logits/noise size mismatch");
  }
  const std::size_t c = logits.size();
  std::vector<double> y(c);
  for (std::size_t j = 0; j < c; ++j) y[j] = (logits[j] + noise[j]) / tau;
  const double m = *std::max_element(y.begin(), y.end());
  double s = 0.0;
  for (double& v : y) s += (v = std::exp(v - m));
  for (double& v : y) v /= s;
  GumbelSample out;
  out.hard.assign(c, 0.0);
  out.hard[static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin())] = 1.0;
  out.soft = std::move(y);
  return out;
}

GumbelSample GumbelSoftmax(std::span<const double> logits, double tau, Rng& rng) {
  std::vector<double> g(logits.size());
  for (double& v : g) v = rng.Gumbel();
  return GumbelSoftmax(logits, g, tau);
}

GumbelVars GumbelSoftmax(ad::Var logits, const Tensor& noise,
                         const GumbelConfig& cfg) {
  CheckTau(cfg.tau);
  ad::Tape& tape = *logits.tape;
  ad::Var scaled = ad::Scale(logits + tape.ConstantRef(noise), 1.0 / cfg.tau);
  GumbelVars out;
  out.soft = ad::SoftmaxLastDim(scaled);
  out.log_soft = ad::LogSoftmaxLastDim(scaled);
  if (!cfg.hard_forward) {
    out.out = out.soft;
    return out;
  }
  const Tensor& soft = out.soft.value();
  const std::size_t cols = soft.shape().back();
  const std::size_t rows = soft.size() / cols;
  Tensor hard(soft.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &soft[r * cols];
    hard[r * cols + static_cast<std::size_t>(std::max_element(row, row + cols) - row)] = 1.0;
  }
  out.out = ad::StraightThrough(out.soft, std::move(hard));
  return out;
}

ad::Var Tokenize(ad::Var x, const TableSchema& schema,
                 const TokenizerParams& params, Binder& bind) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || xv.dim(1) != schema.encoded_width()) {
    throw ShapeError("tokenize: expected [B, " +
                     std::to_string(schema.encoded_width()) + "], got " +
                     ShapeToString(xv.shape()));
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t n = schema.num_numerical();
  const std::size_t d = params.w_num.rank() == 2 ? params.w_num.dim(1)
                                                 : params.w_cat.at(0).dim(1);
  std::vector<ad::Var> tokens;
  tokens.reserve(schema.num_features());
  if (n > 0) {
    ad::Var w = bind(params.w_num);
    ad::Var b = bind(params.b_num);
    for (std::size_t j = 0; j < n; ++j) {
      ad::Var col = ad::SliceCols(x, j, 1);
      tokens.push_back(ad::MatMul(col, ad::SliceRows(w, j, 1)) +
                       ad::SliceRows(b, j, 1));
    }
  }
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    ad::Var block = ad::SliceCols(x, schema.block_offset(i), schema.block_size(i));
    tokens.push_back(ad::MatMul(block, bind(params.w_cat[i])) + bind(params.b_cat[i]));
  }
  ad::Var wide = ad::ConcatCols(tokens);  // [B, F*d]
  return ad::Reshape(wide, {batch * schema.num_features(), d});
}

Reconstruction Detokenize(ad::Var tokens, std::size_t batch,
                          const TableSchema& schema,
                          const DetokenizerParams& params,
                          const GumbelNoise& noise, const GumbelConfig& cfg,
                          Binder& bind) {
  const Tensor& tv = tokens.value();
  const std::size_t f = schema.num_features();
  if (tv.rank() != 2 || tv.dim(0) != batch * f) {
    throw ShapeError("detokenize: expected [" + std::to_string(batch * f) +
                     ", d], got " + ShapeToString(tv.shape()));
  }
  if (noise.blocks.size() != schema.num_categorical()) {
    throw ShapeError("detokenize: noise has wrong number of blocks");
  }
  const std::size_t d = tv.dim(1);
  ad::Var wide = ad::Reshape(tokens, {batch, f * d});
  Reconstruction rec;
  std::vector<ad::Var> hard_parts;
  std::vector<ad::Var> soft_parts;
  const std::size_t n = schema.num_numerical();
  if (n > 0) {
    ad::Var w = bind(params.w_num);
    ad::Var b = bind(params.b_num);
    std::vector<ad::Var> cols;
    for (std::size_t j = 0; j < n; ++j) {
      ad::Var t = ad::SliceCols(wide, j * d, d);
      cols.push_back(ad::MatMul(t, ad::SliceCols(w, j, 1)));
    }
    rec.numerical = ad::Sigmoid(ad::ConcatCols(cols) + b);
    rec.has_numerical = true;
    hard_parts.push_back(rec.numerical);
    soft_parts.push_back(rec.numerical);
  }
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    ad::Var t = ad::SliceCols(wide, (n + i) * d, d);
    ad::Var logits = ad::MatMul(t, bind(params.w_cat[i])) + bind(params.b_cat[i]);
    const Tensor& g = noise.blocks[i];
    if (g.shape() != logits.shape()) {
      throw ShapeError("detokenize: noise block " + std::to_string(i) +
                       " has shape " + ShapeToString(g.shape()));
    }
    GumbelVars s = GumbelSoftmax(logits, g, cfg);
    hard_parts.push_back(s.out);
    soft_parts.push_back(s.soft);
  }
  rec.x_hat = ad::ConcatCols(hard_parts);
  rec.x_soft = ad::ConcatCols(soft_parts);
  return rec;
}

}  // namespace tabcf
