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
#include "tabcf/transformer.h"

#include <cmath>

#include "tabcf/errors.h"

namespace tabcf {

Tensor FanInUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t({fan_in, fan_out});
  for (double& v : t.values()) v = rng.Uniform(-bound, bound);
  return t;
}

TransformerLayerParams TransformerLayerParams::Init(std::size_t width,
                                                    std::size_t ffn_width,
                                                    Rng& rng) {
  TransformerLayerParams p;
  p.wq = FanInUniform(width, width, rng);
  p.wk = FanInUniform(width, width, rng);
  p.wv = FanInUniform(width, width, rng);
  p.wo = FanInUniform(width, width, rng);
  p.bq = p.bk = p.bv = p.bo = Tensor({width}, 0.0);
  p.ln1_gain = p.ln2_gain = Tensor({width}, 1.0);
  p.ln1_bias = p.ln2_bias = Tensor({width}, 0.0);
  p.w1 = FanInUniform(width, ffn_width, rng);
  p.b1 = Tensor({ffn_width}, 0.0);
  p.w2 = FanInUniform(ffn_width, width, rng);
  p.b2 = Tensor({width}, 0.0);
  return p;
}

void TransformerLayerParams::AppendTo(NamedTensors& out, const std::string& prefix) {
  out.emplace_back(prefix + "wq", &wq);
  out.emplace_back(prefix + "bq", &bq);
  out.emplace_back(prefix + "wk", &wk);
  out.emplace_back(prefix + "bk", &bk);
  out.emplace_back(prefix + "wv", &wv);
  out.emplace_back(prefix + "bv", &bv);
  out.emplace_back(prefix + "wo", &wo);
  out.emplace_back(prefix + "bo", &bo);
  out.emplace_back(prefix + "ln1_gain", &ln1_gain);
  out.emplace_back(prefix + "ln1_bias", &ln1_bias);
  out.emplace_back(prefix + "w1", &w1);
  out.emplace_back(prefix + "b1", &b1);
  out.emplace_back(prefix + "w2", &w2);
  out.emplace_back(prefix + "b2", &b2);
  out.emplace_back(prefix + "ln2_gain", &ln2_gain);
  out.emplace_back(prefix + "ln2_bias", &ln2_bias);
}

ad::Var Linear(ad::Var x, const Tensor& w, const Tensor& b, Binder& bind) {
  return ad::MatMul(x, bind(w)) + bind(b);
}

ad::Var TransformerLayer(ad::Var x, std::size_t batch, std::size_t seq,
                         std::size_t heads, const TransformerLayerParams& p,
                         Binder& bind, AttentionTrace* trace) {
  const Tensor& xv = x.value();
  const std::size_t d = p.wq.dim(0);
  if (xv.rank() != 2 || xv.dim(0) != batch * seq || xv.dim(1) != d) {
    throw ShapeError("transformer layer: expected [" + std::to_string(batch * seq) +
                     ", " + std::to_string(d) + "], got " + ShapeToString(xv.shape()));
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("transformer layer: width " + std::to_string(d) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ad::Var q = Linear(x, p.wq, p.bq, bind);
  ad::Var k = Linear(x, p.wk, p.bk, bind);
  ad::Var v = Linear(x, p.wv, p.bv, bind);
  std::vector<ad::Var> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Shape s3{batch, seq, dh};
    ad::Var qh = ad::Reshape(ad::SliceCols(q, h * dh, dh), s3);
    ad::Var kh = ad::Reshape(ad::SliceCols(k, h * dh, dh), s3);
    ad::Var vh = ad::Reshape(ad::SliceCols(v, h * dh, dh), s3);
    ad::Var scores = ad::Scale(ad::BatchMatMul(qh, kh, /*transpose_b=*/true), scale);
    ad::Var attn = ad::SoftmaxLastDim(scores);
    if (trace != nullptr) trace->weights.push_back(attn.value());
    head_out.push_back(ad::Reshape(ad::BatchMatMul(attn, vh), {batch * seq, dh}));
  }
  ad::Var mixed = heads == 1 ? head_out[0] : ad::ConcatCols(head_out);
  ad::Var attn_out = Linear(mixed, p.wo, p.bo, bind);
  ad::Var h1 = ad::LayerNormLastDim(x + attn_out) * bind(p.ln1_gain) + bind(p.ln1_bias);
  ad::Var ffn = Linear(ad::Relu(Linear(h1, p.w1, p.b1, bind)), p.w2, p.b2, bind);
  return ad::LayerNormLastDim(h1 + ffn) * bind(p.ln2_gain) + bind(p.ln2_bias);
}

}  // namespace tabcf
