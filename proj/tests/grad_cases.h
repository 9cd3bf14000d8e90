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

#ifndef TABCF_TESTS_GRAD_CASES_H_
#define TABCF_TESTS_GRAD_CASES_H_

// Finite-difference cases for every differentiable primitive and for the two
// composed model pipelines. StraightThrough is absent on purpose: its forward
// value is piecewise constant, so central differences see zero.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/cf_latent.h"
#include "tabcf/classifier.h"
#include "tabcf/rng.h"
#include "tabcf/tokenizer.h"
#include "tabcf/vae.h"
#include "test_support.h"

namespace tabcf::testing {

// Contracts out against fixed pseudo-random weights so that every output
// element reaches the scalar loss with a distinct factor.
inline ad::Var Project(ad::Var out) {
  Rng rng(DeriveSeed(0x5eed, out.value().size()));
  Tensor w(out.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.Uniform(-1.0, 1.0);
  return ad::Sum(out * out.tape->Constant(std::move(w)));
}

struct PrimitiveCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  LossBuilder build;
};

inline std::vector<PrimitiveCase> PrimitiveCases() {
  using V = const std::vector<ad::Var>&;
  auto one = [](Shape s, double lo = -1.0, double hi = 1.0, double min_abs = 0.0) {
    return [=](Rng& rng) { return std::vector<Tensor>{RandomTensor(s, rng, lo, hi, min_abs)}; };
  };
  auto two = [](Shape a, Shape b) {
    return [=](Rng& rng) {
      return std::vector<Tensor>{RandomTensor(a, rng), RandomTensor(b, rng)};
    };
  };
  std::vector<PrimitiveCase> c;
  c.push_back({"add", two({2, 3}, {2, 3}), [](ad::Tape&, V v) { return Project(v[0] + v[1]); }});
  c.push_back({"add_broadcast_row", two({2, 3}, {3}),
               [](ad::Tape&, V v) { return Project(v[0] + v[1]); }});
  c.push_back({"add_broadcast_scalar", two({1}, {2, 3}),
               [](ad::Tape&, V v) { return Project(v[0] + v[1]); }});
  c.push_back({"sub", two({2, 3}, {1, 3}), [](ad::Tape&, V v) { return Project(v[0] - v[1]); }});
  c.push_back({"mul", two({2, 3}, {2, 3}), [](ad::Tape&, V v) { return Project(v[0] * v[1]); }});
  c.push_back({"mul_broadcast", two({3}, {4, 3}),
               [](ad::Tape&, V v) { return Project(v[0] * v[1]); }});
  c.push_back({"neg", one({2, 3}), [](ad::Tape&, V v) { return Project(-v[0]); }});
  c.push_back({"scale", one({2, 3}), [](ad::Tape&, V v) { return Project(ad::Scale(v[0], -2.5)); }});
  c.push_back({"add_scalar", one({5}),
               [](ad::Tape&, V v) { return Project(ad::AddScalar(v[0], 0.7)); }});
  c.push_back({"sigmoid", one({2, 4}, -3.0, 3.0),
               [](ad::Tape&, V v) { return Project(ad::Sigmoid(v[0])); }});
  c.push_back({"exp", one({2, 3}), [](ad::Tape&, V v) { return Project(ad::Exp(v[0])); }});
  c.push_back({"log", one({2, 3}, 0.2, 3.0), [](ad::Tape&, V v) { return Project(ad::Log(v[0])); }});
  c.push_back({"relu", one({3, 3}, -1.0, 1.0, 0.05),
               [](ad::Tape&, V v) { return Project(ad::Relu(v[0])); }});
  c.push_back({"abs", one({3, 3}, -1.0, 1.0, 0.05),
               [](ad::Tape&, V v) { return Project(ad::Abs(v[0])); }});
  c.push_back({"max_with_const", one({3, 3}, -1.0, 1.0, 0.05),
               [](ad::Tape&, V v) { return Project(ad::MaxWithConst(v[0], 0.0)); }});
  c.push_back({"softmax", one({3, 4}, -2.0, 2.0),
               [](ad::Tape&, V v) { return Project(ad::SoftmaxLastDim(v[0])); }});
  c.push_back({"log_softmax", one({3, 4}, -2.0, 2.0),
               [](ad::Tape&, V v) { return Project(ad::LogSoftmaxLastDim(v[0])); }});
  c.push_back({"sum", one({2, 3}), [](ad::Tape&, V v) { return ad::Scale(ad::Sum(v[0]), 1.5); }});
  c.push_back({"mean", one({2, 3}), [](ad::Tape&, V v) { return Project(ad::Mean(v[0])); }});
  c.push_back({"l2norm", one({2, 3}, -1.0, 1.0, 0.1),
               [](ad::Tape&, V v) { return Project(ad::L2Norm(v[0])); }});
  c.push_back({"matmul", two({2, 3}, {3, 4}),
               [](ad::Tape&, V v) { return Project(ad::MatMul(v[0], v[1])); }});
  c.push_back({"batch_matmul", two({2, 2, 3}, {2, 3, 2}),
               [](ad::Tape&, V v) { return Project(ad::BatchMatMul(v[0], v[1])); }});
  c.push_back({"batch_matmul_transposed", two({2, 2, 3}, {2, 4, 3}),
               [](ad::Tape&, V v) { return Project(ad::BatchMatMul(v[0], v[1], true)); }});
  c.push_back({"reshape", one({2, 6}),
               [](ad::Tape&, V v) { return Project(ad::Reshape(v[0], {3, 4})); }});
  c.push_back({"slice_cols", one({3, 5}),
               [](ad::Tape&, V v) { return Project(ad::SliceCols(v[0], 1, 3)); }});
  c.push_back({"slice_rows", one({4, 3}),
               [](ad::Tape&, V v) { return Project(ad::SliceRows(v[0], 1, 2)); }});
  c.push_back({"concat_cols", two({2, 3}, {2, 2}), [](ad::Tape&, V v) {
                 std::vector<ad::Var> parts = {v[0], v[1], v[0]};
                 return Project(ad::ConcatCols(parts));
               }});
  c.push_back({"concat_rows", two({2, 3}, {1, 3}), [](ad::Tape&, V v) {
                 std::vector<ad::Var> parts = {v[1], v[0]};
                 return Project(ad::ConcatRows(parts));
               }});
  c.push_back({"layer_norm", one({3, 5}, -2.0, 2.0),
               [](ad::Tape&, V v) { return Project(ad::LayerNormLastDim(v[0])); }});
  // Composites: shared subexpressions and a longer chain.
  c.push_back({"shared_subexpression", one({2, 3}), [](ad::Tape&, V v) {
                 ad::Var s = ad::Sigmoid(v[0]);
                 return Project(s * s + s * v[0] + ad::Exp(s));
               }});
  c.push_back({"chain", two({2, 3}, {3, 3}), [](ad::Tape&, V v) {
                 ad::Var h = ad::LayerNormLastDim(ad::MatMul(v[0], v[1]));
                 ad::Var p = ad::SoftmaxLastDim(ad::Scale(h, 0.5));
                 return ad::Sum(ad::Log(ad::AddScalar(p, 0.1))) + ad::L2Norm(v[1]);
               }});
  return c;
}

// Central differences over model tensors updated in place. build() must bind
// every target through the Binder it receives.
inline GradCheck CheckBoundGradients(const NamedTensors& targets,
                                     const std::function<ad::Var(Binder&)>& build,
                                     std::size_t max_per_tensor, double h = 1e-5) {
  {
    ad::Tape tape;
    Binder bind(tape, true);
    ad::Var loss = build(bind);
    tape.Backward(loss);
    PullGradients(bind, targets);
  }
  auto eval = [&] {
    ad::Tape tape;
    Binder bind(tape, false);
    return build(bind).value().item();
  };
  GradCheck out;
  for (const auto& [name, t] : targets) {
    const std::vector<double> analytic = *t->grad;
    const std::size_t stride = std::max<std::size_t>(1, t->size() / max_per_tensor);
    for (std::size_t j = 0; j < t->size(); j += stride) {
      const double keep = (*t)[j];
      (*t)[j] = keep + h;
      const double up = eval();
      (*t)[j] = keep - h;
      const double down = eval();
      (*t)[j] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double err = RelError(analytic[j], numeric);
      ++out.checked;
      if (err > out.max_rel_error || !std::isfinite(err)) {
        out.max_rel_error = std::isfinite(err) ? err : INFINITY;
        out.worst = name + "[" + std::to_string(j) + "]: analytic " +
                    std::to_string(analytic[j]) + " vs numeric " + std::to_string(numeric);
      }
    }
    t->ZeroGrad();
  }
  return out;
}

inline VaeArch PipelineArch() {
  VaeArch a;
  a.layers = 1;
  a.heads = 2;
  a.token_dim = 4;
  a.ffn_dim = 8;
  a.latent_dim = 2;
  return a;
}

// x -> tokenize -> encoder -> KL, gradients for x and every encoder-side
// tensor (sampled at up to max_per_tensor entries each).
inline GradCheck EncoderKlPipeline(std::uint64_t seed, std::size_t max_per_tensor = 12) {
  const TableSchema schema = SmallSchema();
  VaeModel vae = VaeModel::Init(schema, PipelineArch(), seed);
  Rng rng(DeriveSeed(seed, 1));
  const std::size_t batch = 2;
  Tensor x({batch, schema.encoded_width()});
  for (std::size_t r = 0; r < batch; ++r) {
    const std::vector<double> row = RandomEncodedRow(schema, rng);
    std::copy(row.begin(), row.end(), &x[r * row.size()]);
  }
  const Tensor eps = vae.SampleEps(batch, rng);
  NamedTensors targets = {{"x", &x}};
  for (const auto& p : vae.Parameters()) {
    if (p.first.rfind("dec", 0) != 0 && p.first.rfind("detok", 0) != 0) targets.push_back(p);
  }
  return CheckBoundGradients(targets, [&](Binder& bind) {
    LatentState lat = vae.Encode(bind(x), bind, &eps);
    return KlDivergence(lat.mu, lat.logvar, batch) + Project(lat.z);
  }, max_per_tensor);
}

// z -> decoder -> detokenize (soft) -> classifier -> hinge, gradients for z,
// decoder-side tensors and classifier weights.
inline GradCheck DecoderHingePipeline(std::uint64_t seed, std::size_t max_per_tensor = 12) {
  const TableSchema schema = SmallSchema();
  VaeModel vae = VaeModel::Init(schema, PipelineArch(), seed);
  Classifier clf = Classifier::Init(schema.encoded_width(), 6, DeriveSeed(seed, 2));
  Rng rng(DeriveSeed(seed, 3));
  const std::size_t batch = 2;
  Tensor z = RandomTensor({batch * schema.num_features(), vae.arch().latent_dim}, rng);
  const GumbelNoise noise = GumbelNoise::Draw(schema, batch, rng);
  GumbelConfig gcfg;
  gcfg.tau = 0.8;
  gcfg.hard_forward = false;
  NamedTensors targets = {{"z", &z}};
  for (const auto& p : vae.Parameters()) {
    if (p.first.rfind("dec", 0) == 0 || p.first.rfind("detok", 0) == 0) targets.push_back(p);
  }
  for (const auto& [name, t] : clf.Parameters()) targets.emplace_back("classifier." + name, t);
  return CheckBoundGradients(targets, [&](Binder& bind) {
    Reconstruction rec = vae.Decode(bind(z), batch, noise, gcfg, bind);
    ad::Var logit = clf.Logit(rec.x_hat, bind);
    // Shift keeps the hinge active (logit < 1) for an untrained classifier.
    return ad::Sum(HingeYLoss(ad::AddScalar(logit, -2.0)));
  }, max_per_tensor);
}

}  // namespace tabcf::testing

#endif  // TABCF_TESTS_GRAD_CASES_H_
