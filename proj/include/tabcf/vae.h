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
#ifndef TABCF_VAE_H_
#define TABCF_VAE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/schema.h"
#include "tabcf/tensor.h"
#include "tabcf/tokenizer.h"
#include "tabcf/transformer.h"

namespace tabcf {

struct VaeArch {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t token_dim = 8;
  std::size_t ffn_dim = 32;
  std::size_t latent_dim = 4;

  void Validate() const;
  bool operator==(const VaeArch&) const = default;
};

struct VaeTrainConfig {
  std::size_t epochs = 4000;
  double beta_max = 1e-3;
  double beta_min = 1e-5;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double tau = 1.0;
  double grad_clip = 5.0;

  void Validate() const;
};

// Per-token Gaussian posterior and its reparameterised sample
// z = mu + exp(logvar / 2) * eps. All three are [B * F, latent_dim].
struct LatentState {
  ad::Var mu;
  ad::Var logvar;
  ad::Var z;
  Tensor eps;
};

class VaeModel {
 public:
  VaeModel() = default;
  static VaeModel Init(const TableSchema& schema, const VaeArch& arch,
                       std::uint64_t seed);

  const TableSchema& schema() const { return schema_; }
  const VaeArch& arch() const { return arch_; }
  // Length of the flattened per-instance latent vector (F * latent_dim).
  std::size_t latent_size() const {
    return schema_.num_features() * arch_.latent_dim;
  }

  NamedTensors Parameters();

  // x: [B, k]. eps: [B * F, latent_dim]; pass nullptr to use eps = 0.
  LatentState Encode(ad::Var x, Binder& bind, const Tensor* eps,
                     AttentionTrace* trace = nullptr) const;

  // z: [B * F, latent_dim], or a flat vector of latent_size() when batch == 1.
  Reconstruction Decode(ad::Var z, std::size_t batch, const GumbelNoise& noise,
                        const GumbelConfig& cfg, Binder& bind,
                        AttentionTrace* trace = nullptr) const;

  // Deterministic latent (eps = 0) of one encoded row, flattened.
  std::vector<double> LatentMean(std::span<const double> x) const;
  // Hard reconstruction of one flattened latent.
  std::vector<double> DecodeHard(std::span<const double> z,
                                 const GumbelNoise& noise, double tau) const;

  Tensor SampleEps(std::size_t batch, Rng& rng) const;

 private:
  TableSchema schema_;
  VaeArch arch_;
  TokenizerParams tokenizer_;
  std::vector<TransformerLayerParams> encoder_;
  Tensor w_mu_, b_mu_, w_logvar_, b_logvar_;
  Tensor w_dec_in_, b_dec_in_;
  std::vector<TransformerLayerParams> decoder_;
  DetokenizerParams detokenizer_;
};

// -1/2 * sum(1 + logvar - mu^2 - exp(logvar)) / batch
ad::Var KlDivergence(ad::Var mu, ad::Var logvar, std::size_t batch);

struct VaeLossParts {
  ad::Var total;
  ad::Var recon;
  ad::Var kl;
};

// recon = mean squared error over the numerical block
//       + mean over categorical blocks of the batch-mean squared error
//         between the true one-hot and the soft Gumbel sample.
// total = recon + beta * kl
VaeLossParts VaeLoss(ad::Var x, const Reconstruction& rec, ad::Var mu,
                     ad::Var logvar, double beta, const TableSchema& schema);

// Geometric decay from beta_max at epoch 0 to beta_min at the final epoch;
// both endpoints are returned exactly.
double BetaSchedule(std::size_t epoch, const VaeTrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double beta = 0.0;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

struct TrainingCurve {
  std::vector<EpochRecord> epochs;
};

// Minibatch SGD on VaeLoss with gradient-norm clipping. Throws NumericError
// naming the epoch and batch rows if the loss turns non-finite.
TrainingCurve TrainVae(VaeModel& model, const Tensor& train_rows,
                       const VaeTrainConfig& cfg,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

// Per-feature categorical accuracy of hard reconstructions (eps = 0,
// Gumbel noise from seed), averaged over categorical features.
double CategoricalReconstructionAccuracy(const VaeModel& model,
                                         const Tensor& rows, double tau,
                                         std::uint64_t seed);

}  // namespace tabcf

#endif  // TABCF_VAE_H_
