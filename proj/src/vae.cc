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
#include "tabcf/vae.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "tabcf/errors.h"
#include "tabcf/optim.h"
#include "tabcf/rng.h"

namespace tabcf {

void VaeArch::Validate() const {
  if (layers == 0) throw ConfigError("vae.layers must be >= 1");
  if (heads == 0) throw ConfigError("vae.heads must be >= 1");
  if (token_dim == 0 || token_dim % heads != 0) {
    throw ConfigError("vae.token_dim must be a positive multiple of vae.heads");
  }
  if (ffn_dim == 0) throw ConfigError("vae.ffn_dim must be >= 1");
  if (latent_dim == 0) throw ConfigError("vae.latent_dim must be >= 1");
}

void VaeTrainConfig::Validate() const {
  if (epochs == 0) throw ConfigError("vae.epochs must be >= 1");
  if (!(beta_min > 0.0)) throw ConfigError("vae.beta_min must be > 0");
  if (!(beta_max > beta_min)) throw ConfigError("vae.beta_max must exceed vae.beta_min");
  if (!(learning_rate > 0.0)) throw ConfigError("vae.learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("vae.batch_size must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("vae.tau must be > 0");
  if (!(grad_clip > 0.0)) throw ConfigError("vae.grad_clip must be > 0");
}

VaeModel VaeModel::Init(const TableSchema& schema, const VaeArch& arch,
                        std::uint64_t seed) {
  arch.Validate();
  Rng rng(DeriveSeed(seed, 0xAE));
  VaeModel m;
  m.schema_ = schema;
  m.arch_ = arch;
  m.tokenizer_ = TokenizerParams::Init(schema, arch.token_dim, rng);
  for (std::size_t l = 0; l < arch.layers; ++l) {
    m.encoder_.push_back(TransformerLayerParams::Init(arch.token_dim, arch.ffn_dim, rng));
  }
  m.w_mu_ = FanInUniform(arch.token_dim, arch.latent_dim, rng);
  m.b_mu_ = Tensor({arch.latent_dim}, 0.0);
  m.w_logvar_ = FanInUniform(arch.token_dim, arch.latent_dim, rng);
  m.b_logvar_ = Tensor({arch.latent_dim}, 0.0);
  m.w_dec_in_ = FanInUniform(arch.latent_dim, arch.token_dim, rng);
  m.b_dec_in_ = Tensor({arch.token_dim}, 0.0);
  for (std::size_t l = 0; l < arch.layers; ++l) {
    m.decoder_.push_back(TransformerLayerParams::Init(arch.token_dim, arch.ffn_dim, rng));
  }
  m.detokenizer_ = DetokenizerParams::Init(schema, arch.token_dim, rng);
  return m;
}

NamedTensors VaeModel::Parameters() {
  NamedTensors out;
  tokenizer_.AppendTo(out, "tokenizer.");
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    encoder_[l].AppendTo(out, "encoder." + std::to_string(l) + ".");
  }
  out.emplace_back("head.w_mu", &w_mu_);
  out.emplace_back("head.b_mu", &b_mu_);
  out.emplace_back("head.w_logvar", &w_logvar_);
  out.emplace_back("head.b_logvar", &b_logvar_);
  out.emplace_back("decoder.w_in", &w_dec_in_);
  out.emplace_back("decoder.b_in", &b_dec_in_);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    decoder_[l].AppendTo(out, "decoder." + std::to_string(l) + ".");
  }
  detokenizer_.AppendTo(out, "detokenizer.");
  return out;
}

LatentState VaeModel::Encode(ad::Var x, Binder& bind, const Tensor* eps,
                             AttentionTrace* trace) const {
  const std::size_t batch = x.value().rank() == 2 ? x.value().dim(0) : 0;
  const std::size_t seq = schema_.num_features();
  ad::Var h = Tokenize(x, schema_, tokenizer_, bind);
  for (const auto& layer : encoder_) {
    h = TransformerLayer(h, batch, seq, arch_.heads, layer, bind, trace);
  }
  LatentState s;
  s.mu = Linear(h, w_mu_, b_mu_, bind);
  s.logvar = Linear(h, w_logvar_, b_logvar_, bind);
  ad::Tape& tape = *x.tape;
  if (eps == nullptr) {
    s.eps = Tensor(s.mu.shape(), 0.0);
  } else {
    if (eps->shape() != s.mu.shape()) {
      throw ShapeError("encode: eps shape " + ShapeToString(eps->shape()) +
                       " vs latent " + ShapeToString(s.mu.shape()));
    }
    s.eps = *eps;
  }
  ad::Var sigma = ad::Exp(ad::Scale(s.logvar, 0.5));
  s.z = s.mu + sigma * tape.Constant(s.eps);
  return s;
}

Reconstruction VaeModel::Decode(ad::Var z, std::size_t batch,
                                const GumbelNoise& noise, const GumbelConfig& cfg,
                                Binder& bind, AttentionTrace* trace) const {
  const std::size_t seq = schema_.num_features();
  const Shape want{batch * seq, arch_.latent_dim};
  if (z.shape() != want) {
    if (batch == 1 && z.value().size() == latent_size()) {
      z = ad::Reshape(z, want);
    } else {
      throw ShapeError("decode: latent of shape " + ShapeToString(z.shape()) +
                       ", expected " + ShapeToString(want));
    }
  }
  ad::Var h = Linear(z, w_dec_in_, b_dec_in_, bind);
  for (const auto& layer : decoder_) {
    h = TransformerLayer(h, batch, seq, arch_.heads, layer, bind, trace);
  }
  return Detokenize(h, batch, schema_, detokenizer_, noise, cfg, bind);
}

std::vector<double> VaeModel::LatentMean(std::span<const double> x) const {
  ad::Tape tape;
  Binder bind(tape, false);
  ad::Var xv = tape.Constant(
      Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end())));
  LatentState s = Encode(xv, bind, nullptr);
  return s.mu.value().data();
}

std::vector<double> VaeModel::DecodeHard(std::span<const double> z,
                                         const GumbelNoise& noise,
                                         double tau) const {
  ad::Tape tape;
  Binder bind(tape, false);
  ad::Var zv = tape.Constant(Tensor({z.size()}, std::vector<double>(z.begin(), z.end())));
  GumbelConfig cfg;
  cfg.tau = tau;
  return Decode(zv, 1, noise, cfg, bind).x_hat.value().data();
}

Tensor VaeModel::SampleEps(std::size_t batch, Rng& rng) const {
  Tensor eps({batch * schema_.num_features(), arch_.latent_dim});
  for (double& v : eps.values()) v = rng.Normal();
  return eps;
}

ad::Var KlDivergence(ad::Var mu, ad::Var logvar, std::size_t batch) {
  if (mu.shape() != logvar.shape()) {
    throw ShapeError("kl: mu " + ShapeToString(mu.shape()) + " vs logvar " +
                     ShapeToString(logvar.shape()));
  }
  ad::Var inner = ad::AddScalar(logvar, 1.0) - mu * mu - ad::Exp(logvar);
  return ad::Scale(ad::Sum(inner), -0.5 / static_cast<double>(batch));
}

VaeLossParts VaeLoss(ad::Var x, const Reconstruction& rec, ad::Var mu,
                     ad::Var logvar, double beta, const TableSchema& schema) {
  if (!(beta > 0.0)) throw ContractError("vae loss: beta must be > 0");
  const std::size_t batch = x.value().dim(0);
  ad::Tape& tape = *x.tape;
  ad::Var recon = tape.Constant(Tensor::Scalar(0.0));
  if (schema.num_numerical() > 0) {
    ad::Var diff = ad::SliceCols(x, 0, schema.num_numerical()) - rec.numerical;
    recon = recon + ad::Mean(diff * diff);
  }
  const std::size_t c = schema.num_categorical();
  if (c > 0) {
    std::vector<ad::Var> sq;
    for (std::size_t i = 0; i < c; ++i) {
      const std::size_t off = schema.block_offset(i);
      const std::size_t len = schema.block_size(i);
      ad::Var d = ad::SliceCols(x, off, len) - ad::SliceCols(rec.x_soft, off, len);
      sq.push_back(ad::Sum(d * d));
    }
    ad::Var total_sq = ad::Sum(ad::ConcatRows(sq));
    recon = recon + ad::Scale(total_sq, 1.0 / static_cast<double>(batch * c));
  }
  VaeLossParts parts;
  parts.recon = recon;
  parts.kl = KlDivergence(mu, logvar, batch);
  parts.total = recon + ad::Scale(parts.kl, beta);
  return parts;
}

double BetaSchedule(std::size_t epoch, const VaeTrainConfig& cfg) {
  if (epoch >= cfg.epochs) {
    throw ContractError("beta schedule: epoch " + std::to_string(epoch) +
                        " outside [0, " + std::to_string(cfg.epochs) + ")");
  }
  if (epoch == 0) return cfg.beta_max;
  if (epoch + 1 == cfg.epochs) return cfg.beta_min;
  const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  const double lo = std::log(cfg.beta_max);
  const double hi = std::log(cfg.beta_min);
  return std::clamp(std::exp(lo + t * (hi - lo)), cfg.beta_min, cfg.beta_max);
}

TrainingCurve TrainVae(VaeModel& model, const Tensor& train_rows,
                       const VaeTrainConfig& cfg,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.Validate();
  const TableSchema& schema = model.schema();
  if (train_rows.rank() != 2 || train_rows.dim(0) == 0) {
    throw ContractError("train_vae: training set is empty");
  }
  if (train_rows.dim(1) != schema.encoded_width()) {
    throw ShapeError("train_vae: rows have width " + std::to_string(train_rows.dim(1)));
  }
  const std::size_t n = train_rows.dim(0);
  const std::size_t k = schema.encoded_width();
  NamedTensors params = model.Parameters();
  std::vector<Tensor*> ptrs;
  for (auto& [name, t] : params) ptrs.push_back(t);
  GumbelConfig gcfg;
  gcfg.tau = cfg.tau;
  gcfg.hard_forward = false;

  TrainingCurve curve;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta = BetaSchedule(epoch, cfg);
    Rng rng(DeriveSeed(cfg.seed, 0xE0C, epoch));
    rng.Shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.beta = beta;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      Tensor xb({b, k});
      for (std::size_t r = 0; r < b; ++r) {
        std::copy_n(&train_rows[order[start + r] * k], k, &xb[r * k]);
      }
      ad::Tape tape;
      Binder bind(tape, true);
      ad::Var x = tape.Constant(std::move(xb));
      const Tensor eps = model.SampleEps(b, rng);
      // Noise-free soft samples: Gumbel noise during training saturates the
      // detokenizer, which then passes almost no gradient to the latent.
      const GumbelNoise noise = GumbelNoise::Zero(schema, b);
      LatentState lat = model.Encode(x, bind, &eps);
      Reconstruction out = model.Decode(lat.z, b, noise, gcfg, bind);
      VaeLossParts loss = VaeLoss(x, out, lat.mu, lat.logvar, beta, schema);
      const double total = loss.total.value().item();
      if (!std::isfinite(total)) {
        throw NumericError("vae loss is " + std::to_string(total) + " at epoch " +
                           std::to_string(epoch) + ", batch rows [" +
                           std::to_string(start) + ", " + std::to_string(start + b) +
                           ") of the shuffled order");
      }
      tape.Backward(loss.total);
      PullGradients(bind, params);
      ClipGradNorm(ptrs, cfg.grad_clip);
      SgdStep(ptrs, cfg.learning_rate);
      rec.loss += total;
      rec.recon += loss.recon.value().item();
      rec.kl += loss.kl.value().item();
      ++batches;
    }
    rec.loss /= static_cast<double>(batches);
    rec.recon /= static_cast<double>(batches);
    rec.kl /= static_cast<double>(batches);
    curve.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return curve;
}

double CategoricalReconstructionAccuracy(const VaeModel& model,
                                         const Tensor& rows, double tau,
                                         std::uint64_t seed) {
  const TableSchema& schema = model.schema();
  if (schema.num_categorical() == 0) return 1.0;
  const std::size_t n = rows.dim(0);
  const std::size_t k = schema.encoded_width();
  ad::Tape tape;
  Binder bind(tape, false);
  ad::Var x = tape.ConstantRef(rows);
  LatentState lat = model.Encode(x, bind, nullptr);
  Rng rng(DeriveSeed(seed, 0xACC));
  GumbelConfig cfg;
  cfg.tau = tau;
  Reconstruction rec = model.Decode(lat.mu, n, GumbelNoise::Draw(schema, n, rng), cfg, bind);
  const Tensor& xh = rec.x_hat.value();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
      bool same = true;
      for (std::size_t c = 0; c < schema.block_size(i); ++c) {
        const std::size_t idx = r * k + schema.block_offset(i) + c;
        same = same && rows[idx] == xh[idx];
      }
      correct += same ? 1 : 0;
    }
  }
  return static_cast<double>(correct) /
         static_cast<double>(n * schema.num_categorical());
}

}  // namespace tabcf
