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
#include "tabcf/cf_latent.h"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tabcf/errors.h"
#include "tabcf/optim.h"
#include "tabcf/rng.h"

namespace tabcf {

void CFConfig::Validate() const {
  if (!(lambda_input >= 0.0)) throw ConfigError("cf.lambda_input must be >= 0");
  if (!(lambda_latent >= 0.0)) throw ConfigError("cf.lambda_latent must be >= 0");
  if (max_steps == 0) throw ConfigError("cf.max_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("cf.learning_rate must be > 0");
  if (!(tolerance >= 0.0)) throw ConfigError("cf.tolerance must be >= 0");
  if (window == 0) throw ConfigError("cf.window must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("cf.tau must be > 0");
}

ad::Var HingeYLoss(ad::Var logit) {
  return ad::MaxWithConst(ad::AddScalar(-logit, 1.0), 0.0);
}

CfLossTerms CfLoss(ad::Var z, const Tensor& z0, const Tensor& x0,
                   const VaeModel& vae, const Classifier& clf,
                   const GumbelNoise& noise, const CFConfig& cfg, Binder& bind) {
  ad::Tape& tape = *z.tape;
  if (z.value().size() != z0.size()) {
    throw ShapeError("cf loss: z and z0 differ in size");
  }
  GumbelConfig gcfg;
  gcfg.tau = cfg.tau;
  CfLossTerms t;
  t.x_hat = vae.Decode(z, 1, noise, gcfg, bind).x_hat;
  t.logit = clf.Logit(t.x_hat, bind);
  t.hinge = HingeYLoss(t.logit);
  ad::Var x0v = tape.ConstantRef(x0);
  ad::Var flat = ad::Reshape(t.x_hat, x0.shape());
  t.input_proximity = ad::Sum(ad::Abs(x0v - flat));
  ad::Var zflat = ad::Reshape(z, z0.shape());
  t.latent_proximity = ad::L2Norm(zflat - tape.ConstantRef(z0));
  t.total = t.hinge + ad::Scale(t.input_proximity, cfg.lambda_input) +
            ad::Scale(t.latent_proximity, cfg.lambda_latent);
  return t;
}

namespace {

struct Evaluation {
  LossComponents loss;
  double logit = 0.0;
  std::vector<double> x_hat;
};

bool Converged(const std::deque<double>& history, double tol) {
  const double old = history.front();
  const double now = history.back();
  return std::abs(now - old) <= tol * std::max(std::abs(old), 1e-12);
}

}  // namespace

CFResult GenerateCf(std::span<const double> x0, const VaeModel& vae,
                    const Classifier& clf, const CFConfig& cfg,
                    std::size_t instance_id) {
  cfg.Validate();
  const TableSchema& schema = vae.schema();
  if (x0.size() != schema.encoded_width()) {
    throw ShapeError("generate_cf: instance width " + std::to_string(x0.size()));
  }
  if (clf.Predict(x0) == 1) {
    throw ContractError("instance " + std::to_string(instance_id) +
                        " is already target class");
  }
  CFResult res;
  res.instance_id = instance_id;
  res.method = "tabcf";
  res.original.assign(x0.begin(), x0.end());

  const Tensor x0t({x0.size()}, res.original);
  const Tensor z0(Shape{vae.latent_size()}, vae.LatentMean(x0));
  Tensor z = z0;
  z.requires_grad = true;

  auto noise_for = [&](std::size_t step) {
    res.noise_seed = DeriveSeed(cfg.seed, instance_id, cfg.resample_noise ? step : 0);
    Rng rng(res.noise_seed);
    return GumbelNoise::Draw(schema, 1, rng);
  };
  GumbelNoise noise = noise_for(0);

  std::deque<double> history;
  std::size_t step = 0;
  for (;; ++step) {
    ad::Tape tape;
    Binder bind(tape, false);
    ad::Var zv = tape.Param(z);
    CfLossTerms t = CfLoss(zv, z0, x0t, vae, clf, noise, cfg, bind);
    const double total = t.total.value().item();
    if (!std::isfinite(total)) {
      throw NumericError("cf loss is non-finite for instance " +
                         std::to_string(instance_id) + " at step " + std::to_string(step));
    }
    if (step == 0) res.initial_loss = total;
    res.logit = t.logit.value().item();
    res.loss = {t.hinge.value().item(), t.input_proximity.value().item(),
                t.latent_proximity.value().item(), 0.0, total};
    res.counterfactual = t.x_hat.value().data();
    res.latent_distance = res.loss.latent_proximity;

    history.push_back(total);
    if (history.size() > cfg.window + 1) history.pop_front();
    const bool valid = res.logit >= 0.0;
    const bool converged = history.size() == cfg.window + 1 && Converged(history, cfg.tolerance);
    if ((converged && valid) || step == cfg.max_steps) break;

    tape.Backward(t.total);
    if (!z.grad || std::all_of(z.grad->begin(), z.grad->end(),
                               [](double g) { return g == 0.0; })) {
      z.ZeroGrad();
      break;  // stationary: further steps cannot move z
    }
    Tensor* params[] = {&z};
    SgdStep(params, cfg.learning_rate);
    if (cfg.resample_noise) noise = noise_for(step + 1);
  }
  res.steps = step;
  // The hard decode seen by f is the returned counterfactual.
  res.valid = clf.Predict(res.counterfactual) == 1;
  return res;
}

std::vector<CFResult> BatchGenerateCf(const Tensor& rows,
                                      std::span<const std::size_t> instance_ids,
                                      const VaeModel& vae, const Classifier& clf,
                                      const CFConfig& cfg, std::size_t workers) {
  const std::size_t k = vae.schema().encoded_width();
  if (rows.rank() != 2 || rows.dim(0) != instance_ids.size() || rows.dim(1) != k) {
    throw ShapeError("batch_generate: rows/ids mismatch");
  }
  return RunBatch(
      instance_ids.size(),
      [&](std::size_t i) {
        std::span<const double> x0(&rows[i * k], k);
        if (clf.Predict(x0) == 1) {
          CFResult r;
          r.instance_id = instance_ids[i];
          r.method = "tabcf";
          r.original.assign(x0.begin(), x0.end());
          r.counterfactual = r.original;
          r.valid = true;
          r.logit = clf.Logit(x0);
          r.status = CfStatus::kAlreadyTarget;
          return r;
        }
        return GenerateCf(x0, vae, clf, cfg, instance_ids[i]);
      },
      workers);
}

}  // namespace tabcf
