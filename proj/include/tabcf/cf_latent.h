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
#ifndef TABCF_CF_LATENT_H_
#define TABCF_CF_LATENT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/cf_result.h"
#include "tabcf/classifier.h"
#include "tabcf/tokenizer.h"
#include "tabcf/vae.h"

namespace tabcf {

struct CFConfig {
  double lambda_input = 1.0;
  double lambda_latent = 1.0;
  std::size_t max_steps = 5000;
  double learning_rate = 0.05;
  // Converged when the total loss changed by less than tolerance (relative)
  // over the last window steps.
  double tolerance = 1e-5;
  std::size_t window = 10;
  double tau = 1.0;
  // Draw fresh Gumbel noise every step instead of once per instance.
  bool resample_noise = false;
  std::uint64_t seed = 0;

  void Validate() const;
};

ad::Var HingeYLoss(ad::Var logit);

struct CfLossTerms {
  ad::Var total;
  ad::Var hinge;
  ad::Var input_proximity;
  ad::Var latent_proximity;
  ad::Var logit;
  ad::Var x_hat;  // hard forward, soft backward
};

// hinge(f(Dec(z))) + lambda_input * |x0 - Dec(z)|_1 + lambda_latent * |z0 - z|_2
CfLossTerms CfLoss(ad::Var z, const Tensor& z0, const Tensor& x0,
                   const VaeModel& vae, const Classifier& clf,
                   const GumbelNoise& noise, const CFConfig& cfg, Binder& bind);

// Latent-space search from z0 = Enc(x0) with eps = 0. Throws ContractError
// ("already target class") when f(x0) = 1.
CFResult GenerateCf(std::span<const double> x0, const VaeModel& vae,
                    const Classifier& clf, const CFConfig& cfg,
                    std::size_t instance_id);

// Order-preserving; instances already in the target class come back with
// status kAlreadyTarget instead of throwing.
std::vector<CFResult> BatchGenerateCf(const Tensor& rows,
                                      std::span<const std::size_t> instance_ids,
                                      const VaeModel& vae, const Classifier& clf,
                                      const CFConfig& cfg, std::size_t workers = 1);

}  // namespace tabcf

#endif  // TABCF_CF_LATENT_H_
