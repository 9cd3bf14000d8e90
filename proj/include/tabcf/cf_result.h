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
#ifndef TABCF_CF_RESULT_H_
#define TABCF_CF_RESULT_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tabcf/tensor.h"

namespace tabcf {

struct LossComponents {
  double validity = 0.0;          // hinge on the target-class logit
  double input_proximity = 0.0;   // L1 in encoded space
  double latent_proximity = 0.0;  // L2 in latent space (tabcf only)
  double regularization = 0.0;    // one-hot penalty (dice_like only)
  double total = 0.0;
};

enum class CfStatus { kOk, kAlreadyTarget };

struct CFResult {
  std::size_t instance_id = 0;
  std::string method;
  std::vector<double> original;        // x0, encoded
  std::vector<double> counterfactual;  // x', encoded, constraint-respecting
  bool valid = false;                  // f(x') = 1 at return time
  std::size_t steps = 0;               // gradient updates performed
  LossComponents loss;                 // at the returned point
  double logit = 0.0;                  // f's logit at x'
  double latent_distance = 0.0;        // ||z - z0||_2 at return (tabcf)
  double initial_loss = 0.0;
  std::uint64_t noise_seed = 0;        // replays the final Gumbel decode
  CfStatus status = CfStatus::kOk;
};

// Runs fn(i) for every i in [0, count) and returns results in index order.
// With workers > 1 the indices are split over threads; each call must be
// independent of the others, so the output does not depend on workers.
std::vector<CFResult> RunBatch(std::size_t count,
                               const std::function<CFResult(std::size_t)>& fn,
                               std::size_t workers = 1);

// Hinge on the target-class log-odds: max(0, 1 - logit).
double HingeYLoss(double logit);

}  // namespace tabcf

#endif  // TABCF_CF_RESULT_H_
