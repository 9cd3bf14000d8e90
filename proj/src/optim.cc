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
#include "tabcf/optim.h"

#include <cmath>

#include "tabcf/errors.h"

namespace tabcf {

void SgdStep(std::span<Tensor* const> params, double learning_rate) {
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw ContractError("sgd learning rate must be finite and >= 0");
  }
  for (Tensor* p : params) {
    if (!p->grad) throw ContractError("sgd step on a tensor without gradient");
  }
  for (Tensor* p : params) {
    const auto& g = *p->grad;
    for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] -= learning_rate * g[i];
    p->ZeroGrad();
  }
}

double GradNorm(std::span<Tensor* const> params) {
  double s = 0.0;
  for (const Tensor* p : params) {
    if (!p->grad) continue;
    for (double g : *p->grad) s += g * g;
  }
  return std::sqrt(s);
}

double ClipGradNorm(std::span<Tensor* const> params, double max_norm) {
  const double norm = GradNorm(params);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (Tensor* p : params) {
      if (!p->grad) continue;
      for (double& g : *p->grad) g *= f;
    }
  }
  return norm;
}

}  // namespace tabcf
