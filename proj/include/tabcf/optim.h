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
#ifndef TABCF_OPTIM_H_
#define TABCF_OPTIM_H_

#include <span>

#include "tabcf/tensor.h"

namespace tabcf {

// p <- p - lr * grad(p) for every tensor, then clears the gradients.
// Throws ContractError if any tensor lacks a gradient. lr == 0 leaves the
// parameters unchanged.
void SgdStep(std::span<Tensor* const> params, double learning_rate);

// Global L2 norm over all gradients.
double GradNorm(std::span<Tensor* const> params);

// Rescales gradients so their global norm is at most max_norm. Returns the
// norm before clipping.
double ClipGradNorm(std::span<Tensor* const> params, double max_norm);

}  // namespace tabcf

#endif  // TABCF_OPTIM_H_
