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
#ifndef TABCF_BINDER_H_
#define TABCF_BINDER_H_

#include <string>
#include <utility>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/tensor.h"

namespace tabcf {

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;

// Brings model parameters onto a tape. With watch=false they are constants
// (inference, counterfactual search); with watch=true every bound tensor is
// remembered so a trainer can pull its gradient after Backward().
class Binder {
 public:
  Binder(ad::Tape& tape, bool watch) : tape_(&tape), watch_(watch) {}

  ad::Var operator()(const Tensor& t) {
    if (!watch_) return tape_->ConstantRef(t);
    ad::Var v = tape_->Watch(t);
    bound_.emplace_back(&t, v);
    return v;
  }

  ad::Tape& tape() { return *tape_; }
  const ad::Tape& tape() const { return *tape_; }
  const std::vector<std::pair<const Tensor*, ad::Var>>& bound() const {
    return bound_;
  }

 private:
  ad::Tape* tape_;
  bool watch_;
  std::vector<std::pair<const Tensor*, ad::Var>> bound_;
};

// Moves gradients collected by binder into the matching entries of params
// (matched by address). Parameters never bound get a zero gradient.
void PullGradients(const Binder& binder, const NamedTensors& params);

}  // namespace tabcf

#endif  // TABCF_BINDER_H_
