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
#ifndef TABCF_CLASSIFIER_H_
#define TABCF_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/tensor.h"

namespace tabcf {

struct ClassifierConfig {
  std::size_t hidden = 32;
  std::size_t epochs = 400;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Black-box model f: k -> hidden -> hidden -> 1 logit, ReLU activations.
// P(y = 1 | x) = sigmoid(logit); the decision is 1 iff logit >= 0.
class Classifier {
 public:
  Classifier() = default;
  static Classifier Init(std::size_t input_width, std::size_t hidden,
                         std::uint64_t seed);

  std::size_t input_width() const { return input_width_; }
  std::size_t hidden() const { return hidden_; }
  NamedTensors Parameters();

  // x: [B, k] -> logits [B, 1].
  ad::Var Logit(ad::Var x, Binder& bind) const;
  double Logit(std::span<const double> x) const;
  double Probability(std::span<const double> x) const;
  int Predict(std::span<const double> x) const { return Logit(x) >= 0.0 ? 1 : 0; }
  std::vector<double> Logits(const Tensor& rows) const;

  // FNV-1a over the raw parameter bytes; used to prove the model is frozen.
  std::uint64_t Checksum() const;

 private:
  std::size_t input_width_ = 0;
  std::size_t hidden_ = 0;
  Tensor w1_, b1_, w2_, b2_, w3_, b3_;
};

struct ClassifierReport {
  double held_out_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

// Minibatch SGD on binary cross-entropy. Throws DataError when the training
// labels hold a single class or no input column varies.
ClassifierReport TrainClassifier(Classifier& model, const Tensor& rows,
                                 std::span<const int> labels,
                                 const Tensor& held_out_rows,
                                 std::span<const int> held_out_labels,
                                 const ClassifierConfig& cfg);

}  // namespace tabcf

#endif  // TABCF_CLASSIFIER_H_
