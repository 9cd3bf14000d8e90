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
#include "tabcf/classifier.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tabcf/errors.h"
#include "tabcf/optim.h"
#include "tabcf/rng.h"
#include "tabcf/transformer.h"

namespace tabcf {

void ClassifierConfig::Validate() const {
  if (hidden == 0) throw ConfigError("classifier.hidden must be >= 1");
  if (epochs == 0) throw ConfigError("classifier.epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("classifier.learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("classifier.batch_size must be >= 1");
}

Classifier Classifier::Init(std::size_t input_width, std::size_t hidden,
                            std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, 0xC1F));
  Classifier c;
  c.input_width_ = input_width;
  c.hidden_ = hidden;
  c.w1_ = FanInUniform(input_width, hidden, rng);
  c.b1_ = Tensor({hidden}, 0.0);
  c.w2_ = FanInUniform(hidden, hidden, rng);
  c.b2_ = Tensor({hidden}, 0.0);
  c.w3_ = FanInUniform(hidden, 1, rng);
  c.b3_ = Tensor({1}, 0.0);
  return c;
}

NamedTensors Classifier::Parameters() {
  return {{"w1", &w1_}, {"b1", &b1_}, {"w2", &w2_},
          {"b2", &b2_}, {"w3", &w3_}, {"b3", &b3_}};
}

ad::Var Classifier::Logit(ad::Var x, Binder& bind) const {
  const Tensor& xv = x.value();
  if (xv.rank() == 1 && xv.size() == input_width_) {
    x = ad::Reshape(x, {1, input_width_});
  } else if (xv.rank() != 2 || xv.dim(1) != input_width_) {
    throw ShapeError("classifier expects width " + std::to_string(input_width_) +
                     ", got shape " + ShapeToString(xv.shape()));
  }
  ad::Var h = ad::Relu(Linear(x, w1_, b1_, bind));
  h = ad::Relu(Linear(h, w2_, b2_, bind));
  return Linear(h, w3_, b3_, bind);
}

double Classifier::Logit(std::span<const double> x) const {
  if (x.size() != input_width_) {
    throw ShapeError("classifier expects width " + std::to_string(input_width_) +
                     ", got " + std::to_string(x.size()));
  }
  // Plain loops; same arithmetic order as the tape path.
  std::vector<double> h1(hidden_, 0.0), h2(hidden_, 0.0);
  for (std::size_t k = 0; k < input_width_; ++k) {
    if (x[k] == 0.0) continue;
    for (std::size_t j = 0; j < hidden_; ++j) h1[j] += x[k] * w1_[k * hidden_ + j];
  }
  for (std::size_t j = 0; j < hidden_; ++j) h1[j] = std::max(0.0, h1[j] + b1_[j]);
  for (std::size_t k = 0; k < hidden_; ++k) {
    if (h1[k] == 0.0) continue;
    for (std::size_t j = 0; j < hidden_; ++j) h2[j] += h1[k] * w2_[k * hidden_ + j];
  }
  for (std::size_t j = 0; j < hidden_; ++j) h2[j] = std::max(0.0, h2[j] + b2_[j]);
  double out = 0.0;
  for (std::size_t k = 0; k < hidden_; ++k) {
    if (h2[k] == 0.0) continue;
    out += h2[k] * w3_[k];
  }
  return out + b3_[0];
}

double Classifier::Probability(std::span<const double> x) const {
  return 1.0 / (1.0 + std::exp(-Logit(x)));
}

std::vector<double> Classifier::Logits(const Tensor& rows) const {
  std::vector<double> out(rows.dim(0));
  const std::size_t k = rows.dim(1);
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = Logit(std::span<const double>(&rows[r * k], k));
  }
  return out;
}

std::uint64_t Classifier::Checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor* t : {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}) {
    for (double v : t->values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

ClassifierReport TrainClassifier(Classifier& model, const Tensor& rows,
                                 std::span<const int> labels,
                                 const Tensor& held_out_rows,
                                 std::span<const int> held_out_labels,
                                 const ClassifierConfig& cfg) {
  cfg.Validate();
  const std::size_t n = rows.rank() == 2 ? rows.dim(0) : 0;
  if (n == 0 || labels.size() != n) {
    throw DataError("classifier training needs labelled rows");
  }
  const std::size_t k = rows.dim(1);
  if (k != model.input_width()) {
    throw ShapeError("classifier expects width " + std::to_string(model.input_width()));
  }
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == n) {
    throw DataError("classifier training data holds a single class");
  }
  bool varies = false;
  for (std::size_t c = 0; c < k && !varies; ++c) {
    for (std::size_t r = 1; r < n; ++r) {
      if (rows[r * k + c] != rows[c]) {
        varies = true;
        break;
      }
    }
  }
  if (!varies) throw DataError("classifier training data has no varying feature");

  NamedTensors params = model.Parameters();
  std::vector<Tensor*> ptrs;
  for (auto& [name, t] : params) ptrs.push_back(t);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  ClassifierReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(DeriveSeed(cfg.seed, 0xC1A55, epoch));
    rng.Shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      Tensor xb({b, k});
      Tensor yb({b, 1});
      for (std::size_t r = 0; r < b; ++r) {
        std::copy_n(&rows[order[start + r] * k], k, &xb[r * k]);
        yb[r] = labels[order[start + r]];
      }
      ad::Tape tape;
      Binder bind(tape, true);
      ad::Var logit = model.Logit(tape.Constant(std::move(xb)), bind);
      ad::Var y = tape.Constant(std::move(yb));
      // Stable BCE with logits: max(l,0) - l*y + log(1 + exp(-|l|)).
      ad::Var soft = ad::Log(ad::AddScalar(ad::Exp(-ad::Abs(logit)), 1.0));
      ad::Var loss = ad::Mean(ad::MaxWithConst(logit, 0.0) - logit * y + soft);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("classifier loss is non-finite at epoch " + std::to_string(epoch));
      }
      tape.Backward(loss);
      PullGradients(bind, params);
      SgdStep(ptrs, cfg.learning_rate);
      total += value * static_cast<double>(b);
    }
    report.epoch_loss.push_back(total / static_cast<double>(n));
  }
  const std::size_t m = held_out_rows.rank() == 2 ? held_out_rows.dim(0) : 0;
  if (m > 0) {
    const std::vector<double> logits = model.Logits(held_out_rows);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < m; ++r) {
      correct += ((logits[r] >= 0.0 ? 1 : 0) == held_out_labels[r]) ? 1 : 0;
    }
    report.held_out_accuracy = static_cast<double>(correct) / static_cast<double>(m);
  }
  return report;
}

}  // namespace tabcf
