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

#ifndef TABCF_TESTS_TEST_SUPPORT_H_
#define TABCF_TESTS_TEST_SUPPORT_H_

// Shared oracles for the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tabcf/autodiff.h"
#include "tabcf/classifier.h"
#include "tabcf/rng.h"
#include "tabcf/schema.h"
#include "tabcf/tensor.h"

namespace tabcf::testing {

// Builds a scalar on tape from one leaf per input tensor.
using LossBuilder =
    std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "input i[j]: analytic a vs numeric n"
};

// |a - n| / max(|a|, |n|, 1): relative where gradients are O(1) or larger,
// absolute below, so entries that are zero analytically do not divide by
// finite-difference round-off.
inline double RelError(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
  return std::abs(analytic - numeric) / scale;
}

inline double EvalLoss(const std::vector<Tensor>& inputs,
                       const LossBuilder& build) {
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const Tensor& t : inputs) leaves.push_back(tape.ConstantRef(t));
  return build(tape, leaves).value().item();
}

// Reverse-mode gradient of build() against central differences with step h,
// over every element of every input.
inline GradCheck CheckGradients(std::vector<Tensor> inputs,
                                const LossBuilder& build, double h = 1e-5) {
  std::vector<std::vector<double>> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.Watch(t));
    ad::Var loss = build(tape, leaves);
    tape.Backward(loss);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::span<const double> g = tape.grad(leaves[i]);
      std::vector<double> full(inputs[i].size(), 0.0);
      std::copy(g.begin(), g.end(), full.begin());
      analytic.push_back(std::move(full));
    }
  }
  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double keep = inputs[i][j];
      inputs[i][j] = keep + h;
      const double up = EvalLoss(inputs, build);
      inputs[i][j] = keep - h;
      const double down = EvalLoss(inputs, build);
      inputs[i][j] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double err = RelError(analytic[i][j], numeric);
      ++out.checked;
      if (err > out.max_rel_error || !std::isfinite(err)) {
        out.max_rel_error = std::isfinite(err) ? err : INFINITY;
        out.worst = "input " + std::to_string(i) + "[" + std::to_string(j) +
                    "]: analytic " + std::to_string(analytic[i][j]) +
                    " vs numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

// Uniform(lo, hi) entries; with min_abs > 0 values closer to 0 than that are
// pushed out, keeping kinked primitives away from their kink.
inline Tensor RandomTensor(Shape shape, Rng& rng, double lo = -1.0,
                           double hi = 1.0, double min_abs = 0.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.Uniform(lo, hi);
    if (std::abs(v) < min_abs) v = v < 0 ? v - min_abs : v + min_abs;
    t[i] = v;
  }
  return t;
}

// num_0, num_1 numerical; colour (3 categories), flag (2 categories).
inline TableSchema SmallSchema() {
  std::vector<Column> cols = {
      {"num_0", FeatureKind::kNumerical, {}},
      {"colour", FeatureKind::kCategorical, {"red", "green", "blue"}},
      {"num_1", FeatureKind::kNumerical, {}},
      {"flag", FeatureKind::kCategorical, {"no", "yes"}},
  };
  return TableSchema(std::move(cols), TargetSpec{"label", "pos"});
}

// Random valid encoded row of schema.
inline std::vector<double> RandomEncodedRow(const TableSchema& schema, Rng& rng) {
  std::vector<double> x(schema.encoded_width(), 0.0);
  for (std::size_t j = 0; j < schema.num_numerical(); ++j) x[j] = rng.Uniform();
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    x[schema.block_offset(i) + rng.Index(schema.block_size(i))] = 1.0;
  }
  return x;
}

// f(x) = scale * (x[entry] + 0.1) - offset for x[entry] >= 0: depends on a
// single encoded entry. The 0.1 keeps the ReLUs off their kink at 0.
inline Classifier SingleEntryClassifier(std::size_t width, std::size_t entry,
                                        double scale, double offset) {
  Classifier clf = Classifier::Init(width, 1, 0);
  NamedTensors p = clf.Parameters();
  for (auto& [name, t] : p) std::fill(t->data().begin(), t->data().end(), 0.0);
  (*p[0].second)[entry] = 1.0;  // w1 [width, 1]
  (*p[1].second)[0] = 0.1;      // b1
  (*p[2].second)[0] = 1.0;      // w2 [1, 1]
  (*p[4].second)[0] = scale;    // w3 [1, 1]
  (*p[5].second)[0] = -offset;  // b3
  return clf;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("tabcf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tabcf::testing

#endif  // TABCF_TESTS_TEST_SUPPORT_H_
