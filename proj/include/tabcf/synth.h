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
#ifndef TABCF_SYNTH_H_
#define TABCF_SYNTH_H_

// Synthetic mixed-type tables with a known label mechanism.
//
// Columns num_0..num_{N-1} are numerical, raw value 50 + 15 * u with
// u ~ N(0,1), rounded to 0.01. Columns cat_0..cat_{M-1} take categories
// c0..c{C-1} uniformly. With S the signal features,
//   score = (sum_{j in S_num} u_j + sum_{i in S_cat} e(c_i)) / sqrt(|S|),
//   e(c)  = (c - (C-1)/2) / ((C-1)/2)        (in [-1, 1])
//   P(label = yes) = sigmoid(sharpness * score),
// after which the drawn label is flipped with probability noise. Features
// outside S do not enter the label.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tabcf/dataset.h"
#include "tabcf/schema.h"

namespace tabcf {

struct SynthSpec {
  std::size_t num_numerical = 3;
  std::size_t num_categorical = 3;
  std::size_t categories = 3;
  std::size_t rows = 2000;
  std::uint64_t seed = 0;
  std::vector<std::size_t> signal_numerical = {0, 1, 2};
  std::vector<std::size_t> signal_categorical = {0, 1, 2};
  double sharpness = 6.0;
  double noise = 0.0;

  void Validate() const;
};

struct SynthData {
  TableSchema schema;
  RawTable table;
};

SynthData GenerateSynthetic(const SynthSpec& spec);

// Writes data.csv and schema.json into dir (created if needed).
void WriteSynthetic(const SynthData& data, const std::filesystem::path& dir);

}  // namespace tabcf

#endif  // TABCF_SYNTH_H_
