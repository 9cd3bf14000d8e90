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
#ifndef TABCF_DATASET_H_
#define TABCF_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabcf/schema.h"
#include "tabcf/tensor.h"

namespace tabcf {

using RawValue = std::variant<double, std::string>;

// One row in raw form, aligned with schema.columns().
struct RawRow {
  std::vector<RawValue> values;
  bool operator==(const RawRow&) const = default;
};

struct RawTable {
  std::vector<RawRow> rows;
  std::vector<int> labels;  // 1 iff target == positive label
};

// Comma separated, header row first. Columns are matched by name, so their
// order in the file is free; every schema column and the target must appear.
// Empty cells are rejected.
RawTable LoadCsv(const std::filesystem::path& path, const TableSchema& schema);
RawTable ParseCsv(std::istream& in, const TableSchema& schema);
// Rows with label 0 are written with negative_label.
void WriteCsv(const std::filesystem::path& path, const TableSchema& schema,
              const RawTable& table, const std::string& negative_label);
std::string FormatRawValue(const RawValue& v);

// Scaling statistics fitted on the training rows. Numerical features map to
// [0,1] by min-max; categorical features map to one-hot blocks in schema
// order. Mean/std (population) are kept for standardised distances.
class Preprocessor {
 public:
  struct NumericStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 1.0;
    bool constant = false;  // min == max; encodes to 0 and std reads as 1
  };

  Preprocessor() = default;
  // Needs at least two rows.
  static Preprocessor Fit(const RawTable& train, const TableSchema& schema);

  const TableSchema& schema() const { return schema_; }
  const NumericStats& stats(std::size_t j) const { return stats_.at(j); }

  std::vector<double> EncodeRow(const RawRow& row) const;
  // Numericals outside [0,1] are clipped; a categorical block that is not
  // exactly one-hot throws ContractError.
  RawRow DecodeRow(std::span<const double> x) const;
  Tensor EncodeTable(const RawTable& table) const;
  Tensor EncodeRows(const RawTable& table, std::span<const std::size_t> rows) const;

  // Encoded [0,1] value of numerical feature j back to raw units.
  double RawNumeric(std::size_t j, double encoded) const;
  // (raw - mean) / std using training statistics.
  double Standardize(std::size_t j, double raw) const;

  nlohmann::json ToJson() const;
  static Preprocessor FromJson(const nlohmann::json& j);

 private:
  TableSchema schema_;
  std::vector<NumericStats> stats_;
};

struct EncodedDataset {
  Tensor rows;  // [n, k]
  std::vector<int> labels;
};

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle; test_fraction of rows go to the test side, and the train
// side is capped at train_cap rows (the surplus is dropped, not leaked).
TrainTestSplit SplitRows(std::size_t n_rows, double test_fraction,
                         std::size_t train_cap, std::uint64_t seed);

struct TestSelection {
  std::vector<std::size_t> indices;  // ascending
  std::size_t requested = 0;
  std::size_t eligible = 0;
  bool shortage() const { return eligible < requested; }
};

// Picks up to n candidates for which is_negative() holds (f(x) = 0),
// deterministically by seed. With fewer than n eligible, all are returned and
// shortage() reports it.
TestSelection SelectTestPool(std::span<const std::size_t> candidates,
                             const std::function<bool(std::size_t)>& is_negative,
                             std::size_t n, std::uint64_t seed);

// Encoded-row invariants: numericals in [0,1], blocks exactly one-hot.
bool SatisfiesEncoding(const TableSchema& schema, std::span<const double> x);

}  // namespace tabcf

#endif  // TABCF_DATASET_H_
