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
#ifndef TABCF_SCHEMA_H_
#define TABCF_SCHEMA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabcf {

enum class FeatureKind { kNumerical, kCategorical };

struct Column {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  // Ordered domain; defines the one-hot layout. Empty for numericals.
  std::vector<std::string> categories;
};

struct TargetSpec {
  std::string column;
  // Rows whose target equals this label get y = 1.
  std::string positive_label;
};

// Declared table layout. Features are addressed in two ways:
//   * column index: position in columns() (declaration order),
//   * feature index: numerical features first (declaration order among
//     numericals), then categorical features. This is the token order and
//     the block order of the encoded vector.
class TableSchema {
 public:
  TableSchema() = default;
  TableSchema(std::vector<Column> columns, TargetSpec target);

  static TableSchema FromJson(const nlohmann::json& j);
  static TableSchema Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  const std::vector<Column>& columns() const { return columns_; }
  const TargetSpec& target() const { return target_; }

  std::size_t num_numerical() const { return numerical_.size(); }
  std::size_t num_categorical() const { return categorical_.size(); }
  std::size_t num_features() const { return columns_.size(); }
  // k = |N| + sum_i C_i
  std::size_t encoded_width() const { return encoded_width_; }

  // Column index of the j-th numerical / i-th categorical feature.
  std::size_t numerical_column(std::size_t j) const { return numerical_[j]; }
  std::size_t categorical_column(std::size_t i) const { return categorical_[i]; }
  const Column& feature_column(std::size_t feature) const;

  // Encoded layout of categorical block i.
  std::size_t block_offset(std::size_t i) const { return block_offsets_[i]; }
  std::size_t block_size(std::size_t i) const {
    return columns_[categorical_[i]].categories.size();
  }

  // Stable 64-bit FNV-1a digest of the canonical schema text.
  std::uint64_t Hash() const;

 private:
  std::vector<Column> columns_;
  TargetSpec target_;
  std::vector<std::size_t> numerical_;
  std::vector<std::size_t> categorical_;
  std::vector<std::size_t> block_offsets_;
  std::size_t encoded_width_ = 0;
};

std::string HashToHex(std::uint64_t hash);

}  // namespace tabcf

#endif  // TABCF_SCHEMA_H_
