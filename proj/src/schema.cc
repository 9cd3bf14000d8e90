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
#include "tabcf/schema.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "tabcf/errors.h"

namespace tabcf {

TableSchema::TableSchema(std::vector<Column> columns, TargetSpec target)
    : columns_(std::move(columns)), target_(std::move(target)) {
  if (columns_.empty()) throw DataError("schema declares no feature columns");
  std::set<std::string> names;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    if (col.name.empty()) throw DataError("schema column with empty name");
    if (!names.insert(col.name).second) {
      throw DataError("duplicate column name '" + col.name + "'");
    }
    if (col.kind == FeatureKind::kNumerical) {
      if (!col.categories.empty()) {
        throw DataError("numerical column '" + col.name + "' lists categories");
      }
      numerical_.push_back(c);
    } else {
      if (col.categories.size() < 2) {
        throw DataError("categorical column '" + col.name +
                        "' needs at least 2 categories");
      }
      std::set<std::string> seen(col.categories.begin(), col.categories.end());
      if (seen.size() != col.categories.size()) {
        throw DataError("categorical column '" + col.name +
                        "' repeats a category");
      }
      categorical_.push_back(c);
    }
  }
  if (target_.column.empty()) throw DataError("schema has no target column");
  if (names.count(target_.column) != 0) {
    throw DataError("target column '" + target_.column +
                    "' is also declared as a feature");
  }
  encoded_width_ = numerical_.size();
  for (std::size_t i = 0; i < categorical_.size(); ++i) {
    block_offsets_.push_back(encoded_width_);
    encoded_width_ += columns_[categorical_[i]].categories.size();
  }
}

const Column& TableSchema::feature_column(std::size_t feature) const {
  if (feature < numerical_.size()) return columns_[numerical_[feature]];
  return columns_[categorical_.at(feature - numerical_.size())];
}

TableSchema TableSchema::FromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns") || !j.contains("target")) {
    throw DataError("schema must be an object with 'columns' and 'target'");
  }
  std::vector<Column> columns;
  for (const auto& jc : j.at("columns")) {
    Column col;
    col.name = jc.at("name").get<std::string>();
    const std::string kind = jc.at("kind").get<std::string>();
    if (kind == "numerical") {
      col.kind = FeatureKind::kNumerical;
    } else if (kind == "categorical") {
      col.kind = FeatureKind::kCategorical;
      col.categories = jc.at("categories").get<std::vector<std::string>>();
    } else {
      throw DataError("column '" + col.name + "': unknown kind '" + kind + "'");
    }
    columns.push_back(std::move(col));
  }
  TargetSpec target;
  target.column = j.at("target").at("column").get<std::string>();
  target.positive_label = j.at("target").at("positive").get<std::string>();
  return TableSchema(std::move(columns), std::move(target));
}

TableSchema TableSchema::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema file " + path.string() + ": " + e.what());
  }
  return FromJson(j);
}

nlohmann::json TableSchema::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const Column& c : columns_) {
    nlohmann::json jc{{"name", c.name}};
    if (c.kind == FeatureKind::kNumerical) {
      jc["kind"] = "numerical";
    } else {
      jc["kind"] = "categorical";
      jc["categories"] = c.categories;
    }
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols},
          {"target", {{"column", target_.column}, {"positive", target_.positive_label}}}};
}

std::uint64_t TableSchema::Hash() const {
  std::string canon;
  for (const Column& c : columns_) {
    canon += c.name;
    canon += c.kind == FeatureKind::kNumerical ? ":num" : ":cat";
    for (const auto& cat : c.categories) {
      canon += '|';
      canon += cat;
    }
    canon += ';';
  }
  canon += "target=" + target_.column + "/" + target_.positive_label;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HashToHex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace tabcf
