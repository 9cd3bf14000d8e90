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
#include "tabcf/dataset.h"

#include <algorithm>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "tabcf/errors.h"
#include "tabcf/rng.h"

namespace tabcf {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits one CSV record; double quotes protect commas, "" escapes a quote.
std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(Trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(Trim(cur));
  return out;
}

bool ParseDouble(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

std::string QuoteIfNeeded(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

RawTable ParseCsv(std::istream& in, const TableSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty (no header row)");
  const std::vector<std::string> header = SplitCsvLine(line);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!pos.emplace(header[i], i).second) {
      throw DataError("CSV header repeats column '" + header[i] + "'");
    }
  }
  const auto& cols = schema.columns();
  std::vector<std::size_t> col_pos(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto it = pos.find(cols[c].name);
    if (it == pos.end()) {
      throw DataError("CSV header lacks schema column '" + cols[c].name + "'");
    }
    col_pos[c] = it->second;
  }
  auto tit = pos.find(schema.target().column);
  if (tit == pos.end()) {
    throw DataError("CSV header lacks target column '" + schema.target().column + "'");
  }
  const std::size_t target_pos = tit->second;
  if (header.size() != cols.size() + 1) {
    throw DataError("CSV header has " + std::to_string(header.size()) +
                    " columns, schema declares " + std::to_string(cols.size() + 1));
  }

  RawTable table;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row_index) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    RawRow row;
    row.values.reserve(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& cell = cells[col_pos[c]];
      if (cell.empty()) {
        throw DataError("row " + std::to_string(row_index) + ": column '" +
                        cols[c].name + "' is missing a value");
      }
      if (cols[c].kind == FeatureKind::kNumerical) {
        double v = 0.0;
        if (!ParseDouble(cell, v)) {
          throw DataError("row " + std::to_string(row_index) + ": column '" +
                          cols[c].name + "' value '" + cell + "' is not a number");
        }
        row.values.emplace_back(v);
      } else {
        const auto& cats = cols[c].categories;
        if (std::find(cats.begin(), cats.end(), cell) == cats.end()) {
          throw DataError("column '" + cols[c].name + "': unknown category '" +
                          cell + "' in row " + std::to_string(row_index));
        }
        row.values.emplace_back(cell);
      }
    }
    const std::string& label = cells[target_pos];
    if (label.empty()) {
      throw DataError("row " + std::to_string(row_index) + ": target is missing");
    }
    table.labels.push_back(label == schema.target().positive_label ? 1 : 0);
    table.rows.push_back(std::move(row));
    ++row_index;
  }
  return table;
}

RawTable LoadCsv(const std::filesystem::path& path, const TableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  return ParseCsv(in, schema);
}

std::string FormatRawValue(const RawValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
  return std::string(buf, res.ptr);  // shortest form that round-trips
}

void WriteCsv(const std::filesystem::path& path, const TableSchema& schema,
              const RawTable& table, const std::string& negative_label) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV file " + path.string());
  for (const Column& c : schema.columns()) out << QuoteIfNeeded(c.name) << ',';
  out << QuoteIfNeeded(schema.target().column) << '\n';
  if (negative_label == schema.target().positive_label) {
    throw ContractError("negative label equals the positive label");
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (const RawValue& v : table.rows[r].values) {
      out << QuoteIfNeeded(FormatRawValue(v)) << ',';
    }
    out << QuoteIfNeeded(table.labels[r] == 1 ? schema.target().positive_label
                                              : negative_label)
        << '\n';
  }
}

Preprocessor Preprocessor::Fit(const RawTable& train, const TableSchema& schema) {
  if (train.rows.size() < 2) {
    throw DataError("preprocessor needs at least 2 training rows");
  }
  Preprocessor p;
  p.schema_ = schema;
  const double n = static_cast<double>(train.rows.size());
  for (std::size_t j = 0; j < schema.num_numerical(); ++j) {
    const std::size_t c = schema.numerical_column(j);
    NumericStats s;
    s.min = s.max = std::get<double>(train.rows[0].values[c]);
    double sum = 0.0;
    for (const RawRow& row : train.rows) {
      const double v = std::get<double>(row.values[c]);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      sum += v;
    }
    s.mean = sum / n;
    double ss = 0.0;
    for (const RawRow& row : train.rows) {
      const double d = std::get<double>(row.values[c]) - s.mean;
      ss += d * d;
    }
    s.std = std::sqrt(ss / n);
    s.constant = s.max == s.min;
    if (s.constant || s.std == 0.0) s.std = 1.0;
    p.stats_.push_back(s);
  }
  return p;
}

std::vector<double> Preprocessor::EncodeRow(const RawRow& row) const {
  if (row.values.size() != schema_.num_features()) {
    throw ShapeError("row has " + std::to_string(row.values.size()) +
                     " values, schema has " + std::to_string(schema_.num_features()));
  }
  std::vector<double> x(schema_.encoded_width(), 0.0);
  for (std::size_t j = 0; j < schema_.num_numerical(); ++j) {
    const NumericStats& s = stats_[j];
    const double v = std::get<double>(row.values[schema_.numerical_column(j)]);
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in column '" +
                      schema_.feature_column(j).name + "'");
    }
    x[j] = s.constant ? 0.0 : std::clamp((v - s.min) / (s.max - s.min), 0.0, 1.0);
  }
  for (std::size_t i = 0; i < schema_.num_categorical(); ++i) {
    const Column& col = schema_.columns()[schema_.categorical_column(i)];
    const auto& v = std::get<std::string>(row.values[schema_.categorical_column(i)]);
    const auto it = std::find(col.categories.begin(), col.categories.end(), v);
    if (it == col.categories.end()) {
      throw DataError("column '" + col.name + "': unknown category '" + v + "'");
    }
    x[schema_.block_offset(i) +
      static_cast<std::size_t>(it - col.categories.begin())] = 1.0;
  }
  return x;
}

RawRow Preprocessor::DecodeRow(std::span<const double> x) const {
  if (x.size() != schema_.encoded_width()) {
    throw ShapeError("encoded row has width " + std::to_string(x.size()) +
                     ", expected " + std::to_string(schema_.encoded_width()));
  }
  RawRow row;
  row.values.resize(schema_.num_features());
  for (std::size_t j = 0; j < schema_.num_numerical(); ++j) {
    row.values[schema_.numerical_column(j)] = RawNumeric(j, x[j]);
  }
  for (std::size_t i = 0; i < schema_.num_categorical(); ++i) {
    const Column& col = schema_.columns()[schema_.categorical_column(i)];
    std::size_t hot = col.categories.size();
    for (std::size_t c = 0; c < col.categories.size(); ++c) {
      const double v = x[schema_.block_offset(i) + c];
      if (v == 1.0 && hot == col.categories.size()) {
        hot = c;
      } else if (v != 0.0) {
        throw ContractError("block for column '" + col.name + "' is not one-hot");
      }
    }
    if (hot == col.categories.size()) {
      throw ContractError("block for column '" + col.name + "' has no hot entry");
    }
    row.values[schema_.categorical_column(i)] = col.categories[hot];
  }
  return row;
}

Tensor Preprocessor::EncodeTable(const RawTable& table) const {
  std::vector<std::size_t> all(table.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return EncodeRows(table, all);
}

Tensor Preprocessor::EncodeRows(const RawTable& table,
                                std::span<const std::size_t> rows) const {
  const std::size_t k = schema_.encoded_width();
  Tensor out({rows.size(), k});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<double> x = EncodeRow(table.rows.at(rows[r]));
    std::copy(x.begin(), x.end(), &out[r * k]);
  }
  return out;
}

double Preprocessor::RawNumeric(std::size_t j, double encoded) const {
  const NumericStats& s = stats_.at(j);
  const double x = std::clamp(encoded, 0.0, 1.0);
  return s.constant ? s.min : s.min + x * (s.max - s.min);
}

double Preprocessor::Standardize(std::size_t j, double raw) const {
  const NumericStats& s = stats_.at(j);
  return (raw - s.mean) / s.std;
}

nlohmann::json Preprocessor::ToJson() const {
  nlohmann::json stats = nlohmann::json::array();
  for (const NumericStats& s : stats_) {
    stats.push_back({{"min", s.min},
                     {"max", s.max},
                     {"mean", s.mean},
                     {"std", s.std},
                     {"constant", s.constant}});
  }
  return {{"schema", schema_.ToJson()}, {"numerical", stats}};
}

Preprocessor Preprocessor::FromJson(const nlohmann::json& j) {
  Preprocessor p;
  p.schema_ = TableSchema::FromJson(j.at("schema"));
  for (const auto& js : j.at("numerical")) {
    NumericStats s;
    s.min = js.at("min").get<double>();
    s.max = js.at("max").get<double>();
    s.mean = js.at("mean").get<double>();
    s.std = js.at("std").get<double>();
    s.constant = js.at("constant").get<bool>();
    p.stats_.push_back(s);
  }
  if (p.stats_.size() != p.schema_.num_numerical()) {
    throw DataError("preprocessor statistics do not match schema");
  }
  return p;
}

TrainTestSplit SplitRows(std::size_t n_rows, double test_fraction,
                         std::size_t train_cap, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split.test_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) order[i] = i;
  Rng rng(DeriveSeed(seed, 0x5b1e));
  rng.Shuffle(order);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n_rows)));
  TrainTestSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  const std::size_t n_train = std::min(train_cap, n_rows - n_test);
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                     order.begin() + static_cast<std::ptrdiff_t>(n_test + n_train));
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

TestSelection SelectTestPool(std::span<const std::size_t> candidates,
                             const std::function<bool(std::size_t)>& is_negative,
                             std::size_t n, std::uint64_t seed) {
  TestSelection sel;
  sel.requested = n;
  std::vector<std::size_t> eligible;
  for (std::size_t c : candidates) {
    if (is_negative(c)) eligible.push_back(c);
  }
  std::sort(eligible.begin(), eligible.end());
  sel.eligible = eligible.size();
  Rng rng(DeriveSeed(seed, 0x7e57));
  rng.Shuffle(eligible);
  if (eligible.size() > n) eligible.resize(n);
  std::sort(eligible.begin(), eligible.end());
  sel.indices = std::move(eligible);
  return sel;
}

bool SatisfiesEncoding(const TableSchema& schema, std::span<const double> x) {
  if (x.size() != schema.encoded_width()) return false;
  for (std::size_t j = 0; j < schema.num_numerical(); ++j) {
    if (!(x[j] >= 0.0 && x[j] <= 1.0)) return false;
  }
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < schema.block_size(i); ++c) {
      const double v = x[schema.block_offset(i) + c];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

}  // namespace tabcf
