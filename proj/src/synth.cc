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
#include "tabcf/synth.h"

#include <cmath>
#include <fstream>
#include <set>

#include "tabcf/errors.h"
#include "tabcf/rng.h"

namespace tabcf {

void SynthSpec::Validate() const {
  if (num_numerical + num_categorical == 0) throw ConfigError("synth: no features");
  if (num_categorical > 0 && categories < 2) throw ConfigError("synth.categories must be >= 2");
  if (rows < 2) throw ConfigError("synth.rows must be >= 2");
  if (signal_numerical.empty() && signal_categorical.empty()) {
    throw ConfigError("synth: at least one signal feature is required");
  }
  for (std::size_t j : signal_numerical) {
    if (j >= num_numerical) throw ConfigError("synth.signal_numerical index out of range");
  }
  for (std::size_t i : signal_categorical) {
    if (i >= num_categorical) throw ConfigError("synth.signal_categorical index out of range");
  }
  if (std::set<std::size_t>(signal_numerical.begin(), signal_numerical.end()).size() !=
          signal_numerical.size() ||
      std::set<std::size_t>(signal_categorical.begin(), signal_categorical.end()).size() !=
          signal_categorical.size()) {
    throw ConfigError("synth: duplicate signal index");
  }
  if (!(sharpness > 0.0)) throw ConfigError("synth.sharpness must be > 0");
  if (!(noise >= 0.0 && noise <= 0.5)) throw ConfigError("synth.noise must be in [0, 0.5]");
}

SynthData GenerateSynthetic(const SynthSpec& spec) {
  spec.Validate();
  std::vector<Column> columns;
  for (std::size_t j = 0; j < spec.num_numerical; ++j) {
    columns.push_back({"num_" + std::to_string(j), FeatureKind::kNumerical, {}});
  }
  std::vector<std::string> cats;
  for (std::size_t c = 0; c < spec.categories; ++c) cats.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < spec.num_categorical; ++i) {
    columns.push_back({"cat_" + std::to_string(i), FeatureKind::kCategorical, cats});
  }
  SynthData data{TableSchema(std::move(columns), {"label", "yes"}), {}};

  const std::set<std::size_t> sig_num(spec.signal_numerical.begin(),
                                      spec.signal_numerical.end());
  const std::set<std::size_t> sig_cat(spec.signal_categorical.begin(),
                                      spec.signal_categorical.end());
  const double norm = std::sqrt(static_cast<double>(sig_num.size() + sig_cat.size()));
  const double half = (static_cast<double>(spec.categories) - 1.0) / 2.0;
  Rng rng(spec.seed);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    RawRow row;
    double score = 0.0;
    for (std::size_t j = 0; j < spec.num_numerical; ++j) {
      const double u = rng.Normal();
      row.values.emplace_back(std::round((50.0 + 15.0 * u) * 100.0) / 100.0);
      if (sig_num.count(j)) score += u;
    }
    for (std::size_t i = 0; i < spec.num_categorical; ++i) {
      const std::size_t c = rng.Index(spec.categories);
      row.values.emplace_back(cats[c]);
      if (sig_cat.count(i)) score += (static_cast<double>(c) - half) / half;
    }
    score /= norm;
    const double p = 1.0 / (1.0 + std::exp(-spec.sharpness * score));
    int label = rng.Uniform() < p ? 1 : 0;
    if (rng.Uniform() < spec.noise) label = 1 - label;
    data.table.rows.push_back(std::move(row));
    data.table.labels.push_back(label);
  }
  return data;
}

void WriteSynthetic(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteCsv(dir / "data.csv", data.schema, data.table, "no");
  std::ofstream f(dir / "schema.json", std::ios::binary);
  if (!f) throw DataError("cannot write " + (dir / "schema.json").string());
  f << data.schema.ToJson().dump(2) << '\n';
}

}  // namespace tabcf
