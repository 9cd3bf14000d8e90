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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tabcf/dataset.h"
#include "tabcf/errors.h"
#include "tabcf/schema.h"
#include "tabcf/synth.h"
#include "test_support.h"

namespace tabcf {
namespace {

using testing::SmallSchema;

const char* kCsv =
    "label,flag,num_1,colour,num_0\n"
    "pos,yes,10,red,1.5\n"
    "neg,no,20,\"blue\",2.5\n"
    "neg,no,30,green,3.5\n"
    "pos,yes,40,blue,0.5\n";

RawTable ParseText(const std::string& text, const TableSchema& schema) {
  std::istringstream in(text);
  return ParseCsv(in, schema);
}

TEST_CASE("schema orders features numericals first") {
  const TableSchema s = SmallSchema();
  CHECK(s.num_numerical() == 2);
  CHECK(s.num_categorical() == 2);
  CHECK(s.encoded_width() == 2 + 3 + 2);
  CHECK(s.numerical_column(0) == 0);
  CHECK(s.numerical_column(1) == 2);
  CHECK(s.categorical_column(0) == 1);
  CHECK(s.categorical_column(1) == 3);
  CHECK(s.block_offset(0) == 2);
  CHECK(s.block_offset(1) == 5);
  CHECK(s.feature_column(1).name == "num_1");
  CHECK(s.feature_column(2).name == "colour");
}

TEST_CASE("schema round-trips through json and hashes stably") {
  const TableSchema s = SmallSchema();
  const TableSchema back = TableSchema::FromJson(s.ToJson());
  CHECK(back.Hash() == s.Hash());
  CHECK(HashToHex(s.Hash()).size() == 16);
  std::vector<Column> cols = s.columns();
  cols[1].categories.push_back("black");
  CHECK(TableSchema(cols, s.target()).Hash() != s.Hash());
}

TEST_CASE("schema rejects inconsistent declarations") {
  using C = std::vector<Column>;
  const TargetSpec t{"y", "1"};
  CHECK_THROWS_AS(TableSchema(C{}, t), DataError);
  CHECK_THROWS_AS(TableSchema(C{{"a", FeatureKind::kNumerical, {}}, {"a", FeatureKind::kNumerical, {}}}, t),
                  DataError);
  CHECK_THROWS_AS(TableSchema(C{{"c", FeatureKind::kCategorical, {"only"}}}, t), DataError);
  CHECK_THROWS_AS(TableSchema(C{{"c", FeatureKind::kCategorical, {"a", "a"}}}, t), DataError);
  CHECK_THROWS_AS(TableSchema(C{{"y", FeatureKind::kNumerical, {}}}, t), DataError);
  CHECK_THROWS_AS(TableSchema::FromJson(nlohmann::json::parse(
                      R"({"columns":[{"name":"a","kind":"ordinal"}],"target":{"column":"y","positive":"1"}})")),
                  DataError);
}

TEST_CASE("csv columns are matched by name") {
  const TableSchema s = SmallSchema();
  const RawTable t = ParseText(kCsv, s);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.labels == std::vector<int>{1, 0, 0, 1});
  CHECK(std::get<double>(t.rows[0].values[0]) == 1.5);
  CHECK(std::get<std::string>(t.rows[1].values[1]) == "blue");
  CHECK(std::get<double>(t.rows[2].values[2]) == 30.0);
  CHECK(std::get<std::string>(t.rows[3].values[3]) == "yes");
}

TEST_CASE("csv errors name the offending row or column") {
  const TableSchema s = SmallSchema();
  auto message = [&](const std::string& text) {
    try {
      ParseText(text, s);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("").find("empty") != std::string::npos);
  CHECK(message("label,flag,num_1,colour\n").find("num_0") != std::string::npos);
  CHECK(message("flag,num_1,colour,num_0\n").find("target") != std::string::npos);
  CHECK(message("label,flag,num_1,colour,num_0\npos,yes,abc,red,1\n").find("num_1") !=
        std::string::npos);
  CHECK(message("label,flag,num_1,colour,num_0\npos,yes,1,purple,1\n").find("purple") !=
        std::string::npos);
  CHECK(message("label,flag,num_1,colour,num_0\npos,yes,1,red\n").find("row") !=
        std::string::npos);
  CHECK(message("label,flag,num_1,colour,num_0\npos,yes,,red,1\n") != "no error");
}

TEST_CASE("csv written and read back is unchanged") {
  const TableSchema s = SmallSchema();
  const RawTable t = ParseText(kCsv, s);
  const auto dir = testing::TempDir("csv_roundtrip");
  WriteCsv(dir / "t.csv", s, t, "neg");
  const RawTable back = LoadCsv(dir / "t.csv", s);
  CHECK(back.rows == t.rows);
  CHECK(back.labels == t.labels);
  CHECK(FormatRawValue(RawValue(69.69)) == "69.69");
}

TEST_CASE("preprocessor scales numericals to [0,1] and one-hot encodes categories") {
  const TableSchema s = SmallSchema();
  const RawTable t = ParseText(kCsv, s);
  const Preprocessor p = Preprocessor::Fit(t, s);
  // num_0 in {1.5, 2.5, 3.5, 0.5}: min 0.5, max 3.5, mean 2, population std sqrt(1.25).
  CHECK(p.stats(0).min == 0.5);
  CHECK(p.stats(0).max == 3.5);
  CHECK(p.stats(0).mean == doctest::Approx(2.0));
  CHECK(p.stats(0).std == doctest::Approx(std::sqrt(1.25)));
  const std::vector<double> x = p.EncodeRow(t.rows[1]);
  const std::vector<double> want = {2.0 / 3.0, 1.0 / 3.0, 0, 0, 1, 1, 0};
  REQUIRE(x.size() == want.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(want[i]));
  CHECK(SatisfiesEncoding(s, x));
  const RawRow back = p.DecodeRow(x);
  CHECK(std::get<double>(back.values[0]) == doctest::Approx(2.5));
  CHECK(std::get<std::string>(back.values[1]) == "blue");
  CHECK(p.Standardize(0, 2.0 + std::sqrt(1.25)) == doctest::Approx(1.0));
  CHECK(p.RawNumeric(0, 2.0) == 3.5);  // clipped
}

TEST_CASE("decode rejects blocks that are not one-hot") {
  const TableSchema s = SmallSchema();
  const Preprocessor p = Preprocessor::Fit(ParseText(kCsv, s), s);
  CHECK_THROWS_AS(p.DecodeRow(std::vector<double>{0.1, 0.2, 0.5, 0.5, 0, 1, 0}), ContractError);
  CHECK_THROWS_AS(p.DecodeRow(std::vector<double>{0.1, 0.2, 0, 0, 0, 1, 0}), ContractError);
  CHECK_THROWS_AS(p.DecodeRow(std::vector<double>{0.1, 0.2}), ShapeError);
}

TEST_CASE("constant numerical columns encode to zero with unit std") {
  const TableSchema s = SmallSchema();
  RawTable t = ParseText(kCsv, s);
  for (RawRow& r : t.rows) r.values[0] = 7.0;
  const Preprocessor p = Preprocessor::Fit(t, s);
  CHECK(p.stats(0).constant);
  CHECK(p.stats(0).std == 1.0);
  CHECK(p.EncodeRow(t.rows[0])[0] == 0.0);
  CHECK(p.RawNumeric(0, 0.8) == 7.0);
}

TEST_CASE("preprocessor round-trips through json") {
  const TableSchema s = SmallSchema();
  const RawTable t = ParseText(kCsv, s);
  const Preprocessor p = Preprocessor::Fit(t, s);
  const Preprocessor q = Preprocessor::FromJson(p.ToJson());
  for (const RawRow& r : t.rows) CHECK(q.EncodeRow(r) == p.EncodeRow(r));
}

TEST_CASE("encoding invariants detect violations") {
  const TableSchema s = SmallSchema();
  CHECK(SatisfiesEncoding(s, std::vector<double>{0, 1, 0, 1, 0, 0, 1}));
  CHECK_FALSE(SatisfiesEncoding(s, std::vector<double>{1.01, 1, 0, 1, 0, 0, 1}));
  CHECK_FALSE(SatisfiesEncoding(s, std::vector<double>{0, 1, 0, 1, 1, 0, 1}));
  CHECK_FALSE(SatisfiesEncoding(s, std::vector<double>{0, 1, 0, 0.5, 0.5, 0, 1}));
  CHECK_FALSE(SatisfiesEncoding(s, std::vector<double>{0, 1}));
}

TEST_CASE("split is a seeded partition with a train cap") {
  const TrainTestSplit a = SplitRows(100, 0.25, 1000, 3);
  const TrainTestSplit b = SplitRows(100, 0.25, 1000, 3);
  CHECK(a.test == b.test);
  CHECK(a.train == b.train);
  CHECK(a.test.size() == 25);
  CHECK(a.train.size() == 75);
  std::set<std::size_t> all(a.test.begin(), a.test.end());
  all.insert(a.train.begin(), a.train.end());
  CHECK(all.size() == 100);
  CHECK(SplitRows(100, 0.25, 1000, 4).test != a.test);
  const TrainTestSplit capped = SplitRows(100, 0.25, 10, 3);
  CHECK(capped.train.size() == 10);
  CHECK(capped.test == a.test);
  CHECK_THROWS_AS(SplitRows(10, 1.0, 10, 0), ConfigError);
}

TEST_CASE("test selection keeps only negatives and reports shortage") {
  std::vector<std::size_t> cand(50);
  for (std::size_t i = 0; i < 50; ++i) cand[i] = i;
  auto even = [](std::size_t i) { return i % 2 == 0; };
  const TestSelection s = SelectTestPool(cand, even, 10, 9);
  CHECK(s.indices.size() == 10);
  CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
  for (std::size_t i : s.indices) CHECK(i % 2 == 0);
  CHECK_FALSE(s.shortage());
  CHECK(SelectTestPool(cand, even, 10, 9).indices == s.indices);
  const TestSelection short_pool = SelectTestPool(cand, even, 40, 9);
  CHECK(short_pool.indices.size() == 25);
  CHECK(short_pool.eligible == 25);
  CHECK(short_pool.shortage());
  const TestSelection none = SelectTestPool(cand, [](std::size_t) { return false; }, 5, 9);
  CHECK(none.indices.empty());
}

TEST_CASE("synthetic data is reproducible and follows its declared schema") {
  SynthSpec spec;
  spec.rows = 300;
  spec.seed = 4;
  const SynthData a = GenerateSynthetic(spec);
  const SynthData b = GenerateSynthetic(spec);
  CHECK(a.table.rows == b.table.rows);
  CHECK(a.table.labels == b.table.labels);
  CHECK(a.schema.num_numerical() == 3);
  CHECK(a.schema.num_categorical() == 3);
  CHECK(a.schema.target().column == "label");
  const auto dir = testing::TempDir("synth_write");
  WriteSynthetic(a, dir);
  const TableSchema s = TableSchema::Load(dir / "schema.json");
  CHECK(s.Hash() == a.schema.Hash());
  const RawTable t = LoadCsv(dir / "data.csv", s);
  CHECK(t.rows == a.table.rows);
  CHECK(t.labels == a.table.labels);
  spec.signal_categorical = {5};
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
}

TEST_CASE("synthetic label depends on signal features only") {
  // Label from cat_0 alone: the positive rate must differ sharply across
  // cat_0 and not at all (beyond sampling error) across num_0 or cat_1.
  SynthSpec spec;
  spec.rows = 20000;
  spec.seed = 8;
  spec.categories = 4;
  spec.signal_numerical = {};
  spec.signal_categorical = {0};
  spec.sharpness = 30.0;
  const SynthData d = GenerateSynthetic(spec);
  const TableSchema& s = d.schema;
  const std::size_t num0 = s.numerical_column(0);
  const std::size_t cat0 = s.categorical_column(0);
  const std::size_t cat1 = s.categorical_column(1);
  auto rate = [&](auto pred) {
    double pos = 0, n = 0;
    for (std::size_t r = 0; r < d.table.rows.size(); ++r) {
      if (!pred(d.table.rows[r])) continue;
      n += 1;
      pos += d.table.labels[r];
    }
    return std::pair{pos / n, n};
  };
  auto is_cat = [](std::size_t col, const std::string& v) {
    return [=](const RawRow& r) { return std::get<std::string>(r.values[col]) == v; };
  };
  CHECK(rate(is_cat(cat0, "c0")).first < 0.01);
  CHECK(rate(is_cat(cat0, "c3")).first > 0.99);
  // Two-proportion z-score for the non-signal splits.
  auto z = [](std::pair<double, double> a, std::pair<double, double> b) {
    const double p = (a.first * a.second + b.first * b.second) / (a.second + b.second);
    const double se = std::sqrt(p * (1 - p) * (1 / a.second + 1 / b.second));
    return std::abs(a.first - b.first) / se;
  };
  auto high = [&](const RawRow& r) { return std::get<double>(r.values[num0]) > 50.0; };
  auto low = [&](const RawRow& r) { return std::get<double>(r.values[num0]) <= 50.0; };
  CHECK(z(rate(high), rate(low)) < 4.0);
  CHECK(z(rate(is_cat(cat1, "c0")), rate(is_cat(cat1, "c3"))) < 4.0);
  const auto [p_c1, n_c1] = rate(is_cat(cat0, "c1"));
  CHECK(n_c1 == doctest::Approx(5000).epsilon(0.06));
  CHECK(p_c1 < 0.01);
}

}  // namespace
}  // namespace tabcf
