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
#include "tabcf/cf_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tabcf/errors.h"

namespace tabcf {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "tabcf-results";
constexpr int kVersion = 1;

Json RawToJson(const TableSchema& schema, const RawRow& row) {
  Json out = Json::object();
  for (std::size_t c = 0; c < row.values.size(); ++c) {
    const std::string& name = schema.columns()[c].name;
    std::visit([&](const auto& v) { out[name] = v; }, row.values[c]);
  }
  return out;
}

const char* StatusName(CfStatus s) {
  return s == CfStatus::kAlreadyTarget ? "already_target" : "ok";
}

}  // namespace

std::string ResultsToJsonl(const ResultsHeader& header,
                           const std::vector<CFResult>& results,
                           const Preprocessor& pre) {
  std::ostringstream out;
  Json h;
  h["record"] = "header";
  h["format"] = kFormat;
  h["version"] = kVersion;
  h["method"] = header.method;
  h["schema_hash"] = HashToHex(header.schema_hash);
  h["dataset"] = header.dataset;
  h["seed"] = header.seed;
  h["requested"] = header.requested;
  h["eligible"] = header.eligible;
  out << h.dump() << '\n';
  for (const CFResult& r : results) {
    Json j;
    j["record"] = "instance";
    j["instance_id"] = r.instance_id;
    j["method"] = r.method;
    j["status"] = StatusName(r.status);
    j["valid"] = r.valid;
    j["steps"] = r.steps;
    j["logit"] = r.logit;
    j["latent_distance"] = r.latent_distance;
    j["initial_loss"] = r.initial_loss;
    j["noise_seed"] = r.noise_seed;
    j["loss"] = Json{{"validity", r.loss.validity},
                     {"input_proximity", r.loss.input_proximity},
                     {"latent_proximity", r.loss.latent_proximity},
                     {"regularization", r.loss.regularization},
                     {"total", r.loss.total}};
    j["original_raw"] = RawToJson(pre.schema(), pre.DecodeRow(r.original));
    j["counterfactual_raw"] = RawToJson(pre.schema(), pre.DecodeRow(r.counterfactual));
    j["original"] = r.original;
    j["counterfactual"] = r.counterfactual;
    out << j.dump() << '\n';
  }
  return out.str();
}

void WriteResults(const std::filesystem::path& path, const ResultsHeader& header,
                  const std::vector<CFResult>& results, const Preprocessor& pre) {
  const std::string text = ResultsToJsonl(header, results, pre);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write results " + path.string());
  f << text;
  if (!f) throw DataError("failed writing results " + path.string());
}

ResultsFile ReadResults(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("missing results file " + path.string());
  ResultsFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const Json j = Json::parse(line);
      const std::string kind = j.at("record").get<std::string>();
      if (!have_header) {
        if (kind != "header" || j.at("format").get<std::string>() != kFormat) {
          throw DataError(where + ": not a results file header");
        }
        if (j.at("version").get<int>() != kVersion) {
          throw DataError(where + ": unsupported results version");
        }
        ResultsHeader& h = file.header;
        h.method = j.at("method").get<std::string>();
        h.schema_hash = std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
        h.dataset = j.at("dataset").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.requested = j.at("requested").get<std::size_t>();
        h.eligible = j.at("eligible").get<std::size_t>();
        have_header = true;
        continue;
      }
      if (kind != "instance") throw DataError(where + ": unexpected record " + kind);
      CFResult r;
      r.instance_id = j.at("instance_id").get<std::size_t>();
      r.method = j.at("method").get<std::string>();
      const std::string status = j.at("status").get<std::string>();
      if (status == "already_target") {
        r.status = CfStatus::kAlreadyTarget;
      } else if (status != "ok") {
        throw DataError(where + ": unknown status " + status);
      }
      r.valid = j.at("valid").get<bool>();
      r.steps = j.at("steps").get<std::size_t>();
      r.logit = j.at("logit").get<double>();
      r.latent_distance = j.at("latent_distance").get<double>();
      r.initial_loss = j.at("initial_loss").get<double>();
      r.noise_seed = j.at("noise_seed").get<std::uint64_t>();
      const Json& l = j.at("loss");
      r.loss.validity = l.at("validity").get<double>();
      r.loss.input_proximity = l.at("input_proximity").get<double>();
      r.loss.latent_proximity = l.at("latent_proximity").get<double>();
      r.loss.regularization = l.at("regularization").get<double>();
      r.loss.total = l.at("total").get<double>();
      r.original = j.at("original").get<std::vector<double>>();
      r.counterfactual = j.at("counterfactual").get<std::vector<double>>();
      if (r.original.size() != r.counterfactual.size()) {
        throw DataError(where + ": original and counterfactual widths differ");
      }
      file.results.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const std::invalid_argument&) {
      throw DataError(where + ": bad schema_hash");
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty results file");
  return file;
}

}  // namespace tabcf
