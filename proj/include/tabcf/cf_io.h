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
#ifndef TABCF_CF_IO_H_
#define TABCF_CF_IO_H_

// Counterfactual result files are line-delimited JSON. The first line is a
// header record:
//   {"record":"header","format":"tabcf-results","version":1,"method":...,
//    "schema_hash":"<16 hex>","dataset":...,"seed":...,"requested":N,
//    "eligible":M}
// followed by one record per instance, in selection order:
//   {"record":"instance","instance_id":..,"status":"ok"|"already_target",
//    "valid":..,"steps":..,"logit":..,"latent_distance":..,
//    "initial_loss":..,"noise_seed":..,
//    "loss":{"validity","input_proximity","latent_proximity",
//            "regularization","total"},
//    "original_raw":{column:value,...},"counterfactual_raw":{...},
//    "original":[encoded...],"counterfactual":[encoded...]}
// Doubles are written with round-trip precision, so a file read back and
// written again is byte-identical.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tabcf/cf_result.h"
#include "tabcf/dataset.h"

namespace tabcf {

struct ResultsHeader {
  std::string method;
  std::uint64_t schema_hash = 0;
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::size_t eligible = 0;
};

struct ResultsFile {
  ResultsHeader header;
  std::vector<CFResult> results;
};

std::string ResultsToJsonl(const ResultsHeader& header,
                           const std::vector<CFResult>& results,
                           const Preprocessor& pre);
void WriteResults(const std::filesystem::path& path, const ResultsHeader& header,
                  const std::vector<CFResult>& results, const Preprocessor& pre);
// DataError on a missing file, malformed line (with its line number), or a
// header whose format or version is not recognised.
ResultsFile ReadResults(const std::filesystem::path& path);

}  // namespace tabcf

#endif  // TABCF_CF_IO_H_
