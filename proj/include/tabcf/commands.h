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
#ifndef TABCF_COMMANDS_H_
#define TABCF_COMMANDS_H_

// Command implementations behind the CLI verbs. Every output lands in
// cfg.out; files carry no timestamps, so identical (config, seed) runs in
// single-worker mode reproduce them byte for byte.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tabcf/cf_result.h"
#include "tabcf/classifier.h"
#include "tabcf/config.h"
#include "tabcf/dataset.h"
#include "tabcf/metrics.h"
#include "tabcf/synth.h"
#include "tabcf/vae.h"

namespace tabcf {

// Data side of a run: the schema, the raw table, the seeded split and the
// preprocessor fitted on the training rows.
struct Workspace {
  RunConfig cfg;
  TableSchema schema;
  RawTable table;
  TrainTestSplit split;
  Preprocessor pre;

  Tensor Encode(std::span<const std::size_t> rows) const;
  std::vector<int> Labels(std::span<const std::size_t> rows) const;
};

Workspace LoadWorkspace(const RunConfig& cfg);

struct Models {
  VaeModel vae;
  Classifier clf;
};

// Reads out/model.ckpt; DataError when missing or trained on another schema.
Models LoadModels(const RunConfig& cfg, const TableSchema& schema);

void CmdTrain(const RunConfig& cfg, std::ostream& log);

// Negative-class test instances shared by all methods, cached in
// out/test_selection.json and keyed by (seed, schema hash, n_test).
TestSelection SharedSelection(const Workspace& ws, const Classifier& clf);

// method: tabcf, wachter or dice_like. Writes out/results_<method>.jsonl.
// An empty eligible pool writes a header-only file, then throws DataError.
void CmdGenerate(const RunConfig& cfg, const std::string& method, std::ostream& log);

// Metrics for each results file (validity recomputed with the trained
// classifier), written to out/report.{json,txt}. With report_files, rows
// from earlier report.json files are averaged per method instead.
std::vector<MetricsReport> CmdEvaluate(const RunConfig& cfg,
                                       const std::vector<std::string>& results_files,
                                       const std::vector<std::string>& report_files,
                                       std::ostream& log);

inline constexpr double kAblationValues[5] = {0.0, 0.25, 0.5, 0.75, 1.0};

struct AblationCell {
  double lambda_input = 0.0;
  double lambda_latent = 0.0;
  std::size_t n = 0;
  std::size_t n_val = 0;
  double validity = 0.0;
  std::optional<double> input_l1;  // mean encoded L1 over valid CFs
  double median_latent_distance = 0.0;
  std::optional<double> sparsity_cat;
  std::optional<double> sparsity_num;
  std::optional<double> proximity_num;
};

// Row-major over lambda_input, then lambda_latent; always 25 cells.
std::vector<AblationCell> RunAblation(const VaeModel& vae, const Classifier& clf,
                                      const Preprocessor& pre, const Tensor& rows,
                                      std::span<const std::size_t> ids,
                                      const CFConfig& base, double eps_num,
                                      std::size_t workers, std::ostream* log = nullptr);

std::string FormatAblation(const std::vector<AblationCell>& cells);

// Writes out/ablation.{json,txt}.
std::vector<AblationCell> CmdAblate(const RunConfig& cfg, std::ostream& log);

// Needs out/results_tabcf.jsonl and at least one baseline results file.
// Writes out/bias_report.{json,txt} and out/utilization.svg.
std::vector<MetricsReport> CmdBiasReport(const RunConfig& cfg, std::ostream& log);

// Writes data.csv, schema.json and synth_spec.json into out_dir.
void CmdSynth(const SynthSpec& spec, const std::filesystem::path& out_dir,
              std::ostream& log);

}  // namespace tabcf

#endif  // TABCF_COMMANDS_H_
