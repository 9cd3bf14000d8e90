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
#ifndef TABCF_CONFIG_H_
#define TABCF_CONFIG_H_

// Run configuration. The file is JSON with optional top-level "seed" and
// "out" plus the sections below; every field is optional and defaults as
// listed in README.md. Unknown fields and type mismatches are ConfigErrors
// naming the dotted field ("vae.epochs"). Relative data paths and "out" in a
// file resolve against the file's directory.
//
// Component seeds are not configurable: they derive from the global seed so
// that (config, seed) alone determines every output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabcf/cf_baselines.h"
#include "tabcf/cf_latent.h"
#include "tabcf/classifier.h"
#include "tabcf/synth.h"
#include "tabcf/vae.h"

namespace tabcf {

struct DataConfig {
  std::string csv;
  std::string schema;
  std::string name = "dataset";
};

struct SplitConfig {
  double test_fraction = 0.25;
  std::size_t train_cap = 30000;
  std::size_t n_test = 1000;  // counterfactual instances per method
};

struct MetricsConfig {
  double eps_num = 1e-4;
};

struct RuntimeConfig {
  std::size_t workers = 1;
};

struct AblationConfig {
  std::size_t instances = 100;  // leading instances of the shared selection
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  DataConfig data;
  SplitConfig split;
  ClassifierConfig classifier;
  VaeArch vae_arch;
  VaeTrainConfig vae;
  CFConfig cf;
  BaselineConfig baseline;
  MetricsConfig metrics;
  RuntimeConfig runtime;
  AblationConfig ablation;

  void Validate() const;
  // Overwrites component seeds from the global seed.
  void DeriveSeeds();
  std::uint64_t split_seed() const;
  std::uint64_t selection_seed() const;
};

// Counts and seeds share one alternative; std::size_t is 64-bit here.
using FieldPtr = std::variant<double*, std::uint64_t*, bool*, std::string*>;

struct ConfigField {
  std::string name;  // dotted, e.g. "cf.lambda_input"
  FieldPtr ptr;
};

// Every settable field of cfg in a fixed order.
std::vector<ConfigField> ConfigFields(RunConfig& cfg);

// Parses text into the named field; ConfigError names the field on failure.
void SetConfigField(RunConfig& cfg, const std::string& name, const std::string& text);

RunConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::ordered_json ConfigToJson(const RunConfig& cfg);
RunConfig LoadConfig(const std::filesystem::path& path);

SynthSpec SynthSpecFromJson(const nlohmann::json& j);
nlohmann::ordered_json SynthSpecToJson(const SynthSpec& spec);

}  // namespace tabcf

#endif  // TABCF_CONFIG_H_
