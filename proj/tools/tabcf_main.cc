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
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tabcf/commands.h"
#include "tabcf/config.h"
#include "tabcf/errors.h"

namespace {

using tabcf::RunConfig;

std::vector<std::size_t> ParseIndexList(const std::string& name, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item[0] == '-') {
      throw tabcf::ConfigError(name + ": expected comma-separated indices, got '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::map<std::string, std::string> overrides;
  std::optional<std::string> epochs_alias;
};

// Registers one --<section.field> option per config field.
void AddOverrides(CLI::App* cmd, RunOptions& opts) {
  RunConfig defaults;
  for (const tabcf::ConfigField& f : tabcf::ConfigFields(defaults)) {
    if (f.name == "seed" || f.name == "out") continue;
    cmd->add_option_function<std::string>(
        "--" + f.name, [&opts, name = f.name](const std::string& v) { opts.overrides[name] = v; },
        "override " + f.name);
  }
  cmd->add_option("--epochs", opts.epochs_alias, "alias for --vae.epochs");
}

RunConfig BuildConfig(const RunOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : tabcf::LoadConfig(opts.config_path);
  std::vector<std::string> order;
  RunConfig probe;
  for (const tabcf::ConfigField& f : tabcf::ConfigFields(probe)) order.push_back(f.name);
  for (const std::string& name : order) {
    if (auto it = opts.overrides.find(name); it != opts.overrides.end()) {
      tabcf::SetConfigField(cfg, name, it->second);
    }
  }
  if (opts.epochs_alias) tabcf::SetConfigField(cfg, "vae.epochs", *opts.epochs_alias);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out = *opts.out;
  cfg.DeriveSeeds();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations for mixed-type tabular data"};
  app.require_subcommand(1);
  RunOptions opts;
  app.add_option("--config", opts.config_path, "run configuration (JSON)");
  app.add_option("--seed", opts.seed, "global seed");
  app.add_option("--out", opts.out, "output directory");
  app.fallthrough();

  CLI::App* train = app.add_subcommand("train", "train the classifier and the VAE");
  AddOverrides(train, opts);

  CLI::App* generate = app.add_subcommand("generate", "generate counterfactuals");
  std::string method = "tabcf";
  generate->add_option("--method", method, "tabcf, wachter or dice_like")
      ->check(CLI::IsMember({"tabcf", "wachter", "dice_like"}));
  AddOverrides(generate, opts);

  CLI::App* evaluate = app.add_subcommand("evaluate", "compute metrics for result files");
  std::vector<std::string> results_files;
  std::vector<std::string> report_files;
  evaluate->add_option("results", results_files, "results_<method>.jsonl files");
  evaluate->add_option("--reports", report_files, "report.json files to average per method");
  AddOverrides(evaluate, opts);

  CLI::App* ablate = app.add_subcommand("ablate", "5x5 lambda grid");
  AddOverrides(ablate, opts);

  CLI::App* bias = app.add_subcommand("bias-report", "feature utilization comparison");
  AddOverrides(bias, opts);

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset and schema");
  std::string spec_path;
  std::optional<std::size_t> rows, numerical, categorical, categories;
  std::optional<std::string> signal_num, signal_cat;
  std::optional<double> sharpness, noise;
  synth->add_option("--spec", spec_path, "synthetic spec (JSON)");
  synth->add_option("--rows", rows);
  synth->add_option("--numerical", numerical);
  synth->add_option("--categorical", categorical);
  synth->add_option("--categories", categories);
  synth->add_option("--signal-numerical", signal_num, "comma-separated indices");
  synth->add_option("--signal-categorical", signal_cat, "comma-separated indices");
  synth->add_option("--sharpness", sharpness);
  synth->add_option("--noise", noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) {
      tabcf::SynthSpec spec;
      if (!spec_path.empty()) {
        std::ifstream f(spec_path);
        if (!f) throw tabcf::ConfigError("cannot read synth spec " + spec_path);
        spec = tabcf::SynthSpecFromJson(nlohmann::json::parse(f));
      }
      if (rows) spec.rows = *rows;
      if (numerical) spec.num_numerical = *numerical;
      if (categorical) spec.num_categorical = *categorical;
      if (categories) spec.categories = *categories;
      if (signal_num) spec.signal_numerical = ParseIndexList("--signal-numerical", *signal_num);
      if (signal_cat) {
        spec.signal_categorical = ParseIndexList("--signal-categorical", *signal_cat);
      }
      if (sharpness) spec.sharpness = *sharpness;
      if (noise) spec.noise = *noise;
      if (opts.seed) spec.seed = *opts.seed;
      if (!opts.out) throw tabcf::ConfigError("synth requires --out");
      tabcf::CmdSynth(spec, *opts.out, std::cout);
      return 0;
    }
    const RunConfig cfg = BuildConfig(opts);
    if (train->parsed()) {
      tabcf::CmdTrain(cfg, std::cout);
    } else if (generate->parsed()) {
      tabcf::CmdGenerate(cfg, method, std::cout);
    } else if (evaluate->parsed()) {
      tabcf::CmdEvaluate(cfg, results_files, report_files, std::cout);
    } else if (ablate->parsed()) {
      tabcf::CmdAblate(cfg, std::cout);
    } else if (bias->parsed()) {
      tabcf::CmdBiasReport(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
