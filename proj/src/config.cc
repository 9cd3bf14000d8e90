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
#include "tabcf/config.h"

#include <fstream>
#include <type_traits>

#include "tabcf/errors.h"
#include "tabcf/rng.h"

namespace tabcf {

static_assert(std::is_same_v<std::size_t, std::uint64_t>,
              "config fields assume a 64-bit std::size_t");

namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void FromJsonValue(const ConfigField& f, const nlohmann::json& v) {
  std::visit(Overloaded{
                 [&](double* p) {
                   if (!v.is_number()) throw ConfigError(f.name + ": expected a number");
                   *p = v.get<double>();
                 },
                 [&](std::uint64_t* p) {
                   if (!v.is_number_unsigned()) {
                     throw ConfigError(f.name + ": expected a non-negative integer");
                   }
                   *p = v.get<std::uint64_t>();
                 },
                 [&](bool* p) {
                   if (!v.is_boolean()) throw ConfigError(f.name + ": expected true or false");
                   *p = v.get<bool>();
                 },
                 [&](std::string* p) {
                   if (!v.is_string()) throw ConfigError(f.name + ": expected a string");
                   *p = v.get<std::string>();
                 },
             },
             f.ptr);
}

std::uint64_t ParseUnsigned(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (text.empty() || text[0] == '-' || text[0] == '+') throw std::invalid_argument(text);
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(name + ": expected a non-negative integer, got '" + text + "'");
  }
  if (used != text.size()) {
    throw ConfigError(name + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

const ConfigField& FindField(const std::vector<ConfigField>& fields, const std::string& name) {
  for (const ConfigField& f : fields) {
    if (f.name == name) return f;
  }
  throw ConfigError("unknown config field '" + name + "'");
}

}  // namespace

void RunConfig::Validate() const {
  if (data.csv.empty()) throw ConfigError("data.csv is required");
  if (data.schema.empty()) throw ConfigError("data.schema is required");
  if (out.empty()) throw ConfigError("out must not be empty");
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    throw ConfigError("split.test_fraction must be in (0, 1)");
  }
  if (split.train_cap < 2) throw ConfigError("split.train_cap must be >= 2");
  if (split.n_test == 0) throw ConfigError("split.n_test must be >= 1");
  if (!(metrics.eps_num >= 0.0)) throw ConfigError("metrics.eps_num must be >= 0");
  if (runtime.workers == 0) throw ConfigError("runtime.workers must be >= 1");
  if (ablation.instances == 0) throw ConfigError("ablation.instances must be >= 1");
  classifier.Validate();
  vae_arch.Validate();
  vae.Validate();
  cf.Validate();
  baseline.Validate();
}

void RunConfig::DeriveSeeds() {
  classifier.seed = DeriveSeed(seed, 1);
  vae.seed = DeriveSeed(seed, 2);
  cf.seed = DeriveSeed(seed, 3);
}

std::uint64_t RunConfig::split_seed() const { return DeriveSeed(seed, 4); }
std::uint64_t RunConfig::selection_seed() const { return DeriveSeed(seed, 5); }

std::vector<ConfigField> ConfigFields(RunConfig& c) {
  return {
      {"seed", &c.seed},
      {"out", &c.out},
      {"data.csv", &c.data.csv},
      {"data.schema", &c.data.schema},
      {"data.name", &c.data.name},
      {"split.test_fraction", &c.split.test_fraction},
      {"split.train_cap", &c.split.train_cap},
      {"split.n_test", &c.split.n_test},
      {"classifier.hidden", &c.classifier.hidden},
      {"classifier.epochs", &c.classifier.epochs},
      {"classifier.learning_rate", &c.classifier.learning_rate},
      {"classifier.batch_size", &c.classifier.batch_size},
      {"vae.layers", &c.vae_arch.layers},
      {"vae.heads", &c.vae_arch.heads},
      {"vae.token_dim", &c.vae_arch.token_dim},
      {"vae.ffn_dim", &c.vae_arch.ffn_dim},
      {"vae.latent_dim", &c.vae_arch.latent_dim},
      {"vae.epochs", &c.vae.epochs},
      {"vae.beta_max", &c.vae.beta_max},
      {"vae.beta_min", &c.vae.beta_min},
      {"vae.learning_rate", &c.vae.learning_rate},
      {"vae.batch_size", &c.vae.batch_size},
      {"vae.tau", &c.vae.tau},
      {"vae.grad_clip", &c.vae.grad_clip},
      {"cf.lambda_input", &c.cf.lambda_input},
      {"cf.lambda_latent", &c.cf.lambda_latent},
      {"cf.max_steps", &c.cf.max_steps},
      {"cf.learning_rate", &c.cf.learning_rate},
      {"cf.tolerance", &c.cf.tolerance},
      {"cf.window", &c.cf.window},
      {"cf.tau", &c.cf.tau},
      {"cf.resample_noise", &c.cf.resample_noise},
      {"baseline.distance_weight", &c.baseline.distance_weight},
      {"baseline.reg_weight", &c.baseline.reg_weight},
      {"baseline.max_steps", &c.baseline.max_steps},
      {"baseline.learning_rate", &c.baseline.learning_rate},
      {"baseline.tolerance", &c.baseline.tolerance},
      {"baseline.window", &c.baseline.window},
      {"metrics.eps_num", &c.metrics.eps_num},
      {"runtime.workers", &c.runtime.workers},
      {"ablation.instances", &c.ablation.instances},
  };
}

void SetConfigField(RunConfig& cfg, const std::string& name, const std::string& text) {
  const std::vector<ConfigField> fields = ConfigFields(cfg);
  const ConfigField& f = FindField(fields, name);
  std::visit(Overloaded{
                 [&](double* p) {
                   std::size_t used = 0;
                   try {
                     *p = std::stod(text, &used);
                   } catch (const std::exception&) {
                     used = 0;
                   }
                   if (used == 0 || used != text.size()) {
                     throw ConfigError(name + ": expected a number, got '" + text + "'");
                   }
                 },
                 [&](std::uint64_t* p) { *p = ParseUnsigned(name, text); },
                 [&](bool* p) {
                   if (text == "true" || text == "1") {
                     *p = true;
                   } else if (text == "false" || text == "0") {
                     *p = false;
                   } else {
                     throw ConfigError(name + ": expected true or false, got '" + text + "'");
                   }
                 },
                 [&](std::string* p) { *p = text; },
             },
             f.ptr);
}

RunConfig ConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  const std::vector<ConfigField> fields = ConfigFields(cfg);
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) {
        FromJsonValue(FindField(fields, key + "." + sub), v);
      }
    } else {
      FromJsonValue(FindField(fields, key), value);
    }
  }
  cfg.DeriveSeeds();
  return cfg;
}

nlohmann::ordered_json ConfigToJson(const RunConfig& cfg) {
  RunConfig copy = cfg;
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const ConfigField& f : ConfigFields(copy)) {
    const auto dot = f.name.find('.');
    nlohmann::ordered_json& slot =
        dot == std::string::npos ? out[f.name] : out[f.name.substr(0, dot)][f.name.substr(dot + 1)];
    std::visit([&](auto* p) { slot = *p; }, f.ptr);
  }
  return out;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig cfg = ConfigFromJson(j);
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).lexically_normal().string();
    }
  };
  resolve(cfg.data.csv);
  resolve(cfg.data.schema);
  resolve(cfg.out);
  return cfg;
}

SynthSpec SynthSpecFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  SynthSpec s;
  for (const auto& [key, v] : j.items()) {
    const std::string name = "synth." + key;
    auto unsigned_value = [&]() {
      if (!v.is_number_unsigned()) throw ConfigError(name + ": expected a non-negative integer");
      return v.get<std::uint64_t>();
    };
    auto index_list = [&]() {
      if (!v.is_array()) throw ConfigError(name + ": expected a list of indices");
      std::vector<std::size_t> out;
      for (const auto& e : v) {
        if (!e.is_number_unsigned()) throw ConfigError(name + ": expected a list of indices");
        out.push_back(e.get<std::size_t>());
      }
      return out;
    };
    auto number = [&]() {
      if (!v.is_number()) throw ConfigError(name + ": expected a number");
      return v.get<double>();
    };
    if (key == "numerical") {
      s.num_numerical = unsigned_value();
    } else if (key == "categorical") {
      s.num_categorical = unsigned_value();
    } else if (key == "categories") {
      s.categories = unsigned_value();
    } else if (key == "rows") {
      s.rows = unsigned_value();
    } else if (key == "seed") {
      s.seed = unsigned_value();
    } else if (key == "signal_numerical") {
      s.signal_numerical = index_list();
    } else if (key == "signal_categorical") {
      s.signal_categorical = index_list();
    } else if (key == "sharpness") {
      s.sharpness = number();
    } else if (key == "noise") {
      s.noise = number();
    } else {
      throw ConfigError("unknown config field '" + name + "'");
    }
  }
  return s;
}

nlohmann::ordered_json SynthSpecToJson(const SynthSpec& s) {
  nlohmann::ordered_json j;
  j["numerical"] = s.num_numerical;
  j["categorical"] = s.num_categorical;
  j["categories"] = s.categories;
  j["rows"] = s.rows;
  j["seed"] = s.seed;
  j["signal_numerical"] = s.signal_numerical;
  j["signal_categorical"] = s.signal_categorical;
  j["sharpness"] = s.sharpness;
  j["noise"] = s.noise;
  return j;
}

}  // namespace tabcf
