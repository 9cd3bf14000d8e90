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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. The desk-scale runs train real models and
// take several minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grad_cases.h"
#include "metric_oracle.h"
#include "tabcf/cf_baselines.h"
#include "tabcf/cf_io.h"
#include "tabcf/commands.h"
#include "tabcf/config.h"
#include "tabcf/dataset.h"
#include "tabcf/synth.h"
#include "tabcf/tokenizer.h"
#include "tabcf/vae.h"
#include "test_support.h"

namespace tabcf {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string Fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

class Reporter {
 public:
  void Line(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures_ += pass ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

// ---------------------------------------------------------------------------
// Property criteria

void GradientCriterion(Reporter& rep) {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  auto take = [&](const testing::GradCheck& g, const std::string& label) {
    checked += g.checked;
    if (g.max_rel_error > worst || !std::isfinite(g.max_rel_error)) {
      worst = g.max_rel_error;
      where = label + " " + g.worst;
    }
  };
  const auto cases = testing::PrimitiveCases();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& pc : cases) {
      Rng rng(seed);
      take(testing::CheckGradients(pc.inputs(rng), pc.build), pc.name);
    }
    take(testing::EncoderKlPipeline(seed), "x->tokenize->encoder->KL");
    take(testing::DecoderHingePipeline(seed), "z->decoder->detokenize->f->hinge");
  }
  const double secs = Seconds(start);
  rep.Line("gradients", worst <= 1e-4 && secs < 60.0,
           std::to_string(cases.size()) + " primitives + 2 pipelines x 20 seeds, " +
               std::to_string(checked) + " entries, max rel error " + Fmt(worst, 3) +
               " (<= 1e-4), " + Fmt(secs, 3) + " s (< 60)" +
               (worst > 1e-4 ? "; worst " + where : ""));
}

void ConstraintCriterion(Reporter& rep) {
  SynthSpec spec;
  spec.rows = 10;
  spec.categories = 4;
  const std::vector<TableSchema> schemas = {testing::SmallSchema(),
                                            GenerateSynthetic(spec).schema};
  std::size_t decodes = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TableSchema& s = schemas[seed % schemas.size()];
    VaeArch arch;
    arch.layers = 1 + seed % 2;
    const VaeModel vae = VaeModel::Init(s, arch, seed);
    Rng rng(1000 + seed);
    for (int d = 0; d < 1000; ++d) {
      std::vector<double> z(vae.latent_size());
      const double spread = rng.Uniform(0.1, 20.0);
      for (double& v : z) v = spread * rng.Normal();
      const double tau = rng.Uniform(0.05, 5.0);
      const auto x = vae.DecodeHard(z, GumbelNoise::Draw(s, 1, rng), tau);
      ++decodes;
      violations += SatisfiesEncoding(s, x) ? 0 : 1;
    }
  }
  rep.Line("constraints", violations == 0 && decodes == 10000,
           std::to_string(decodes) + " random decodes, " + std::to_string(violations) +
               " violations");
}

std::vector<double> Softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= s;
  return p;
}

void GumbelCriterion(Reporter& rep) {
  // Gumbel-max: argmax(logits + g) is distributed as softmax(logits).
  double freq_err = 0.0;
  Rng rng(2024);
  for (const std::vector<double>& logits :
       {std::vector<double>{1.0, -0.5, 0.3, 2.0}, std::vector<double>{0.0, 0.0, 0.0},
        std::vector<double>{-2.0, 3.0, 0.5, 0.5, -1.0}}) {
    const std::vector<double> want = Softmax(logits);
    std::vector<double> counts(logits.size(), 0.0);
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) {
      const GumbelSample s = GumbelSoftmax(logits, 1.0, rng);
      counts[std::max_element(s.hard.begin(), s.hard.end()) - s.hard.begin()] += 1.0;
    }
    for (std::size_t c = 0; c < logits.size(); ++c) {
      freq_err = std::max(freq_err, std::abs(counts[c] / draws - want[c]));
    }
  }

  double simplex_err = 0.0;
  bool nonnegative = true;
  for (int d = 0; d < 10000; ++d) {
    std::vector<double> logits(2 + rng.Index(6));
    for (double& v : logits) v = rng.Uniform(-50.0, 50.0);
    const GumbelSample s = GumbelSoftmax(logits, rng.Uniform(0.05, 5.0), rng);
    double sum = 0.0;
    for (double v : s.soft) {
      nonnegative = nonnegative && v >= 0.0;
      sum += v;
    }
    simplex_err = std::max(simplex_err, std::abs(sum - 1.0));
  }

  // Straight-through: the forward value is hard, the gradient is the soft one.
  Tensor logits = Tensor::Matrix(1, 3, {0.2, 1.0, -0.4});
  ad::Tape tape;
  ad::Var l = tape.Watch(logits);
  const GumbelVars g = GumbelSoftmax(l, Tensor({1, 3}, 0.0), GumbelConfig{});
  tape.Backward(ad::Sum(g.out * tape.Constant(Tensor::Matrix(1, 3, {1.0, 0.0, 0.0}))));
  double norm = 0.0;
  for (double v : tape.grad(l)) norm += v * v;
  norm = std::sqrt(norm);
  const bool hard = g.out.value().data() == std::vector<double>{0, 1, 0};

  rep.Line("gumbel", freq_err <= 0.02 && simplex_err <= 1e-12 && nonnegative && hard &&
                         norm > 0.0,
           "max frequency error " + Fmt(freq_err, 3) + " (<= 0.02 over 1e5 draws), simplex error " +
               Fmt(simplex_err, 3) + " (<= 1e-12), straight-through grad norm " + Fmt(norm, 3) +
               " with hard forward " + (hard ? "yes" : "no"));
}

void BetaCriterion(Reporter& rep) {
  bool ok = true;
  std::string detail;
  VaeTrainConfig cfg;
  for (std::size_t epochs : {2u, 3u, 200u, 4000u}) {
    cfg.epochs = epochs;
    const bool ends = BetaSchedule(0, cfg) == 1e-3 && BetaSchedule(epochs - 1, cfg) == 1e-5;
    bool monotone = true;
    for (std::size_t e = 1; e < epochs; ++e) {
      monotone = monotone && BetaSchedule(e, cfg) <= BetaSchedule(e - 1, cfg);
    }
    ok = ok && ends && monotone;
    if (!ends || !monotone) detail += " epochs=" + std::to_string(epochs) + " broken;";
  }
  rep.Line("beta-schedule", ok,
           "beta(0) = 1e-3 and beta(final) = 1e-5 exactly, non-increasing, for 2/3/200/4000 "
           "epochs" + detail);
}

void MetricCriterion(Reporter& rep) {
  std::string why;
  const double err = testing::MetricOracleError(testing::BuildMetricFixture(), &why);
  const double ident = testing::UtilizationIdentityError(77, 100);
  rep.Line("metric-oracles", err <= 1e-12 && ident <= 1e-12,
           "5-pair fixture vs raw-space brute force max diff " + Fmt(err, 3) +
               ", utilization/sparsity identity on 100 random mask sets max diff " +
               Fmt(ident, 3) + (why.empty() ? "" : "; " + why));
}

// ---------------------------------------------------------------------------
// Desk-scale runs

struct Study {
  RunConfig cfg;
  fs::path data;
};

Study MakeStudy(const fs::path& work, const std::string& name, const SynthSpec& spec,
                std::uint64_t seed, std::ostream& log) {
  Study s;
  s.data = work / (name + "_data");
  CmdSynth(spec, s.data, log);
  s.cfg.seed = seed;
  s.cfg.out = (work / name).string();
  s.cfg.data = {(s.data / "data.csv").string(), (s.data / "schema.json").string(), name};
  s.cfg.DeriveSeeds();
  return s;
}

MetricsReport ReportFor(const RunConfig& cfg, const std::string& method) {
  const ResultsFile rf = ReadResults(fs::path(cfg.out) / ("results_" + method + ".jsonl"));
  const TableSchema schema = TableSchema::Load(cfg.data.schema);
  const Models m = LoadModels(cfg, schema);
  const Preprocessor pre =
      Preprocessor::FromJson(nlohmann::json::parse(Slurp(fs::path(cfg.out) / "preprocessor.json")));
  return Evaluate(method, cfg.data.name, rf.results, m.clf, pre, cfg.metrics.eps_num);
}

// Returns the trained desk configuration for the later criteria.
RunConfig DeskCriterion(Reporter& rep, const fs::path& work, std::ostream& log) {
  const auto start = Clock::now();
  SynthSpec spec;  // 3 numerical + 3 categorical, 2000 rows
  spec.seed = 1;
  Study s = MakeStudy(work, "desk", spec, 7, log);
  s.cfg.split.n_test = 100;
  s.cfg.vae.epochs = 200;
  CmdTrain(s.cfg, log);
  CmdGenerate(s.cfg, "tabcf", log);
  const double secs = Seconds(start);

  const ResultsFile rf = ReadResults(fs::path(s.cfg.out) / "results_tabcf.jsonl");
  const TableSchema schema = TableSchema::Load(s.cfg.data.schema);
  std::size_t violations = 0;
  for (const CFResult& r : rf.results) violations += SatisfiesEncoding(schema, r.counterfactual) ? 0 : 1;
  const MetricsReport report = ReportFor(s.cfg, "tabcf");
  rep.Line("desk-e2e", report.validity >= 0.90 && violations == 0 && rf.results.size() == 100 &&
                           secs <= 900.0,
           "tabcf validity " + Fmt(report.validity) + " (" + std::to_string(report.n_val) + "/" +
               std::to_string(report.n) + ", >= 0.90), " + std::to_string(violations) +
               " constraint violations, " + Fmt(secs, 4) + " s (<= 900)");

  const auto summary =
      nlohmann::json::parse(Slurp(fs::path(s.cfg.out) / "train_summary.json"));
  const double acc = summary.at("vae_categorical_reconstruction_accuracy").get<double>();
  rep.Line("desk-reconstruction", acc >= 0.95,
           "categorical reconstruction accuracy on train rows " + Fmt(acc) + " (>= 0.95)");

  std::ifstream curve(fs::path(s.cfg.out) / "training_curve.csv");
  std::string line;
  std::vector<double> recon;
  std::getline(curve, line);  // header: epoch,beta,loss,recon,kl
  while (std::getline(curve, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 4 && std::getline(ss, cell, ','); ++c) {
      if (c == 3) recon.push_back(std::stod(cell));
    }
  }
  const bool have = recon.size() >= 2;
  const double drop = have ? 1.0 - recon.back() / recon.front() : 0.0;
  rep.Line("desk-training-loss", have && drop >= 0.5,
           "reconstruction loss " + (have ? Fmt(recon.front()) + " -> " + Fmt(recon.back()) : "-") +
               ", drop " + Fmt(100 * drop, 3) + "% (>= 50%)");
  return s.cfg;
}

// Label from cat_0 alone; every other feature is noise to the classifier.
void BiasCriterion(Reporter& rep, const fs::path& work, std::ostream& log) {
  SynthSpec spec;
  spec.categories = 4;
  spec.seed = 11;
  spec.signal_numerical = {};
  spec.signal_categorical = {0};
  spec.sharpness = 30.0;
  Study s = MakeStudy(work, "bias", spec, 5, log);
  s.cfg.split.n_test = 60;
  s.cfg.vae.epochs = 200;
  s.cfg.classifier.epochs = 100;
  CmdTrain(s.cfg, log);
  for (const char* m : {"tabcf", "wachter", "dice_like"}) CmdGenerate(s.cfg, m, log);
  const std::vector<MetricsReport> reports = CmdBiasReport(s.cfg, log);

  auto find = [&](const std::string& m) -> const MetricsReport* {
    for (const MetricsReport& r : reports) {
      if (r.method == m) return &r;
    }
    return nullptr;
  };
  const MetricsReport* tab = find("tabcf");
  const MetricsReport* wach = find("wachter");
  const MetricsReport* dice = find("dice_like");
  if (!tab || !wach || !dice) {
    rep.Line("bias-a-wachter", false, "bias report is missing a method");
    rep.Line("bias-b-utilization", false, "bias report is missing a method");
  } else {
    rep.Line("bias-a-wachter", wach->validity == 0.0,
             "wachter validity " + Fmt(wach->validity) + " (" + std::to_string(wach->n_val) +
                 "/" + std::to_string(wach->n) + ", must be 0)");
    const std::size_t causal = tab->num_numerical;  // cat_0
    const double ut = tab->utilization.at(causal), ud = dice->utilization.at(causal);
    rep.Line("bias-b-utilization", ut - ud >= 0.2 && tab->n == dice->n,
             "cat_0 utilization tabcf " + Fmt(ut) + " vs dice_like " + Fmt(ud) +
                 ", difference " + Fmt(ut - ud) + " (>= 0.2) on the same " +
                 std::to_string(tab->n) + " instances; valid tabcf " +
                 std::to_string(tab->n_val) + ", dice_like " + std::to_string(dice->n_val));
  }

  // (c) Constructed step: a classifier reading only the "blue" entry, and a
  // learning rate that moves that entry by 0.2 while the block's gap is 1.
  const TableSchema small = testing::SmallSchema();
  const Classifier single = testing::SingleEntryClassifier(small.encoded_width(), 4, 4.0, 2.0);
  const std::vector<double> x0 = {0.3, 0.6, 1, 0, 0, 0, 1};
  BaselineConfig step_cfg;
  step_cfg.learning_rate = 0.05;
  const std::vector<double> next = DiceLikeStep(x0, x0, small, single, step_cfg);
  const bool kept = std::equal(x0.begin() + 2, x0.begin() + 5, next.begin() + 2);
  step_cfg.learning_rate = 0.5;
  const bool jumps = DiceLikeStep(x0, x0, small, single, step_cfg)[4] == 1.0;

  // The same on the trained study classifier: with every entry of cat_0
  // moving by less than half the gap, the argmax cannot change.
  const TableSchema schema = TableSchema::Load(s.cfg.data.schema);
  const Models models = LoadModels(s.cfg, schema);
  const ResultsFile rf = ReadResults(fs::path(s.cfg.out) / "results_dice_like.jsonl");
  const std::size_t off = schema.block_offset(0), len = schema.block_size(0);
  std::size_t unchanged = 0;
  for (const CFResult& r : rf.results) {
    std::vector<double> x = r.original;
    double bound = 0.0;
    for (std::size_t k = off; k < off + len; ++k) {
      const double keep = x[k];
      x[k] = keep + 1e-5;
      const double up = models.clf.Logit(x);
      x[k] = keep - 1e-5;
      const double down = models.clf.Logit(x);
      x[k] = keep;
      bound = std::max(bound, std::abs(up - down) / 2e-5 + step_cfg.distance_weight +
                                  step_cfg.reg_weight);
    }
    BaselineConfig c = step_cfg;
    c.learning_rate = 0.45 / bound;  // largest per-entry move < 0.5
    const std::vector<double> y = DiceLikeStep(r.original, r.original, schema, models.clf, c);
    unchanged += std::equal(r.original.begin() + off, r.original.begin() + off + len,
                            y.begin() + off);
  }
  rep.Line("bias-c-dice-step", kept && jumps && unchanged == rf.results.size(),
           std::string("constructed step below the gap keeps the block: ") +
               (kept ? "yes" : "no") + ", above the gap jumps: " + (jumps ? "yes" : "no") +
               "; sub-gap steps on the study classifier keep cat_0 on " +
               std::to_string(unchanged) + "/" + std::to_string(rf.results.size()) +
               " instances");
}

void AblationCriterion(Reporter& rep, RunConfig desk, std::ostream& log) {
  desk.ablation.instances = 20;
  const std::vector<AblationCell> cells = CmdAblate(desk, log);
  const AblationCell* c00 = nullptr;
  const AblationCell* c11 = nullptr;
  for (const AblationCell& c : cells) {
    if (c.lambda_input == 0.0 && c.lambda_latent == 0.0) c00 = &c;
    if (c.lambda_input == 1.0 && c.lambda_latent == 1.0) c11 = &c;
  }
  const bool have = c00 && c11 && c00->input_l1 && c11->input_l1;
  const bool ok = cells.size() == 25 && have && *c11->input_l1 < *c00->input_l1 &&
                  c00->validity >= c11->validity;
  rep.Line("ablation", ok,
           std::to_string(cells.size()) + " cells (== 25); input L1 at (1,1) " +
               (have ? Fmt(*c11->input_l1) : "-") + " < (0,0) " +
               (have ? Fmt(*c00->input_l1) : "-") + "; validity (0,0) " +
               (c00 ? Fmt(c00->validity) : "-") + " >= (1,1) " +
               (c11 ? Fmt(c11->validity) : "-") + "; " + std::to_string(desk.ablation.instances) +
               " instances");
}

// Every command re-run with the same config and seed: the first run's files
// are kept in memory, the output directory is wiped, and the second run's
// files are compared byte for byte. Reduced budgets keep the re-runs short.
void DeterminismCriterion(Reporter& rep, const fs::path& work, const RunConfig& desk,
                          std::ostream& log) {
  std::vector<std::string> differing;
  std::size_t compared = 0;
  auto twice = [&](const fs::path& dir, const std::vector<std::string>& files,
                   const std::function<void()>& run) {
    run();
    std::vector<std::string> first;
    for (const std::string& f : files) first.push_back(Slurp(dir / f));
    for (const std::string& f : files) fs::remove(dir / f);
    run();
    for (std::size_t i = 0; i < files.size(); ++i) {
      ++compared;
      if (first[i].empty() || first[i] != Slurp(dir / files[i])) {
        differing.push_back(dir.filename().string() + "/" + files[i]);
      }
    }
  };

  SynthSpec spec;
  spec.rows = 400;
  spec.seed = 3;
  const fs::path data = work / "det_synth";
  twice(data, {"data.csv", "schema.json", "synth_spec.json"},
        [&] { CmdSynth(spec, data, log); });

  RunConfig c = desk;
  c.out = (work / "det_run").string();
  c.data.csv = (data / "data.csv").string();
  c.data.schema = (data / "schema.json").string();
  c.vae.epochs = 10;
  c.classifier.epochs = 20;
  c.split.n_test = 10;
  c.ablation.instances = 3;
  const std::vector<std::string> results = {c.out + "/results_tabcf.jsonl",
                                            c.out + "/results_wachter.jsonl",
                                            c.out + "/results_dice_like.jsonl"};
  twice(c.out,
        {"model.ckpt", "preprocessor.json", "config.json", "train_summary.json",
         "training_curve.csv", "classifier_curve.csv"},
        [&] { CmdTrain(c, log); });
  twice(c.out,
        {"test_selection.json", "results_tabcf.jsonl", "results_wachter.jsonl",
         "results_dice_like.jsonl"},
        [&] {
          for (const char* m : {"tabcf", "wachter", "dice_like"}) CmdGenerate(c, m, log);
        });
  twice(c.out, {"report.json", "report.txt"}, [&] { CmdEvaluate(c, results, {}, log); });
  twice(c.out, {"ablation.json", "ablation.txt"}, [&] { CmdAblate(c, log); });
  twice(c.out, {"bias_report.json", "bias_report.txt", "utilization.svg"},
        [&] { CmdBiasReport(c, log); });

  // Desk-scale generation, selection included.
  twice(desk.out, {"test_selection.json", "results_tabcf.jsonl"},
        [&] { CmdGenerate(desk, "tabcf", log); });

  std::string detail = std::to_string(compared) + " files compared across synth, train, "
                       "generate (3 methods), evaluate, ablate, bias-report";
  if (!differing.empty()) {
    detail += "; differing:";
    for (const std::string& f : differing) detail += " " + f;
  }
  rep.Line("determinism", differing.empty(), detail);
}

}  // namespace
}  // namespace tabcf

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"TabCF acceptance suite"};
  std::string work = (fs::temp_directory_path() / "tabcf_acceptance").string();
  std::vector<std::string> only;
  app.add_option("--work-dir", work, "scratch directory (wiped first)");
  app.add_option("--only", only,
                 "run a subset: gradients constraints gumbel beta metrics desk bias ablation "
                 "determinism");
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> pick(only.begin(), only.end());
  auto want = [&](const std::string& k) { return pick.empty() || pick.count(k) > 0; };

  fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream log(fs::path(work) / "commands.log");
  tabcf::Reporter rep;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (want("gradients")) tabcf::GradientCriterion(rep);
    if (want("constraints")) tabcf::ConstraintCriterion(rep);
    if (want("gumbel")) tabcf::GumbelCriterion(rep);
    if (want("beta")) tabcf::BetaCriterion(rep);
    if (want("metrics")) tabcf::MetricCriterion(rep);
    if (want("desk") || want("ablation") || want("determinism")) {
      const tabcf::RunConfig desk = tabcf::DeskCriterion(rep, work, log);
      if (want("ablation")) tabcf::AblationCriterion(rep, desk, log);
      if (want("determinism")) tabcf::DeterminismCriterion(rep, work, desk, log);
    }
    if (want("bias")) tabcf::BiasCriterion(rep, work, log);
  } catch (const std::exception& e) {
    rep.Line("suite", false, std::string("aborted: ") + e.what());
  }
  std::cout << (rep.failures() == 0 ? "all criteria passed" : std::to_string(rep.failures()) +
                                                                  " criteria failed")
            << " in " << tabcf::Seconds(start) << " s; command log "
            << (fs::path(work) / "commands.log").string() << std::endl;
  return rep.failures() == 0 ? 0 : 1;
}
