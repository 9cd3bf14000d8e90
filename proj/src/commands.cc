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
#include "tabcf/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "tabcf/cf_baselines.h"
#include "tabcf/cf_io.h"
#include "tabcf/cf_latent.h"
#include "tabcf/checkpoint.h"
#include "tabcf/errors.h"

namespace tabcf {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kModelFile = "model.ckpt";
constexpr const char* kPreprocessorFile = "preprocessor.json";
constexpr const char* kSelectionFile = "test_selection.json";

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::string Num(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

fs::path OutDir(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  return fs::path(cfg.out);
}

RunConfig Prepared(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.DeriveSeeds();
  c.Validate();
  return c;
}

Preprocessor LoadPreprocessor(const RunConfig& cfg, const TableSchema& schema) {
  const fs::path path = fs::path(cfg.out) / kPreprocessorFile;
  std::ifstream f(path);
  if (!f) throw DataError("missing preprocessor " + path.string());
  Preprocessor pre = Preprocessor::FromJson(nlohmann::json::parse(f));
  if (pre.schema().Hash() != schema.Hash()) {
    throw DataError("preprocessor " + path.string() + " was fitted on another schema");
  }
  return pre;
}

std::optional<BaselineMethod> ParseBaseline(const std::string& method) {
  if (method == "wachter") return BaselineMethod::kWachter;
  if (method == "dice_like") return BaselineMethod::kDiceLike;
  return std::nullopt;
}

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string Cell(const std::optional<double>& v) {
  char buf[32];
  if (!v) return "-";
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

Tensor Workspace::Encode(std::span<const std::size_t> rows) const {
  return pre.EncodeRows(table, rows);
}

std::vector<int> Workspace::Labels(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(table.labels.at(r));
  return out;
}

Workspace LoadWorkspace(const RunConfig& cfg) {
  Workspace ws;
  ws.cfg = cfg;
  ws.schema = TableSchema::Load(cfg.data.schema);
  ws.table = LoadCsv(cfg.data.csv, ws.schema);
  ws.split = SplitRows(ws.table.rows.size(), cfg.split.test_fraction,
                       cfg.split.train_cap, cfg.split_seed());
  RawTable train;
  for (std::size_t r : ws.split.train) {
    train.rows.push_back(ws.table.rows[r]);
    train.labels.push_back(ws.table.labels[r]);
  }
  ws.pre = Preprocessor::Fit(train, ws.schema);
  return ws;
}

Models LoadModels(const RunConfig& cfg, const TableSchema& schema) {
  const fs::path path = fs::path(cfg.out) / kModelFile;
  const Checkpoint ckpt = ReadCheckpoint(path);
  if (ckpt.schema_hash != schema.Hash()) {
    throw DataError("checkpoint " + path.string() + " was trained on schema " +
                    HashToHex(ckpt.schema_hash) + ", dataset schema is " +
                    HashToHex(schema.Hash()));
  }
  return {VaeFromSection(ckpt.Section("vae"), schema),
          ClassifierFromSection(ckpt.Section("classifier"))};
}

void CmdTrain(const RunConfig& config, std::ostream& log) {
  const RunConfig cfg = Prepared(config);
  const Workspace ws = LoadWorkspace(cfg);
  const fs::path out = OutDir(cfg);
  const Tensor train = ws.Encode(ws.split.train);
  const Tensor test = ws.Encode(ws.split.test);
  const std::vector<int> train_labels = ws.Labels(ws.split.train);
  const std::vector<int> test_labels = ws.Labels(ws.split.test);
  log << "dataset " << cfg.data.name << ": " << ws.table.rows.size() << " rows, "
      << ws.split.train.size() << " train / " << ws.split.test.size() << " test, k = "
      << ws.schema.encoded_width() << '\n';

  Classifier clf = Classifier::Init(ws.schema.encoded_width(), cfg.classifier.hidden,
                                    cfg.classifier.seed);
  const ClassifierReport clf_report =
      TrainClassifier(clf, train, train_labels, test, test_labels, cfg.classifier);
  log << "classifier held-out accuracy " << Num(clf_report.held_out_accuracy, 4) << '\n';

  VaeModel vae = VaeModel::Init(ws.schema, cfg.vae_arch, cfg.vae.seed);
  const std::size_t report_every = std::max<std::size_t>(1, cfg.vae.epochs / 10);
  const TrainingCurve curve = TrainVae(vae, train, cfg.vae, [&](const EpochRecord& e) {
    if (e.epoch % report_every == 0 || e.epoch + 1 == cfg.vae.epochs) {
      log << "vae epoch " << e.epoch << " loss " << Num(e.loss, 6) << " recon "
          << Num(e.recon, 6) << " kl " << Num(e.kl, 6) << '\n';
    }
  });
  const double cat_acc = ws.schema.num_categorical() == 0
                             ? 1.0
                             : CategoricalReconstructionAccuracy(vae, train, cfg.vae.tau,
                                                                 DeriveSeed(cfg.seed, 6));

  Checkpoint ckpt;
  ckpt.schema_hash = ws.schema.Hash();
  ckpt.seed = cfg.seed;
  ckpt.meta = {{"vae_epochs", static_cast<std::int64_t>(cfg.vae.epochs)},
               {"classifier_epochs", static_cast<std::int64_t>(cfg.classifier.epochs)}};
  ckpt.sections.push_back(VaeToSection(vae));
  ckpt.sections.push_back(ClassifierToSection(clf));
  WriteCheckpoint(out / kModelFile, ckpt);
  WriteText(out / kPreprocessorFile, ws.pre.ToJson().dump(2) + "\n");
  WriteText(out / "config.json", ConfigToJson(cfg).dump(2) + "\n");

  std::ostringstream vc;
  vc << "epoch,beta,loss,recon,kl\n";
  for (const EpochRecord& e : curve.epochs) {
    vc << e.epoch << ',' << Num(e.beta, 17) << ',' << Num(e.loss, 17) << ','
       << Num(e.recon, 17) << ',' << Num(e.kl, 17) << '\n';
  }
  WriteText(out / "training_curve.csv", vc.str());
  std::ostringstream cc;
  cc << "epoch,loss\n";
  for (std::size_t e = 0; e < clf_report.epoch_loss.size(); ++e) {
    cc << e << ',' << Num(clf_report.epoch_loss[e], 17) << '\n';
  }
  WriteText(out / "classifier_curve.csv", cc.str());

  Json summary;
  summary["dataset"] = cfg.data.name;
  summary["schema_hash"] = HashToHex(ws.schema.Hash());
  summary["seed"] = cfg.seed;
  summary["train_rows"] = ws.split.train.size();
  summary["test_rows"] = ws.split.test.size();
  summary["classifier_held_out_accuracy"] = clf_report.held_out_accuracy;
  summary["classifier_checksum"] = HashToHex(clf.Checksum());
  summary["vae_final_loss"] = curve.epochs.empty() ? 0.0 : curve.epochs.back().loss;
  summary["vae_categorical_reconstruction_accuracy"] = cat_acc;
  WriteText(out / "train_summary.json", summary.dump(2) + "\n");
  log << "categorical reconstruction accuracy " << Num(cat_acc, 4) << '\n'
      << "wrote " << (out / kModelFile).string() << '\n';
}

TestSelection SharedSelection(const Workspace& ws, const Classifier& clf) {
  const RunConfig& cfg = ws.cfg;
  const fs::path path = fs::path(cfg.out) / kSelectionFile;
  const std::string hash = HashToHex(ws.schema.Hash());
  if (std::ifstream f(path); f) {
    try {
      const nlohmann::json j = nlohmann::json::parse(f);
      if (j.at("seed").get<std::uint64_t>() == cfg.seed &&
          j.at("schema_hash").get<std::string>() == hash &&
          j.at("requested").get<std::size_t>() == cfg.split.n_test &&
          j.at("classifier_checksum").get<std::string>() == HashToHex(clf.Checksum())) {
        TestSelection sel;
        sel.requested = j.at("requested").get<std::size_t>();
        sel.eligible = j.at("eligible").get<std::size_t>();
        sel.indices = j.at("indices").get<std::vector<std::size_t>>();
        return sel;
      }
    } catch (const nlohmann::json::exception&) {
      // A damaged cache is rebuilt below.
    }
  }
  const Tensor test = ws.Encode(ws.split.test);
  const std::size_t k = ws.schema.encoded_width();
  std::map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < ws.split.test.size(); ++i) position[ws.split.test[i]] = i;
  const TestSelection sel = SelectTestPool(
      ws.split.test,
      [&](std::size_t row) {
        const std::size_t i = position.at(row);
        return clf.Predict(std::span<const double>(&test[i * k], k)) == 0;
      },
      cfg.split.n_test, cfg.selection_seed());
  Json j;
  j["seed"] = cfg.seed;
  j["schema_hash"] = hash;
  j["classifier_checksum"] = HashToHex(clf.Checksum());
  j["requested"] = sel.requested;
  j["eligible"] = sel.eligible;
  j["indices"] = sel.indices;
  WriteText(path, j.dump() + "\n");
  return sel;
}

void CmdGenerate(const RunConfig& config, const std::string& method, std::ostream& log) {
  const RunConfig cfg = Prepared(config);
  const std::optional<BaselineMethod> baseline = ParseBaseline(method);
  if (method != "tabcf" && !baseline) {
    throw ConfigError("--method must be tabcf, wachter or dice_like, got '" + method + "'");
  }
  const Workspace ws = LoadWorkspace(cfg);
  const Models models = LoadModels(cfg, ws.schema);
  const Preprocessor pre = LoadPreprocessor(cfg, ws.schema);
  const fs::path out = OutDir(cfg);
  const TestSelection sel = SharedSelection(ws, models.clf);
  ResultsHeader header{method, ws.schema.Hash(), cfg.data.name, cfg.seed,
                       sel.requested, sel.eligible};
  const fs::path path = out / ("results_" + method + ".jsonl");
  if (sel.indices.empty()) {
    WriteResults(path, header, {}, pre);
    throw DataError("no negative-class test instances to explain (n=0); wrote " +
                    path.string());
  }
  if (sel.shortage()) {
    log << "warning: only " << sel.eligible << " eligible test instances, "
        << sel.requested << " requested\n";
  }
  const Tensor rows = pre.EncodeRows(ws.table, sel.indices);
  const std::uint64_t checksum = models.clf.Checksum();
  std::vector<CFResult> results;
  if (baseline) {
    results = BatchGenerateBaseline(*baseline, rows, sel.indices, ws.schema, models.clf,
                                    cfg.baseline, cfg.runtime.workers);
  } else {
    results = BatchGenerateCf(rows, sel.indices, models.vae, models.clf, cfg.cf,
                              cfg.runtime.workers);
  }
  if (models.clf.Checksum() != checksum) {
    throw ContractError("classifier parameters changed during generation");
  }
  WriteResults(path, header, results, pre);
  const auto n_val = std::count_if(results.begin(), results.end(),
                                   [](const CFResult& r) { return r.valid; });
  log << method << ": " << n_val << " / " << results.size() << " valid; wrote "
      << path.string() << '\n';
}

std::vector<MetricsReport> CmdEvaluate(const RunConfig& config,
                                       const std::vector<std::string>& results_files,
                                       const std::vector<std::string>& report_files,
                                       std::ostream& log) {
  const RunConfig cfg = Prepared(config);
  if (results_files.empty() && report_files.empty()) {
    throw ConfigError("evaluate needs at least one results file or --reports file");
  }
  std::vector<MetricsReport> reports;
  if (!report_files.empty()) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<MetricsReport>> by_method;
    for (const std::string& file : report_files) {
      std::ifstream f(file);
      if (!f) throw DataError("missing report " + file);
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::exception& e) {
        throw DataError("report " + file + ": " + e.what());
      }
      for (const Json& row : j.at("reports")) {
        MetricsReport r = ReportFromJson(row);
        if (!by_method.count(r.method)) order.push_back(r.method);
        by_method[r.method].push_back(std::move(r));
      }
    }
    for (const std::string& m : order) reports.push_back(AverageReports(by_method[m]));
  } else {
    const TableSchema schema = TableSchema::Load(cfg.data.schema);
    const Models models = LoadModels(cfg, schema);
    const Preprocessor pre = LoadPreprocessor(cfg, schema);
    for (const std::string& file : results_files) {
      const ResultsFile rf = ReadResults(file);
      if (rf.header.schema_hash != schema.Hash()) {
        throw DataError("results " + file + " have schema hash " +
                        HashToHex(rf.header.schema_hash) + ", dataset schema is " +
                        HashToHex(schema.Hash()));
      }
      if (rf.results.empty()) throw DataError("results " + file + " hold no instances (n=0)");
      reports.push_back(Evaluate(rf.header.method, rf.header.dataset, rf.results, models.clf,
                                 pre, cfg.metrics.eps_num));
    }
  }
  const fs::path out = OutDir(cfg);
  Json j;
  Json rows = Json::array();
  for (const MetricsReport& r : reports) rows.push_back(ReportToJson(r));
  j["eps_num"] = cfg.metrics.eps_num;
  j["reports"] = rows;
  WriteText(out / "report.json", j.dump(2) + "\n");
  const std::string table = FormatReportTable(reports);
  WriteText(out / "report.txt", table);
  log << table;
  return reports;
}

std::vector<AblationCell> RunAblation(const VaeModel& vae, const Classifier& clf,
                                      const Preprocessor& pre, const Tensor& rows,
                                      std::span<const std::size_t> ids,
                                      const CFConfig& base, double eps_num,
                                      std::size_t workers, std::ostream* log) {
  const TableSchema& schema = pre.schema();
  std::vector<AblationCell> cells;
  for (double li : kAblationValues) {
    for (double ll : kAblationValues) {
      CFConfig c = base;
      c.lambda_input = li;
      c.lambda_latent = ll;
      const std::vector<CFResult> results = BatchGenerateCf(rows, ids, vae, clf, c, workers);
      AblationCell cell;
      cell.lambda_input = li;
      cell.lambda_latent = ll;
      cell.n = results.size();
      std::vector<ChangeMask> masks;
      std::vector<std::vector<double>> originals;
      std::vector<std::vector<double>> cfs;
      std::vector<double> latent;
      double l1 = 0.0;
      for (const CFResult& r : results) {
        latent.push_back(r.latent_distance);
        if (clf.Predict(r.counterfactual) != 1) continue;
        masks.push_back(ComputeChangeMask(schema, r.original, r.counterfactual, eps_num));
        originals.push_back(r.original);
        cfs.push_back(r.counterfactual);
        for (std::size_t i = 0; i < r.original.size(); ++i) {
          l1 += std::abs(r.original[i] - r.counterfactual[i]);
        }
      }
      cell.n_val = masks.size();
      cell.validity = cell.n == 0 ? 0.0
                                  : static_cast<double>(cell.n_val) /
                                        static_cast<double>(cell.n);
      if (cell.n_val > 0) cell.input_l1 = l1 / static_cast<double>(cell.n_val);
      if (!latent.empty()) {
        std::sort(latent.begin(), latent.end());
        const std::size_t m = latent.size() / 2;
        cell.median_latent_distance =
            latent.size() % 2 == 1 ? latent[m] : 0.5 * (latent[m - 1] + latent[m]);
      }
      cell.sparsity_cat = SparsityCat(masks);
      cell.sparsity_num = SparsityNum(masks);
      cell.proximity_num = ProximityNum(originals, cfs, pre);
      if (log != nullptr) {
        *log << "ablation lambda_input=" << li << " lambda_latent=" << ll << ": validity "
             << Num(cell.validity, 4) << ", input L1 " << Cell(cell.input_l1) << '\n';
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string FormatAblation(const std::vector<AblationCell>& cells) {
  std::ostringstream out;
  auto grid = [&](const std::string& title, auto value) {
    out << title << " (rows: lambda_input, columns: lambda_latent)\n";
    out << "          ";
    for (double ll : kAblationValues) out << "    " << Cell(ll);
    out << '\n';
    for (std::size_t i = 0; i < 5; ++i) {
      out << "  " << Cell(kAblationValues[i]);
      for (std::size_t j = 0; j < 5; ++j) {
        const std::string s = value(cells.at(i * 5 + j));
        out << "    " << std::string(s.size() < 6 ? 6 - s.size() : 0, ' ') << s;
      }
      out << '\n';
    }
    out << '\n';
  };
  grid("validity", [](const AblationCell& c) { return Cell(c.validity); });
  grid("mean input L1 over valid CFs", [](const AblationCell& c) { return Cell(c.input_l1); });
  grid("median latent distance",
       [](const AblationCell& c) { return Cell(c.median_latent_distance); });
  grid("proximity num", [](const AblationCell& c) { return Cell(c.proximity_num); });
  return out.str();
}

std::vector<AblationCell> CmdAblate(const RunConfig& config, std::ostream& log) {
  const RunConfig cfg = Prepared(config);
  const Workspace ws = LoadWorkspace(cfg);
  const Models models = LoadModels(cfg, ws.schema);
  const Preprocessor pre = LoadPreprocessor(cfg, ws.schema);
  const fs::path out = OutDir(cfg);
  const TestSelection sel = SharedSelection(ws, models.clf);
  if (sel.indices.empty()) throw DataError("no negative-class test instances (n=0)");
  const std::size_t n = std::min(cfg.ablation.instances, sel.indices.size());
  const std::vector<std::size_t> ids(sel.indices.begin(),
                                     sel.indices.begin() + static_cast<std::ptrdiff_t>(n));
  const Tensor rows = pre.EncodeRows(ws.table, ids);
  const std::vector<AblationCell> cells = RunAblation(
      models.vae, models.clf, pre, rows, ids, cfg.cf, cfg.metrics.eps_num,
      cfg.runtime.workers, &log);
  Json j;
  j["dataset"] = cfg.data.name;
  j["seed"] = cfg.seed;
  j["instances"] = n;
  j["eps_num"] = cfg.metrics.eps_num;
  Json arr = Json::array();
  for (const AblationCell& c : cells) {
    Json e;
    e["lambda_input"] = c.lambda_input;
    e["lambda_latent"] = c.lambda_latent;
    e["n"] = c.n;
    e["n_val"] = c.n_val;
    e["validity"] = c.validity;
    e["input_l1"] = OptionalJson(c.input_l1);
    e["median_latent_distance"] = c.median_latent_distance;
    e["sparsity_cat"] = OptionalJson(c.sparsity_cat);
    e["sparsity_num"] = OptionalJson(c.sparsity_num);
    e["proximity_num"] = OptionalJson(c.proximity_num);
    arr.push_back(e);
  }
  j["cells"] = arr;
  WriteText(out / "ablation.json", j.dump(2) + "\n");
  const std::string text = FormatAblation(cells);
  WriteText(out / "ablation.txt", text);
  log << text;
  return cells;
}

std::vector<MetricsReport> CmdBiasReport(const RunConfig& config, std::ostream& log) {
  const RunConfig cfg = Prepared(config);
  const fs::path out = OutDir(cfg);
  const fs::path tabcf_file = out / "results_tabcf.jsonl";
  if (!fs::exists(tabcf_file)) throw DataError("missing " + tabcf_file.string());
  std::vector<std::string> files = {tabcf_file.string()};
  for (const char* m : {"wachter", "dice_like"}) {
    const fs::path p = out / (std::string("results_") + m + ".jsonl");
    if (fs::exists(p)) files.push_back(p.string());
  }
  if (files.size() < 2) {
    throw DataError("bias report needs results for tabcf and at least one baseline in " +
                    out.string());
  }
  const TableSchema schema = TableSchema::Load(cfg.data.schema);
  const Models models = LoadModels(cfg, schema);
  const Preprocessor pre = LoadPreprocessor(cfg, schema);
  std::vector<MetricsReport> reports;
  for (const std::string& file : files) {
    const ResultsFile rf = ReadResults(file);
    if (rf.header.schema_hash != schema.Hash()) {
      throw DataError("results " + file + " were produced for another schema");
    }
    if (rf.results.empty()) throw DataError("results " + file + " hold no instances (n=0)");
    reports.push_back(Evaluate(rf.header.method, rf.header.dataset, rf.results, models.clf,
                               pre, cfg.metrics.eps_num));
  }
  Json j;
  j["dataset"] = cfg.data.name;
  j["eps_num"] = cfg.metrics.eps_num;
  Json methods = Json::array();
  std::ostringstream txt;
  txt << "# feature utilization over valid counterfactuals (eps_num = " << cfg.metrics.eps_num
      << ")\n";
  std::vector<std::string> cols = {"n_val", "mean_num", "mean_cat"};
  for (const std::string& name : reports.front().feature_names) cols.push_back(name);
  std::size_t method_width = 6;
  for (const MetricsReport& r : reports) method_width = std::max(method_width, r.method.size());
  auto width = [&](std::size_t c) { return std::max<std::size_t>(cols[c].size(), 6); };
  txt << std::left << std::setw(static_cast<int>(method_width)) << "method" << std::right;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    txt << "  " << std::setw(static_cast<int>(width(c))) << cols[c];
  }
  txt << '\n';
  for (const MetricsReport& r : reports) {
    Json m = ReportToJson(r);
    m["mean_utilization_numerical"] = r.MeanUtilizationNumerical();
    m["mean_utilization_categorical"] = r.MeanUtilizationCategorical();
    methods.push_back(m);
    std::vector<std::string> cells = {std::to_string(r.n_val), Cell(r.MeanUtilizationNumerical()),
                                      Cell(r.MeanUtilizationCategorical())};
    for (double u : r.utilization) cells.push_back(Cell(u));
    txt << std::left << std::setw(static_cast<int>(method_width)) << r.method << std::right;
    for (std::size_t c = 0; c < cells.size() && c < cols.size(); ++c) {
      txt << "  " << std::setw(static_cast<int>(width(c))) << cells[c];
    }
    txt << '\n';
  }
  j["methods"] = methods;
  WriteText(out / "bias_report.json", j.dump(2) + "\n");
  WriteText(out / "bias_report.txt", txt.str());
  WriteText(out / "utilization.svg",
            UtilizationSvg(reports, "Feature utilization: " + cfg.data.name));
  log << txt.str();
  return reports;
}

void CmdSynth(const SynthSpec& spec, const fs::path& out_dir, std::ostream& log) {
  const SynthData data = GenerateSynthetic(spec);
  WriteSynthetic(data, out_dir);
  WriteText(out_dir / "synth_spec.json", SynthSpecToJson(spec).dump(2) + "\n");
  const auto positives = std::count(data.table.labels.begin(), data.table.labels.end(), 1);
  log << "wrote " << data.table.rows.size() << " rows (" << positives << " positive) to "
      << (out_dir / "data.csv").string() << '\n';
}

}  // namespace tabcf
