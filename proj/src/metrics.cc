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
#include "tabcf/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tabcf/errors.h"

namespace tabcf {
namespace {

std::size_t Argmax(std::span<const double> block) {
  return static_cast<std::size_t>(std::max_element(block.begin(), block.end()) -
                                  block.begin());
}

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Cell(const std::optional<double>& v) { return v ? Fixed(*v) : "-"; }

nlohmann::ordered_json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> OptionalFrom(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

ChangeMask ComputeChangeMask(const TableSchema& schema, std::span<const double> x0,
                             std::span<const double> x1, double eps_num) {
  const std::size_t k = schema.encoded_width();
  if (x0.size() != k || x1.size() != k) {
    throw ShapeError("change mask: rows must have width " + std::to_string(k));
  }
  ChangeMask m;
  for (std::size_t j = 0; j < schema.num_numerical(); ++j) {
    m.numerical.push_back(std::abs(x1[j] - x0[j]) > eps_num);
  }
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    const std::size_t off = schema.block_offset(i);
    const std::size_t c = schema.block_size(i);
    m.categorical.push_back(Argmax(x0.subspan(off, c)) != Argmax(x1.subspan(off, c)));
  }
  return m;
}

std::vector<bool> RecomputeValidity(const std::vector<CFResult>& results,
                                    const Classifier& clf) {
  std::vector<bool> out;
  out.reserve(results.size());
  for (const CFResult& r : results) out.push_back(clf.Predict(r.counterfactual) == 1);
  return out;
}

double Validity(const std::vector<bool>& valid) {
  if (valid.empty()) throw DataError("validity of an empty result set (n=0)");
  const auto n_val = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
  return static_cast<double>(n_val) / static_cast<double>(valid.size());
}

namespace {

std::optional<double> MeanFraction(std::span<const ChangeMask> masks,
                                   std::vector<bool> ChangeMask::*field) {
  if (masks.empty() || (masks.front().*field).empty()) return std::nullopt;
  double sum = 0.0;
  for (const ChangeMask& m : masks) {
    const auto& v = m.*field;
    sum += static_cast<double>(std::count(v.begin(), v.end(), true)) /
           static_cast<double>(v.size());
  }
  return sum / static_cast<double>(masks.size());
}

}  // namespace

std::optional<double> SparsityNum(std::span<const ChangeMask> masks) {
  return MeanFraction(masks, &ChangeMask::numerical);
}

std::optional<double> SparsityCat(std::span<const ChangeMask> masks) {
  return MeanFraction(masks, &ChangeMask::categorical);
}

std::optional<double> ProximityNum(std::span<const std::vector<double>> originals,
                                   std::span<const std::vector<double>> counterfactuals,
                                   const Preprocessor& pre) {
  if (originals.size() != counterfactuals.size()) {
    throw ShapeError("proximity: original and counterfactual counts differ");
  }
  const std::size_t n_num = pre.schema().num_numerical();
  if (originals.empty() || n_num == 0) return std::nullopt;
  double total = 0.0;
  for (std::size_t p = 0; p < originals.size(); ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_num; ++j) {
      const double a = pre.Standardize(j, pre.RawNumeric(j, originals[p].at(j)));
      const double b = pre.Standardize(j, pre.RawNumeric(j, counterfactuals[p].at(j)));
      s += std::abs(a - b);
    }
    total += s;
  }
  return total / static_cast<double>(originals.size());
}

std::vector<double> FeatureUtilization(std::span<const ChangeMask> masks,
                                       std::size_t num_numerical,
                                       std::size_t num_categorical) {
  std::vector<double> rates(num_numerical + num_categorical, 0.0);
  if (masks.empty()) return rates;
  for (const ChangeMask& m : masks) {
    if (m.numerical.size() != num_numerical || m.categorical.size() != num_categorical) {
      throw ShapeError("utilization: mask does not match feature counts");
    }
    for (std::size_t j = 0; j < num_numerical; ++j) rates[j] += m.numerical[j] ? 1.0 : 0.0;
    for (std::size_t i = 0; i < num_categorical; ++i) {
      rates[num_numerical + i] += m.categorical[i] ? 1.0 : 0.0;
    }
  }
  for (double& r : rates) r /= static_cast<double>(masks.size());
  return rates;
}

double MetricsReport::MeanUtilizationNumerical() const {
  if (num_numerical == 0 || utilization.size() < num_numerical) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < num_numerical; ++j) s += utilization[j];
  return s / static_cast<double>(num_numerical);
}

double MetricsReport::MeanUtilizationCategorical() const {
  if (utilization.size() <= num_numerical) return 0.0;
  double s = 0.0;
  for (std::size_t i = num_numerical; i < utilization.size(); ++i) s += utilization[i];
  return s / static_cast<double>(utilization.size() - num_numerical);
}

MetricsReport Evaluate(const std::string& method, const std::string& dataset,
                       const std::vector<CFResult>& results, const Classifier& clf,
                       const Preprocessor& pre, double eps_num) {
  const TableSchema& schema = pre.schema();
  MetricsReport r;
  r.method = method;
  r.dataset = dataset;
  r.eps_num = eps_num;
  r.n = results.size();
  const std::vector<bool> valid = RecomputeValidity(results, clf);
  r.validity = Validity(valid);
  std::vector<ChangeMask> masks;
  std::vector<std::vector<double>> originals;
  std::vector<std::vector<double>> counterfactuals;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!valid[i]) continue;
    masks.push_back(
        ComputeChangeMask(schema, results[i].original, results[i].counterfactual, eps_num));
    originals.push_back(results[i].original);
    counterfactuals.push_back(results[i].counterfactual);
  }
  r.n_val = masks.size();
  if (method != "wachter") r.sparsity_cat = SparsityCat(masks);
  r.sparsity_num = SparsityNum(masks);
  r.proximity_num = ProximityNum(originals, counterfactuals, pre);
  r.num_numerical = schema.num_numerical();
  for (std::size_t f = 0; f < schema.num_features(); ++f) {
    r.feature_names.push_back(schema.feature_column(f).name);
  }
  r.utilization = FeatureUtilization(masks, schema.num_numerical(), schema.num_categorical());
  return r;
}

MetricsReport AverageReports(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw DataError("nothing to average");
  MetricsReport avg;
  avg.method = reports.front().method;
  avg.dataset = "average";
  avg.eps_num = reports.front().eps_num;
  const double count = static_cast<double>(reports.size());
  auto mean_optional = [&](std::optional<double> MetricsReport::*field) {
    double s = 0.0;
    std::size_t c = 0;
    for (const MetricsReport& r : reports) {
      if (r.*field) {
        s += *(r.*field);
        ++c;
      }
    }
    return c == 0 ? std::nullopt : std::optional<double>(s / static_cast<double>(c));
  };
  bool same_features = true;
  for (const MetricsReport& r : reports) {
    avg.n += r.n;
    avg.n_val += r.n_val;
    avg.validity += r.validity / count;
    same_features = same_features && r.feature_names == reports.front().feature_names;
  }
  avg.sparsity_cat = mean_optional(&MetricsReport::sparsity_cat);
  avg.sparsity_num = mean_optional(&MetricsReport::sparsity_num);
  avg.proximity_num = mean_optional(&MetricsReport::proximity_num);
  if (same_features) {
    avg.feature_names = reports.front().feature_names;
    avg.num_numerical = reports.front().num_numerical;
    avg.utilization.assign(avg.feature_names.size(), 0.0);
    for (const MetricsReport& r : reports) {
      for (std::size_t f = 0; f < r.utilization.size(); ++f) {
        avg.utilization[f] += r.utilization[f] / count;
      }
    }
  }
  return avg;
}

nlohmann::ordered_json ReportToJson(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["dataset"] = r.dataset;
  j["eps_num"] = r.eps_num;
  j["n"] = r.n;
  j["n_val"] = r.n_val;
  j["validity"] = r.validity;
  j["sparsity_cat"] = OptionalJson(r.sparsity_cat);
  j["sparsity_num"] = OptionalJson(r.sparsity_num);
  j["proximity_num"] = OptionalJson(r.proximity_num);
  j["num_numerical"] = r.num_numerical;
  nlohmann::ordered_json util = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < r.feature_names.size() && f < r.utilization.size(); ++f) {
    util[r.feature_names[f]] = r.utilization[f];
  }
  j["utilization"] = util;
  return j;
}

MetricsReport ReportFromJson(const nlohmann::ordered_json& j) {
  MetricsReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.eps_num = j.at("eps_num").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.n_val = j.at("n_val").get<std::size_t>();
    r.validity = j.at("validity").get<double>();
    r.sparsity_cat = OptionalFrom(j.at("sparsity_cat"));
    r.sparsity_num = OptionalFrom(j.at("sparsity_num"));
    r.proximity_num = OptionalFrom(j.at("proximity_num"));
    r.num_numerical = j.at("num_numerical").get<std::size_t>();
    for (const auto& [name, rate] : j.at("utilization").items()) {
      r.feature_names.push_back(name);
      r.utilization.push_back(rate.get<double>());
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string FormatReportTable(const std::vector<MetricsReport>& reports) {
  const std::vector<std::string> head = {"Method",       "Dataset",      "n",
                                         "n_val",        "Validity",     "Sparsity Cat",
                                         "Sparsity Num", "Proximity Num"};
  std::vector<std::vector<std::string>> rows;
  for (const MetricsReport& r : reports) {
    rows.push_back({r.method, r.dataset, std::to_string(r.n), std::to_string(r.n_val),
                    Fixed(r.validity), Cell(r.sparsity_cat), Cell(r.sparsity_num),
                    Cell(r.proximity_num)});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  if (!reports.empty()) {
    out << "# numerical change threshold eps_num = " << reports.front().eps_num
        << " (encoded space)\n";
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::size_t pad = width[c] - cells[c].size();
      if (c < 2) {
        out << cells[c] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << cells[c];
      }
      out << (c + 1 < cells.size() ? "  " : "\n");
    }
  };
  emit(head);
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  out << std::string(total - 2, '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string UtilizationSvg(const std::vector<MetricsReport>& reports,
                           const std::string& title) {
  static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"};
  std::vector<std::string> names;
  for (const MetricsReport& r : reports) {
    if (r.feature_names.size() > names.size()) names = r.feature_names;
  }
  const double plot_h = 200.0;
  const double left = 50.0;
  const double top = 40.0;
  const double bar_w = 14.0;
  const double group_w = bar_w * static_cast<double>(std::max<std::size_t>(reports.size(), 1)) + 16.0;
  const double width = left + group_w * static_cast<double>(names.size()) + 20.0;
  const double height = top + plot_h + 90.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fixed(width, 0)
    << "\" height=\"" << Fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << Fixed(left, 0) << "\" y=\"20\" font-size=\"14\">" << XmlEscape(title)
    << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = top + plot_h - plot_h * t / 4.0;
    s << "<line x1=\"" << Fixed(left, 1) << "\" y1=\"" << Fixed(y, 1) << "\" x2=\""
      << Fixed(width - 10.0, 1) << "\" y2=\"" << Fixed(y, 1) << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << Fixed(left - 6.0, 1) << "\" y=\"" << Fixed(y + 4.0, 1)
      << "\" text-anchor=\"end\">" << Fixed(t / 4.0, 2) << "</text>\n";
  }
  for (std::size_t f = 0; f < names.size(); ++f) {
    const double gx = left + 8.0 + group_w * static_cast<double>(f);
    for (std::size_t m = 0; m < reports.size(); ++m) {
      const double rate = f < reports[m].utilization.size() ? reports[m].utilization[f] : 0.0;
      const double h = plot_h * rate;
      s << "<rect x=\"" << Fixed(gx + bar_w * static_cast<double>(m), 1) << "\" y=\""
        << Fixed(top + plot_h - h, 1) << "\" width=\"" << Fixed(bar_w - 2.0, 1)
        << "\" height=\"" << Fixed(h, 1) << "\" fill=\"" << kColors[m % 5] << "\"/>\n";
    }
    s << "<text x=\"" << Fixed(gx, 1) << "\" y=\"" << Fixed(top + plot_h + 14.0, 1)
      << "\">" << XmlEscape(names[f]) << "</text>\n";
  }
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const double y = top + plot_h + 34.0 + 14.0 * static_cast<double>(m);
    s << "<rect x=\"" << Fixed(left, 1) << "\" y=\"" << Fixed(y - 9.0, 1)
      << "\" width=\"10\" height=\"10\" fill=\"" << kColors[m % 5] << "\"/>\n";
    s << "<text x=\"" << Fixed(left + 14.0, 1) << "\" y=\"" << Fixed(y, 1) << "\">"
      << XmlEscape(reports[m].method) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace tabcf
