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
#ifndef TABCF_METRICS_H_
#define TABCF_METRICS_H_

// Metrics are computed in input space on (x0, x') pairs. Sparsity,
// proximity and utilization are defined over valid counterfactuals only;
// with no valid counterfactual the sparsity and proximity cells are absent
// and every utilization rate is 0.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabcf/cf_result.h"
#include "tabcf/classifier.h"
#include "tabcf/dataset.h"
#include "tabcf/schema.h"

namespace tabcf {

inline constexpr double kDefaultEpsNum = 1e-4;

// Per-feature change indicator in feature order (numericals first).
struct ChangeMask {
  std::vector<bool> numerical;
  std::vector<bool> categorical;
};

// Numerical j changed iff |x1_j - x0_j| > eps_num (encoded space);
// categorical i changed iff the block argmax differs.
ChangeMask ComputeChangeMask(const TableSchema& schema, std::span<const double> x0,
                             std::span<const double> x1, double eps_num);

// f(x') = 1 per result, from the classifier rather than the stored flag.
std::vector<bool> RecomputeValidity(const std::vector<CFResult>& results,
                                    const Classifier& clf);

// n_val / n; DataError when n = 0.
double Validity(const std::vector<bool>& valid);

// Mean changed fraction of the chosen kind; nullopt with no masks or no
// features of that kind.
std::optional<double> SparsityNum(std::span<const ChangeMask> masks);
std::optional<double> SparsityCat(std::span<const ChangeMask> masks);

// Mean over pairs of sum_j |std(raw(x0_j)) - std(raw(x1_j))|; nullopt with no
// pairs or no numerical features.
std::optional<double> ProximityNum(std::span<const std::vector<double>> originals,
                                   std::span<const std::vector<double>> counterfactuals,
                                   const Preprocessor& pre);

// Fraction of masks in which each feature changed, in feature order; all 0
// for an empty mask list.
std::vector<double> FeatureUtilization(std::span<const ChangeMask> masks,
                                       std::size_t num_numerical,
                                       std::size_t num_categorical);

struct MetricsReport {
  std::string method;
  std::string dataset;
  std::size_t n = 0;
  std::size_t n_val = 0;
  double validity = 0.0;
  std::optional<double> sparsity_cat;
  std::optional<double> sparsity_num;
  std::optional<double> proximity_num;
  std::vector<std::string> feature_names;  // feature order
  std::size_t num_numerical = 0;
  std::vector<double> utilization;
  double eps_num = kDefaultEpsNum;

  double MeanUtilizationNumerical() const;
  double MeanUtilizationCategorical() const;
};

// Full report for one method. sparsity_cat is not applicable ("-") for the
// wachter method, whose categoricals are frozen by construction.
MetricsReport Evaluate(const std::string& method, const std::string& dataset,
                       const std::vector<CFResult>& results, const Classifier& clf,
                       const Preprocessor& pre, double eps_num = kDefaultEpsNum);

// Cell-wise arithmetic mean over reports of one method. Optional cells
// average over the reports that have them. Utilization is kept only when
// all reports share the same features.
MetricsReport AverageReports(const std::vector<MetricsReport>& reports);

nlohmann::ordered_json ReportToJson(const MetricsReport& r);
MetricsReport ReportFromJson(const nlohmann::ordered_json& j);

// Aligned table: Method, Dataset, n, n_val, Validity, Sparsity Cat,
// Sparsity Num, Proximity Num. Absent cells print "-".
std::string FormatReportTable(const std::vector<MetricsReport>& reports);

// Grouped bar chart of per-feature utilization, one colour per report.
std::string UtilizationSvg(const std::vector<MetricsReport>& reports,
                           const std::string& title);

}  // namespace tabcf

#endif  // TABCF_METRICS_H_
