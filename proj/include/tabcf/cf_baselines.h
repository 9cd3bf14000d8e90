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
#ifndef TABCF_CF_BASELINES_H_
#define TABCF_CF_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tabcf/cf_result.h"
#include "tabcf/classifier.h"
#include "tabcf/schema.h"

namespace tabcf {

enum class BaselineMethod { kWachter, kDiceLike };

std::string MethodName(BaselineMethod m);

struct BaselineConfig {
  double distance_weight = 1.0;
  double reg_weight = 1.0;  // dice_like only
  std::size_t max_steps = 5000;
  double learning_rate = 0.05;
  double tolerance = 1e-5;
  std::size_t window = 10;

  void Validate() const;
};

// One-hot at the argmax, ties to the lowest index.
std::vector<double> DiscretizeOneHot(std::span<const double> block);

// | sum(block) - 1 |
double OneHotRegularization(std::span<const double> block);

// In-place projection onto valid encodings: numericals clipped to [0,1],
// every categorical block discretised.
void ProjectToEncoding(const TableSchema& schema, std::span<double> x);

// Input-space search over the numerical block only; categoricals stay at
// x0's values.
CFResult WachterGenerate(std::span<const double> x0, const TableSchema& schema,
                         const Classifier& clf, const BaselineConfig& cfg,
                         std::size_t instance_id);

// Input-space search over the full vector with the one-hot regulariser and
// discretisation after every step.
CFResult DiceLikeGenerate(std::span<const double> x0, const TableSchema& schema,
                          const Classifier& clf, const BaselineConfig& cfg,
                          std::size_t instance_id);

// One raw dice_like update (gradient step then projection) from x; exposed to
// test the discretisation mechanism in isolation.
std::vector<double> DiceLikeStep(std::span<const double> x,
                                 std::span<const double> x0,
                                 const TableSchema& schema, const Classifier& clf,
                                 const BaselineConfig& cfg);

std::vector<CFResult> BatchGenerateBaseline(BaselineMethod method, const Tensor& rows,
                                            std::span<const std::size_t> instance_ids,
                                            const TableSchema& schema,
                                            const Classifier& clf,
                                            const BaselineConfig& cfg,
                                            std::size_t workers = 1);

}  // namespace tabcf

#endif  // TABCF_CF_BASELINES_H_
