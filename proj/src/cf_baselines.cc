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
#include "tabcf/cf_baselines.h"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tabcf/autodiff.h"
#include "tabcf/binder.h"
#include "tabcf/errors.h"

namespace tabcf {

std::string MethodName(BaselineMethod m) {
  return m == BaselineMethod::kWachter ? "wachter" : "dice_like";
}

void BaselineConfig::Validate() const {
  if (!(distance_weight >= 0.0)) throw ConfigError("baseline.distance_weight must be >= 0");
  if (!(reg_weight >= 0.0)) throw ConfigError("baseline.reg_weight must be >= 0");
  if (max_steps == 0) throw ConfigError("baseline.max_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("baseline.learning_rate must be > 0");
  if (!(tolerance >= 0.0)) throw ConfigError("baseline.tolerance must be >= 0");
  if (window == 0) throw ConfigError("baseline.window must be >= 1");
}

std::vector<double> DiscretizeOneHot(std::span<const double> block) {
  if (block.empty()) throw ShapeError("discretize: empty block");
  std::vector<double> out(block.size(), 0.0);
  out[static_cast<std::size_t>(std::max_element(block.begin(), block.end()) -
                               block.begin())] = 1.0;
  return out;
}

double OneHotRegularization(std::span<const double> block) {
  double s = 0.0;
  for (double v : block) s += v;
  return std::abs(s - 1.0);
}

void ProjectToEncoding(const TableSchema& schema, std::span<double> x) {
  for (std::size_t j = 0; j < schema.num_numerical(); ++j) x[j] = std::clamp(x[j], 0.0, 1.0);
  for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
    auto block = x.subspan(schema.block_offset(i), schema.block_size(i));
    const std::vector<double> hot = DiscretizeOneHot(block);
    std::copy(hot.begin(), hot.end(), block.begin());
  }
}

namespace {

struct StepState {
  LossComponents loss;
  double logit = 0.0;
  std::vector<double> next;  // x after update and projection
};

// Evaluates the loss at x and, when update is set, takes one projected step.
StepState Evaluate(BaselineMethod method, std::span<const double> x,
                   std::span<const double> x0, const TableSchema& schema,
                   const Classifier& clf, const BaselineConfig& cfg, bool update) {
  const std::size_t k = x.size();
  ad::Tape tape;
  Binder bind(tape, false);
  Tensor xt({k}, std::vector<double>(x.begin(), x.end()));
  xt.requires_grad = true;
  const Tensor x0t({k}, std::vector<double>(x0.begin(), x0.end()));
  ad::Var xv = tape.Param(xt);
  ad::Var logit = clf.Logit(xv, bind);
  ad::Var hinge = ad::MaxWithConst(ad::AddScalar(-logit, 1.0), 0.0);
  ad::Var dist = ad::Sum(ad::Abs(tape.ConstantRef(x0t) - xv));
  ad::Var total = hinge + ad::Scale(dist, cfg.distance_weight);
  StepState st;
  if (method == BaselineMethod::kDiceLike && schema.num_categorical() > 0) {
    ad::Var reg = tape.Constant(Tensor::Scalar(0.0));
    for (std::size_t i = 0; i < schema.num_categorical(); ++i) {
      ad::Var block = ad::SliceRows(xv, schema.block_offset(i), schema.block_size(i));
      reg = reg + ad::Abs(ad::AddScalar(ad::Sum(block), -1.0));
    }
    st.loss.regularization = reg.value().item();
    total = total + ad::Scale(reg, cfg.reg_weight);
  }
  st.logit = logit.value().item();
  st.loss.validity = hinge.value().item();
  st.loss.input_proximity = dist.value().item();
  st.loss.total = total.value().item();
  if (!update) return st;

  tape.Backward(total);
  st.next.assign(x.begin(), x.end());
  if (xt.grad) {
    const auto& g = *xt.grad;
    const std::size_t limit =
        method == BaselineMethod::kWachter ? schema.num_numerical() : k;
    for (std::size_t i = 0; i < limit; ++i) st.next[i] -= cfg.learning_rate * g[i];
  }
  if (method == BaselineMethod::kWachter) {
    for (std::size_t j = 0; j < schema.num_numerical(); ++j) {
      st.next[j] = std::clamp(st.next[j], 0.0, 1.0);
    }
  } else {
    ProjectToEncoding(schema, st.next);
  }
  return st;
}

CFResult Search(BaselineMethod method, std::span<const double> x0,
                const TableSchema& schema, const Classifier& clf,
                const BaselineConfig& cfg, std::size_t instance_id) {
  cfg.Validate();
  if (x0.size() != schema.encoded_width()) {
    throw ShapeError(MethodName(method) + ": instance width " + std::to_string(x0.size()));
  }
  if (clf.Predict(x0) == 1) {
    throw ContractError("instance " + std::to_string(instance_id) +
                        " is already target class");
  }
  CFResult res;
  res.instance_id = instance_id;
  res.method = MethodName(method);
  res.original.assign(x0.begin(), x0.end());
  std::vector<double> x = res.original;
  std::deque<double> history;
  std::size_t step = 0;
  for (;; ++step) {
    StepState st = Evaluate(method, x, x0, schema, clf, cfg, true);
    if (!std::isfinite(st.loss.total)) {
      throw NumericError(res.method + " loss is non-finite for instance " +
                         std::to_string(instance_id));
    }
    if (step == 0) res.initial_loss = st.loss.total;
    res.loss = st.loss;
    res.logit = st.logit;
    history.push_back(st.loss.total);
    if (history.size() > cfg.window + 1) history.pop_front();
    const bool converged =
        history.size() == cfg.window + 1 &&
        std::abs(history.back() - history.front()) <=
            cfg.tolerance * std::max(std::abs(history.front()), 1e-12);
    if ((converged && st.logit >= 0.0) || step == cfg.max_steps) break;
    if (st.next == x) break;  // projected fixed point; the search is stuck
    x = std::move(st.next);
  }
  res.steps = step;
  res.counterfactual = std::move(x);
  res.valid = clf.Predict(res.counterfactual) == 1;
  return res;
}

}  // namespace

CFResult WachterGenerate(std::span<const double> x0, const TableSchema& schema,
                         const Classifier& clf, const BaselineConfig& cfg,
                         std::size_t instance_id) {
  return Search(BaselineMethod::kWachter, x0, schema, clf, cfg, instance_id);
}

CFResult DiceLikeGenerate(std::span<const double> x0, const TableSchema& schema,
                          const Classifier& clf, const BaselineConfig& cfg,
                          std::size_t instance_id) {
  return Search(BaselineMethod::kDiceLike, x0, schema, clf, cfg, instance_id);
}

std::vector<double> DiceLikeStep(std::span<const double> x,
                                 std::span<const double> x0,
                                 const TableSchema& schema, const Classifier& clf,
                                 const BaselineConfig& cfg) {
  return Evaluate(BaselineMethod::kDiceLike, x, x0, schema, clf, cfg, true).next;
}

std::vector<CFResult> BatchGenerateBaseline(BaselineMethod method, const Tensor& rows,
                                            std::span<const std::size_t> instance_ids,
                                            const TableSchema& schema,
                                            const Classifier& clf,
                                            const BaselineConfig& cfg,
                                            std::size_t workers) {
  const std::size_t k = schema.encoded_width();
  if (rows.rank() != 2 || rows.dim(0) != instance_ids.size() || rows.dim(1) != k) {
    throw ShapeError("batch_generate: rows/ids mismatch");
  }
  return RunBatch(
      instance_ids.size(),
      [&](std::size_t i) {
        std::span<const double> x0(&rows[i * k], k);
        if (clf.Predict(x0) == 1) {
          CFResult r;
          r.instance_id = instance_ids[i];
          r.method = MethodName(method);
          r.original.assign(x0.begin(), x0.end());
          r.counterfactual = r.original;
          r.valid = true;
          r.logit = clf.Logit(x0);
          r.status = CfStatus::kAlreadyTarget;
          return r;
        }
        return Search(method, x0, schema, clf, cfg, instance_ids[i]);
      },
      workers);
}

}  // namespace tabcf
