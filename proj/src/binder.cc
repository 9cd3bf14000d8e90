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
#include "tabcf/binder.h"

#include <map>

namespace tabcf {

void PullGradients(const Binder& binder, const NamedTensors& params) {
  std::map<const Tensor*, std::vector<ad::Var>> by_address;
  for (const auto& [t, v] : binder.bound()) by_address[t].push_back(v);
  const ad::Tape& tape = binder.tape();
  for (const auto& [name, t] : params) {
    std::vector<double> g(t->size(), 0.0);
    auto it = by_address.find(t);
    if (it != by_address.end()) {
      for (const ad::Var& v : it->second) {
        const auto gv = tape.grad(v);
        for (std::size_t i = 0; i < gv.size(); ++i) g[i] += gv[i];
      }
    }
    t->grad = std::move(g);
  }
}

}  // namespace tabcf
