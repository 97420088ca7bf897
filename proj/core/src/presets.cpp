/*
 * Copyright 2026 The defedavg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "defedavg/presets.hpp"

#include <algorithm>

namespace defedavg {

const std::vector<RatePreset>& rate_presets() {
  // Tuned-rate table, one cell per (algorithm, dataset, n). The AsySG cells
  // carry their single rate in eta_bar (eta is fixed to 1).
  static const std::vector<RatePreset> table = {
      // IID FedAvg
      {"fedavg_iid/fashionmnist/n10", 1.00, 0.10},
      {"fedavg_iid/fashionmnist/n20", 1.00, 0.01},
      {"fedavg_iid/fashionmnist/n40", 1.00, 0.01},
      {"fedavg_iid/fashionmnist/n80", 1.00, 0.01},
      {"fedavg_iid/cifar10/n10", 1.00, 0.01},
      {"fedavg_iid/cifar10/n20", 1.00, 0.01},
      {"fedavg_iid/cifar10/n40", 1.00, 0.01},
      {"fedavg_iid/cifar10/n80", 1.00, 0.01},
      // IID AsySG
      {"asysg/fashionmnist/n10", 1.0, 0.10},
      {"asysg/fashionmnist/n20", 1.0, 0.10},
      {"asysg/fashionmnist/n40", 1.0, 0.10},
      {"asysg/fashionmnist/n80", 1.0, 0.10},
      {"asysg/cifar10/n10", 1.0, 0.10},
      {"asysg/cifar10/n20", 1.0, 0.10},
      {"asysg/cifar10/n40", 1.0, 0.10},
      {"asysg/cifar10/n80", 1.0, 0.10},
      // IID DeFedAvg
      {"defedavg_iid/fashionmnist/n5", 0.10, 0.05},
      {"defedavg_iid/fashionmnist/n10", 0.10, 0.05},
      {"defedavg_iid/fashionmnist/n20", 0.10, 0.05},
      {"defedavg_iid/fashionmnist/n40", 0.10, 0.05},
      {"defedavg_iid/fashionmnist/n80", 1.00, 0.10},
      {"defedavg_iid/cifar10/n5", 0.10, 0.05},
      {"defedavg_iid/cifar10/n10", 1.00, 0.05},
      {"defedavg_iid/cifar10/n20", 0.10, 0.01},
      {"defedavg_iid/cifar10/n40", 0.10, 0.05},
      {"defedavg_iid/cifar10/n80", 1.00, 0.01},
      // non-IID FedAvg
      {"fedavg_niid/fashionmnist/n10", 0.10, 0.05},
      {"fedavg_niid/fashionmnist/n20", 0.10, 0.05},
      {"fedavg_niid/fashionmnist/n40", 1.00, 0.01},
      {"fedavg_niid/fashionmnist/n80", 0.10, 0.10},
      {"fedavg_niid/cifar10/n10", 1.00, 0.01},
      {"fedavg_niid/cifar10/n20", 1.00, 0.01},
      {"fedavg_niid/cifar10/n40", 0.10, 0.05},
      {"fedavg_niid/cifar10/n80", 0.10, 0.05},
      // non-IID FedBuff
      {"fedbuff/fashionmnist/n10", 0.10, 0.005},
      {"fedbuff/fashionmnist/n20", 0.10, 0.01},
      {"fedbuff/fashionmnist/n40", 0.10, 0.01},
      {"fedbuff/fashionmnist/n80", 0.10, 0.05},
      {"fedbuff/cifar10/n10", 0.10, 0.01},
      {"fedbuff/cifar10/n20", 0.10, 0.01},
      {"fedbuff/cifar10/n40", 0.10, 0.01},
      {"fedbuff/cifar10/n80", 0.10, 0.05},
      // non-IID DeFedAvg
      {"defedavg_niid/fashionmnist/n5", 0.10, 0.05},
      {"defedavg_niid/fashionmnist/n10", 0.10, 0.05},
      {"defedavg_niid/fashionmnist/n20", 0.10, 0.05},
      {"defedavg_niid/fashionmnist/n40", 0.10, 0.05},
      {"defedavg_niid/fashionmnist/n80", 0.10, 0.05},
      {"defedavg_niid/cifar10/n5", 0.10, 0.05},
      {"defedavg_niid/cifar10/n10", 0.10, 0.05},
      {"defedavg_niid/cifar10/n20", 0.10, 0.10},
      {"defedavg_niid/cifar10/n40", 0.10, 0.05},
      {"defedavg_niid/cifar10/n80", 0.10, 0.05},
  };
  return table;
}

std::optional<RatePreset> find_rate_preset(std::string_view name) {
  const auto& table = rate_presets();
  auto it = std::find_if(table.begin(), table.end(), [&](const RatePreset& p) { return p.name == name; });
  if (it == table.end()) return std::nullopt;
  return *it;
}

std::optional<SystemModel> system_preset(std::string_view name) {
  SystemModel m;
  if (name == "analytic") return m;
  if (name == "fashionmnist") {
    m.flops_per_iter = 17.0e6;
    m.model_bytes = 2.2e6;
    return m;
  }
  if (name == "cifar10") {
    m.flops_per_iter = 31.4e6;
    m.model_bytes = 3.53e6;
    return m;
  }
  return std::nullopt;
}

std::optional<double> accuracy_target(std::string_view dataset, bool iid) {
  if (dataset == "fashionmnist") return iid ? 0.90 : 0.80;
  if (dataset == "cifar10") return iid ? 0.70 : 0.60;
  return std::nullopt;
}

}  // namespace defedavg
