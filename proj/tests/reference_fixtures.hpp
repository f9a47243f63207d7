// Copyright 2026 The sparsefl authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Worked-example settings shared by the unit and acceptance tests.

#pragma once

#include "sparsefl/sparsefl.hpp"

namespace sparsefl::testing {

/// P=15, B=3, ell=3, N=8 with four uplink and two downlink subpackets.
inline ModelConfig case1_example_config(std::uint64_t q = PrimeField::kDefaultModulus) {
  return ModelConfig::make(SchemeCase::kCase1, 15, 3, 3, 4.0 / 15.0, 2.0 / 15.0, q);
}

inline PermutationBundle case1_example_bundle() {
  return {{Permutation({2, 1, 4, 5, 3}), Permutation({3, 5, 2, 4, 1}), Permutation({5, 2, 3, 1, 4})},
          std::nullopt};
}

/// P=12, B=3, ell=3, N=10 with three uplink and three downlink subpackets.
inline ModelConfig case2_example_config(std::uint64_t q = PrimeField::kDefaultModulus) {
  return ModelConfig::make(SchemeCase::kCase2, 12, 3, 3, 0.25, 0.25, q);
}

inline PermutationBundle case2_example_bundle() {
  return {{Permutation({2, 4, 3, 1}), Permutation({1, 3, 2, 4}), Permutation({3, 1, 4, 2})},
          Permutation({2, 3, 1})};
}

/// Real addresses written in the case 1 example: subpackets 2 and 4 of
/// segment 1, subpacket 2 of segment 2, subpacket 5 of segment 3.
inline std::vector<RealAddress> case1_example_writes() {
  return {{1, 2}, {1, 4}, {2, 2}, {3, 5}};
}

/// (segment, subpacket) of the case 2 example writes (2,1), (1,2), (3,3)
/// given there as (subpacket, segment).
inline std::vector<RealAddress> case2_example_writes() {
  return {{1, 2}, {2, 1}, {3, 3}};
}

template <class Rng>
SparseUpdateSet random_updates(const ModelConfig& cfg, const std::vector<RealAddress>& where,
                               Rng& rng) {
  const PrimeField field = cfg.field.field();
  SparseUpdateSet set;
  for (auto a : where) {
    SparseUpdate up{a, {}};
    for (std::size_t k = 0; k < cfg.ell; ++k) up.delta.push_back(field.random_nonzero(rng));
    set.entries.push_back(up);
  }
  return set;
}

inline std::vector<DatabaseNode> make_nodes(const InitPackage& pkg) {
  std::vector<DatabaseNode> nodes;
  for (const auto& p : pkg.db_packages) nodes.emplace_back(pkg.config, p);
  return nodes;
}

}  // namespace sparsefl::testing
