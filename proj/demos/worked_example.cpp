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

// Replays the two small reference settings: fixed permutations, one user,
// one write, then a full private decode of the storage.

#include <iostream>
#include <vector>

#include "sparsefl/sparsefl.hpp"

namespace {

using namespace sparsefl;

std::ostream& operator<<(std::ostream& os, const RealAddress& a) {
  return os << "(" << a.segment << "," << a.subpacket << ")";
}

std::ostream& operator<<(std::ostream& os, const PermutedAddress& a) {
  return os << "(" << a.segment << "," << a.subpacket << ")";
}

bool replay(const char* title, const ModelConfig& cfg, const PermutationBundle& bundle,
            const std::vector<RealAddress>& writes) {
  std::cout << "== " << title << ": P=" << cfg.P << " B=" << cfg.B << " N=" << cfg.N
            << " ell=" << cfg.ell << "\n";
  const PrimeField field = cfg.field.field();
  std::mt19937_64 rng(2026);
  GlobalModel model = GlobalModel::random(cfg, rng);
  const InitPackage init = initialize(cfg, model, 11, bundle);
  std::vector<DatabaseNode> dbs;
  for (const auto& pkg : init.db_packages) dbs.emplace_back(cfg, pkg);

  SparseUpdateSet sparse;
  for (auto a : writes) {
    SparseUpdate up{a, {}};
    for (std::size_t k = 0; k < cfg.ell; ++k) up.delta.push_back(field.random_nonzero(rng));
    sparse.entries.push_back(up);
  }
  const auto streams = prepare_write(cfg, bundle, sparse, rng);
  std::cout << "write tuples (permuted addresses):";
  for (const auto& t : streams.front()) std::cout << " " << t.address;
  std::cout << "\n";
  for (auto& db : dbs) db.apply_write(streams[db.index() - 1]);
  for (const auto& e : sparse.entries) {
    const std::size_t s = cfg.global_index(e.address);
    for (std::size_t k = 0; k < cfg.ell; ++k) model.W(s, k) = field.add(model.W(s, k), e.delta[k]);
  }

  bool ok = true;
  for (std::size_t seg = 1; seg <= cfg.B; ++seg) {
    for (std::size_t sub = 1; sub <= cfg.segment_size(); ++sub) {
      const PermutedAddress p{seg, sub};
      const RealAddress real = map_permuted_to_real(bundle, p, cfg.scheme);
      const bool match = private_read(cfg, dbs, p) == model.subpacket(cfg.global_index(real));
      ok = ok && match;
      std::cout << "  read " << p << " -> real " << real << (match ? "  ok" : "  MISMATCH") << "\n";
    }
  }
  std::cout << (ok ? "all subpackets decode to the updated model\n" : "decode mismatch\n");
  return ok;
}

}  // namespace

int main() {
  const bool a = replay(
      "case 1", ModelConfig::make(SchemeCase::kCase1, 15, 3, 3, 4.0 / 15.0, 2.0 / 15.0),
      {{Permutation({2, 1, 4, 5, 3}), Permutation({3, 5, 2, 4, 1}), Permutation({5, 2, 3, 1, 4})},
       std::nullopt},
      {{1, 2}, {1, 4}, {2, 2}, {3, 5}});
  const bool b = replay(
      "case 2", ModelConfig::make(SchemeCase::kCase2, 12, 3, 3, 0.25, 0.25),
      {{Permutation({2, 4, 3, 1}), Permutation({1, 3, 2, 4}), Permutation({3, 1, 4, 2})},
       Permutation({2, 3, 1})},
      {{1, 2}, {2, 1}, {3, 3}});
  return a && b ? 0 : 1;
}
