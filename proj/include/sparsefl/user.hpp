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

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "sparsefl/coordinator.hpp"
#include "sparsefl/field.hpp"
#include "sparsefl/messages.hpp"
#include "sparsefl/model.hpp"
#include "sparsefl/permutation.hpp"

namespace sparsefl {

namespace detail {
inline void check_bundle_address(const PermutationBundle& bundle, std::size_t segment,
                                 std::size_t subpacket) {
  if (segment < 1 || segment > bundle.within.size() || subpacket < 1 ||
      subpacket > bundle.within[segment - 1].size()) {
    throw std::out_of_range("address out of range for the permutation bundle");
  }
}
}  // namespace detail

/// Case1: segment is kept, subpacket = P~_seg(eta_p).
/// Case2: segment = P^(phi_p), subpacket = P~_segment(eta_p).
inline RealAddress map_permuted_to_real(const PermutationBundle& bundle, PermutedAddress p,
                                        SchemeCase scheme) {
  detail::check_bundle_address(bundle, p.segment, p.subpacket);
  std::size_t seg = p.segment;
  if (scheme == SchemeCase::kCase2) {
    if (!bundle.segmentwise) throw std::invalid_argument("case 2 needs a segment permutation");
    seg = (*bundle.segmentwise)(p.segment);
  }
  return {seg, bundle.within[seg - 1](p.subpacket)};
}

inline PermutedAddress map_real_to_permuted(const PermutationBundle& bundle, RealAddress a,
                                            SchemeCase scheme) {
  detail::check_bundle_address(bundle, a.segment, a.subpacket);
  const std::size_t sub = bundle.within[a.segment - 1].inverse(a.subpacket);
  std::size_t seg = a.segment;
  if (scheme == SchemeCase::kCase2) {
    if (!bundle.segmentwise) throw std::invalid_argument("case 2 needs a segment permutation");
    seg = bundle.segmentwise->inverse(a.segment);
  }
  return {seg, sub};
}

/// U_n = sum_k prod_{r!=k}(f_r - alpha_n) D_k + prod_r (f_r - alpha_n) z,
/// with D_k = delta_k / prod_{r!=k}(f_r - f_k). `n` is 1-based.
inline Fq combine_update(const FieldConfig& fc, std::span<const Fq> delta, Fq z,
                         std::size_t n) {
  if (delta.size() != fc.f.size()) throw DimensionError("combine_update: delta width");
  const PrimeField field = fc.field();
  const Fq alpha = fc.alpha.at(n - 1);
  const std::size_t ell = fc.f.size();
  Fq total{};
  Fq full = field.one();
  for (std::size_t r = 0; r < ell; ++r) full = field.mul(full, field.sub(fc.f[r], alpha));
  for (std::size_t k = 0; k < ell; ++k) {
    Fq at_alpha = field.one();
    Fq at_fk = field.one();
    for (std::size_t r = 0; r < ell; ++r) {
      if (r == k) continue;
      at_alpha = field.mul(at_alpha, field.sub(fc.f[r], alpha));
      at_fk = field.mul(at_fk, field.sub(fc.f[r], fc.f[k]));
    }
    total = field.add(total, field.mul(at_alpha, field.div(delta[k], at_fk)));
  }
  return field.add(total, field.mul(full, z));
}

/// N x N decoding system. Row n: [1/(f_1-a_n) .. 1/(f_ell-a_n), 1, a_n, ..,
/// a_n^{N-ell-1}].
inline Matrix decode_matrix(const FieldConfig& fc) {
  const PrimeField field = fc.field();
  const std::size_t ell = fc.f.size();
  const std::size_t n_db = fc.alpha.size();
  if (n_db <= ell) throw DimensionError("decode_matrix: need more databases than symbols");
  Matrix m(n_db, n_db);
  for (std::size_t n = 0; n < n_db; ++n) {
    for (std::size_t k = 0; k < ell; ++k) m(n, k) = field.inv(field.sub(fc.f[k], fc.alpha[n]));
    Fq p = field.one();
    for (std::size_t j = ell; j < n_db; ++j) {
      m(n, j) = p;
      p = field.mul(p, fc.alpha[n]);
    }
  }
  return m;
}

/// Recovers the ell symbols of one subpacket from the N answers.
/// Throws SingularMatrixError when the constants do not give a full-rank
/// system.
inline std::vector<Fq> decode_subpacket(const FieldConfig& fc, std::span<const Fq> answers) {
  if (answers.size() != fc.alpha.size()) {
    throw DimensionError("decode_subpacket: need one answer per database");
  }
  auto sol = solve_linear(fc.field(), decode_matrix(fc),
                          std::vector<Fq>(answers.begin(), answers.end()));
  sol.resize(fc.f.size());
  return sol;
}

/// Per-database tuple streams for one user's sparse update. Index n-1 holds
/// the stream for database n; each stream is sorted by permuted address so
/// the arrival order says nothing about real order.
template <class Rng>
std::vector<std::vector<UpdateTuple>> prepare_write(const ModelConfig& cfg,
                                                    const PermutationBundle& bundle,
                                                    const SparseUpdateSet& sparse, Rng& rng) {
  validate_sparse_set(cfg, sparse);
  const PrimeField field = cfg.field.field();
  std::vector<std::vector<UpdateTuple>> out(cfg.N);
  for (const auto& entry : sparse.entries) {
    const PermutedAddress addr = map_real_to_permuted(bundle, entry.address, cfg.scheme);
    const Fq z = field.random(rng);
    for (std::size_t n = 1; n <= cfg.N; ++n) {
      out[n - 1].push_back({combine_update(cfg.field, entry.delta, z, n), addr});
    }
  }
  for (auto& s : out) {
    std::sort(s.begin(), s.end(),
              [](const UpdateTuple& a, const UpdateTuple& b) { return a.address < b.address; });
  }
  return out;
}

inline std::vector<std::vector<UpdateTuple>> prepare_write(const ModelConfig& cfg,
                                                           const PermutationBundle& bundle,
                                                           const SparseUpdateSet& sparse,
                                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return prepare_write(cfg, bundle, sparse, rng);
}

}  // namespace sparsefl
