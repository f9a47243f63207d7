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
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "sparsefl/coordinator.hpp"
#include "sparsefl/field.hpp"
#include "sparsefl/messages.hpp"
#include "sparsefl/model.hpp"
#include "sparsefl/permutation.hpp"

namespace sparsefl {

using UpdateHistogram = std::map<PermutedAddress, std::size_t>;

namespace stream {
inline constexpr std::uint64_t kDownlinkBase = 1000;
}  // namespace stream

/// Picks P*r' permuted addresses. With history: highest counts first, ties
/// to the lexicographically smaller address. Without history: a uniform
/// random choice from a generator keyed on (seed, round) so every database
/// makes the same choice.
inline ReadSelection select_downlink(const UpdateHistogram& previous, const ModelConfig& cfg,
                                     std::size_t round, std::uint64_t seed) {
  const std::size_t want = cfg.downlink_count();
  std::vector<PermutedAddress> all;
  for (std::size_t seg = 1; seg <= cfg.B; ++seg) {
    for (std::size_t sub = 1; sub <= cfg.segment_size(); ++sub) all.push_back({seg, sub});
  }
  if (want > all.size()) throw std::invalid_argument("select_downlink: P*r' exceeds P");
  ReadSelection sel;
  if (previous.empty()) {
    auto rng = make_rng(seed, stream::kDownlinkBase + round);
    std::shuffle(all.begin(), all.end(), rng);
    sel.addresses.assign(all.begin(), all.begin() + static_cast<long>(want));
  } else {
    auto count_of = [&](const PermutedAddress& a) {
      auto it = previous.find(a);
      return it == previous.end() ? std::size_t{0} : it->second;
    };
    // `all` is already in lexicographic order
    std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
      return count_of(a) > count_of(b);
    });
    sel.addresses.assign(all.begin(), all.begin() + static_cast<long>(want));
  }
  std::sort(sel.addresses.begin(), sel.addresses.end());
  return sel;
}

/// One non-colluding database. Owns its storage and reversing matrices and
/// only ever handles permuted addresses.
class DatabaseNode {
 public:
  DatabaseNode(ModelConfig cfg, DatabasePackage pkg)
      : cfg_(std::move(cfg)),
        field_(cfg_.field.field()),
        n_(pkg.n),
        within_(std::move(pkg.within)),
        segment_(std::move(pkg.segment)),
        storage_(std::move(pkg.storage)),
        scale_(gamma_inverse_diagonal(cfg_.field, n_)) {
    if (n_ < 1 || n_ > cfg_.N) throw std::invalid_argument("database index out of range");
    if (within_.size() != cfg_.B || storage_.size() != cfg_.L()) {
      throw DimensionError("database package does not match the config");
    }
    if (cfg_.scheme == SchemeCase::kCase2) {
      if (!segment_) throw std::invalid_argument("case 2 database needs a segment matrix");
      combined_ = combine_matrices(cfg_, within_, *segment_);
    }
  }

  std::size_t index() const noexcept { return n_; }
  Fq alpha() const { return cfg_.field.alpha.at(n_ - 1); }
  const ModelConfig& config() const noexcept { return cfg_; }
  const std::vector<Fq>& storage() const noexcept { return storage_; }
  const std::vector<Matrix>& within_matrices() const noexcept { return within_; }
  const std::optional<Matrix>& segment_matrix() const noexcept { return segment_; }
  const std::optional<Matrix>& combined_matrix() const noexcept { return combined_; }

  /// Histogram of the last completed round; the basis for downlink selection.
  const UpdateHistogram& previous_histogram() const noexcept { return previous_; }
  const UpdateHistogram& current_histogram() const noexcept { return current_; }
  void set_previous_histogram(UpdateHistogram h) { previous_ = std::move(h); }

  ReadSelection select_downlink(std::size_t round, std::uint64_t seed) const {
    return sparsefl::select_downlink(previous_, cfg_, round, seed);
  }

  /// Case1: column sum of R_n^[seg] over the target block (length P*ell/B).
  /// Case2: diag(Gamma_n^{-1}) times the column sum of the combined matrix
  /// over the target block (length L).
  ReadQuery build_read_query(PermutedAddress target) const {
    check_address(target);
    const std::size_t ell = cfg_.ell;
    ReadQuery q{target, {}};
    if (cfg_.scheme == SchemeCase::kCase1) {
      const Matrix& r = within_[target.segment - 1];
      q.vector.assign(r.rows(), Fq{});
      const std::size_t c0 = (target.subpacket - 1) * ell;
      for (std::size_t row = 0; row < r.rows(); ++row) {
        Fq s{};
        for (std::size_t k = 0; k < ell; ++k) s = field_.add(s, r(row, c0 + k));
        q.vector[row] = s;
      }
    } else {
      const Matrix& r = *combined_;
      q.vector.assign(r.rows(), Fq{});
      const std::size_t c0 =
          (target.segment - 1) * cfg_.segment_symbols() + (target.subpacket - 1) * ell;
      for (std::size_t row = 0; row < r.rows(); ++row) {
        Fq s{};
        for (std::size_t k = 0; k < ell; ++k) s = field_.add(s, r(row, c0 + k));
        q.vector[row] = field_.mul(scale_[row % ell], s);
      }
    }
    return q;
  }

  /// Dot product of the query with the diag(Gamma_n^{-1})-scaled storage.
  /// In Case2 that scaling is already part of the query, so the storage is
  /// used as is.
  Fq answer_read(const ReadQuery& query) const {
    check_address(query.target);
    Fq acc{};
    if (cfg_.scheme == SchemeCase::kCase1) {
      const std::size_t block = cfg_.segment_symbols();
      if (query.vector.size() != block) throw DimensionError("answer_read: query length");
      const std::size_t base = (query.target.segment - 1) * block;
      for (std::size_t r = 0; r < block; ++r) {
        const Fq scaled = field_.mul(scale_[r % cfg_.ell], storage_[base + r]);
        acc = field_.add(acc, field_.mul(scaled, query.vector[r]));
      }
    } else {
      if (query.vector.size() != cfg_.L()) throw DimensionError("answer_read: query length");
      acc = dot(field_, storage_, query.vector);
    }
    return acc;
  }

  /// Un-permutes one user's tuples through the reversing matrices and adds
  /// the incremental update to storage.
  void apply_write(std::span<const UpdateTuple> tuples) {
    std::set<PermutedAddress> seen;
    for (const auto& t : tuples) {
      check_address(t.address);
      if (!seen.insert(t.address).second) {
        throw std::invalid_argument("apply_write: duplicate permuted address in one user's tuples");
      }
    }
    const std::size_t ell = cfg_.ell;
    const std::size_t block = cfg_.segment_symbols();
    if (cfg_.scheme == SchemeCase::kCase1) {
      for (std::size_t seg = 1; seg <= cfg_.B; ++seg) {
        std::vector<Fq> hat(block);
        bool any = false;
        for (const auto& t : tuples) {
          if (t.address.segment != seg) continue;
          any = true;
          std::fill_n(hat.begin() + static_cast<long>((t.address.subpacket - 1) * ell), ell, t.u);
        }
        if (!any) continue;
        const auto incr = mat_vec(field_, within_[seg - 1], hat);
        const std::size_t base = (seg - 1) * block;
        for (std::size_t r = 0; r < block; ++r) {
          storage_[base + r] = field_.add(storage_[base + r], incr[r]);
        }
      }
    } else {
      std::vector<Fq> hat(cfg_.L());
      for (const auto& t : tuples) {
        const std::size_t off = (t.address.segment - 1) * block + (t.address.subpacket - 1) * ell;
        std::fill_n(hat.begin() + static_cast<long>(off), ell, t.u);
      }
      const auto incr = mat_vec(field_, *combined_, hat);
      for (std::size_t r = 0; r < cfg_.L(); ++r) storage_[r] = field_.add(storage_[r], incr[r]);
    }
    for (const auto& t : tuples) ++current_[t.address];
  }

  /// Closes a round: this round's histogram becomes the selection basis.
  void end_round() {
    previous_ = std::move(current_);
    current_.clear();
  }

 private:
  void check_address(PermutedAddress a) const {
    if (!cfg_.in_range(a.segment, a.subpacket)) {
      throw std::out_of_range("permuted address out of range");
    }
  }

  ModelConfig cfg_;
  PrimeField field_;
  std::size_t n_;
  std::vector<Matrix> within_;
  std::optional<Matrix> segment_;
  std::optional<Matrix> combined_;
  std::vector<Fq> storage_;
  std::vector<Fq> scale_;  // f_i - alpha_n
  UpdateHistogram previous_;
  UpdateHistogram current_;
};

}  // namespace sparsefl
