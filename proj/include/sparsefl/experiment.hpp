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

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsefl/analytics.hpp"
#include "sparsefl/config_file.hpp"
#include "sparsefl/coordinator.hpp"
#include "sparsefl/database.hpp"
#include "sparsefl/messages.hpp"
#include "sparsefl/model.hpp"
#include "sparsefl/permutation.hpp"
#include "sparsefl/user.hpp"

namespace sparsefl {

/// Raised when a decode disagrees with the plaintext shadow model.
class CorrectnessError : public std::runtime_error {
 public:
  CorrectnessError(std::size_t round, std::size_t user, RealAddress where,
                   const std::string& what)
      : std::runtime_error("correctness failure in round " + std::to_string(round) +
                           (user ? ", user " + std::to_string(user) : std::string()) +
                           ", subpacket (" + std::to_string(where.segment) + "," +
                           std::to_string(where.subpacket) + "): " + what),
        round_(round),
        user_(user),
        where_(where) {}

  std::size_t round() const noexcept { return round_; }
  std::size_t user() const noexcept { return user_; }  // 0 = storage check
  RealAddress where() const noexcept { return where_; }

 private:
  std::size_t round_;
  std::size_t user_;
  RealAddress where_;
};

struct RoundReport {
  std::size_t round = 0;
  std::vector<bool> read_correct;   // per user
  std::vector<bool> write_correct;  // per user, checked after all writes land
  CostReport costs;
  bool cost_identity_holds = false;
  std::string transcript_path;
};

/// Replay hooks. Anything left empty falls back to seeded randomness.
struct ExperimentHooks {
  std::optional<PermutationBundle> bundle;
  std::optional<GlobalModel> initial_model;
  /// Returns the sparse set a user writes in a round, or nullopt to draw one.
  std::function<std::optional<SparseUpdateSet>(std::size_t round, std::size_t user)> write_script;
};

struct ExperimentResult {
  std::vector<RoundReport> rounds;
  Transcript transcript;
  GlobalModel final_model;
};

namespace stream {
inline constexpr std::uint64_t kInitialModel = 4;
inline constexpr std::uint64_t kPopularity = 5;
inline constexpr std::uint64_t kCoordinator = 6;
inline constexpr std::uint64_t kDownlinkSeed = 7;

constexpr std::uint64_t user_round(std::size_t round, std::size_t user, std::uint64_t kind) {
  return (std::uint64_t{1} << 40U) | (static_cast<std::uint64_t>(round) << 20U) |
         (static_cast<std::uint64_t>(user) << 4U) | kind;
}
}  // namespace stream

/// Reads one permuted address from every database and decodes it.
inline std::vector<Fq> private_read(const ModelConfig& cfg, std::span<const DatabaseNode> dbs,
                                    PermutedAddress target) {
  std::vector<Fq> answers;
  answers.reserve(dbs.size());
  for (const auto& db : dbs) answers.push_back(db.answer_read(db.build_read_query(target)));
  return decode_subpacket(cfg.field, answers);
}

/// Drives users x rounds of read/write against N in-process databases and
/// checks every decode against a plaintext shadow model.
inline ExperimentResult run_experiment(const ExperimentConfig& ec,
                                       const ExperimentHooks& hooks = {}) {
  const ModelConfig& cfg = validate_config(ec.model);
  if (ec.users < 1) throw std::invalid_argument("experiment needs at least one user");
  if (ec.rounds < 1) throw std::invalid_argument("experiment needs at least one round");
  const PrimeField field = cfg.field.field();
  const std::size_t idx_symbols = index_symbol_count(cfg.P, cfg.field.q);

  ExperimentResult result;
  if (hooks.initial_model) {
    result.final_model = *hooks.initial_model;
  } else {
    auto rng = make_rng(ec.seed, stream::kInitialModel);
    result.final_model = GlobalModel::random(cfg, rng);
  }
  GlobalModel& shadow = result.final_model;

  const InitPackage init = initialize(cfg, shadow, make_rng(ec.seed, stream::kCoordinator)(), hooks.bundle);
  const PermutationBundle& bundle = init.user_bundle;
  std::vector<DatabaseNode> dbs;
  for (const auto& pkg : init.db_packages) dbs.emplace_back(cfg, pkg);

  // Fixed popularity weights so that zipf users agree on which subpackets
  // matter most.
  std::vector<double> popularity(cfg.P, 1.0);
  if (ec.magnitudes.kind == MagnitudeDistribution::Kind::kZipf) {
    std::vector<std::size_t> order(cfg.P);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(ec.seed, stream::kPopularity);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t rank = 0; rank < cfg.P; ++rank) {
      popularity[order[rank]] = 1.0 / std::pow(static_cast<double>(rank + 1), ec.magnitudes.exponent);
    }
  }
  const std::uint64_t downlink_seed = make_rng(ec.seed, stream::kDownlinkSeed)();

  for (std::size_t round = 1; round <= ec.rounds; ++round) {
    RoundReport rep;
    rep.round = round;
    Transcript round_log;

    // (1) downlink selection, identical at every database
    const ReadSelection sel = dbs.front().select_downlink(round, downlink_seed);
    for (const auto& db : dbs) {
      if (db.select_downlink(round, downlink_seed) != sel) {
        throw CorrectnessError(round, 0, {}, "databases disagree on the downlink selection");
      }
    }

    // (2) reads
    for (std::size_t u = 1; u <= ec.users; ++u) {
      round_log.append({round, Phase::kDownlinkSelect, db_name(1), user_name(u),
                        "read_selection", sel.addresses.size() * idx_symbols});
      for (const auto& target : sel.addresses) {
        for (const auto& db : dbs) {
          round_log.append({round, Phase::kRead, db_name(db.index()), user_name(u), "answer", 1});
        }
        const auto decoded = private_read(cfg, dbs, target);
        const RealAddress real = map_permuted_to_real(bundle, target, cfg.scheme);
        if (decoded != shadow.subpacket(cfg.global_index(real))) {
          throw CorrectnessError(round, u, real, "downloaded subpacket does not match the model");
        }
      }
      rep.read_correct.push_back(true);
    }

    // (3) writes
    for (std::size_t u = 1; u <= ec.users; ++u) {
      std::optional<SparseUpdateSet> scripted;
      if (hooks.write_script) scripted = hooks.write_script(round, u);
      SparseUpdateSet sparse;
      if (scripted) {
        sparse = std::move(*scripted);
      } else {
        auto rng = make_rng(ec.seed, stream::user_round(round, u, 1));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> mags(cfg.P);
        for (std::size_t s = 0; s < cfg.P; ++s) mags[s] = popularity[s] * unit(rng);
        for (std::size_t s : top_r_select(mags, cfg.uplink_count())) {
          SparseUpdate up{cfg.address_of(s - 1), {}};
          for (std::size_t k = 0; k < cfg.ell; ++k) up.delta.push_back(field.random_nonzero(rng));
          sparse.entries.push_back(std::move(up));
        }
      }
      auto pad_rng = make_rng(ec.seed, stream::user_round(round, u, 2));
      const auto streams = prepare_write(cfg, bundle, sparse, pad_rng);
      for (const auto& db : dbs) {
        const auto& tuples = streams[db.index() - 1];
        for (std::size_t t = 0; t < tuples.size(); ++t) {
          round_log.append({round, Phase::kWrite, user_name(u), db_name(db.index()),
                            "update_tuple", 1 + idx_symbols});
        }
      }
      for (auto& db : dbs) db.apply_write(streams[db.index() - 1]);
      for (const auto& e : sparse.entries) {
        const std::size_t s = cfg.global_index(e.address);
        for (std::size_t k = 0; k < cfg.ell; ++k) {
          shadow.W(s, k) = field.add(shadow.W(s, k), e.delta[k]);
        }
      }
    }

    // (4) the private storage must decode to the shadow model everywhere
    for (std::size_t seg = 1; seg <= cfg.B; ++seg) {
      for (std::size_t sub = 1; sub <= cfg.segment_size(); ++sub) {
        const PermutedAddress target{seg, sub};
        const RealAddress real = map_permuted_to_real(bundle, target, cfg.scheme);
        if (private_read(cfg, dbs, target) != shadow.subpacket(cfg.global_index(real))) {
          throw CorrectnessError(round, 0, real, "storage does not decode to the updated model");
        }
      }
    }
    rep.write_correct.assign(ec.users, true);
    for (auto& db : dbs) db.end_round();

    rep.costs = audit_costs(round_log, cfg);
    rep.cost_identity_holds = satisfies_ceil_identity(rep.costs, cfg);
    for (const auto& rec : round_log.records()) result.transcript.append(rec);
    result.rounds.push_back(std::move(rep));
  }
  return result;
}

}  // namespace sparsefl
