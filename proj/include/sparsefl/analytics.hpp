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
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparsefl/messages.hpp"
#include "sparsefl/model.hpp"

namespace sparsefl {

// ---------------------------------------------------------------------------
// Communication cost

namespace detail {

/// N - 2*ell: 2 for Case1, 4 for Case2.
constexpr std::size_t overhead_databases(SchemeCase c) {
  return c == SchemeCase::kCase1 ? 2 : 4;
}

inline void check_cost_args(SchemeCase c, std::size_t N, std::size_t P, std::uint64_t q) {
  if (N <= overhead_databases(c)) {
    throw std::invalid_argument(c == SchemeCase::kCase1 ? "case 1 needs N > 2"
                                                        : "case 2 needs N > 4");
  }
  if (P == 0) throw std::invalid_argument("P must be positive");
  if (q < 2) throw std::invalid_argument("q must be at least 2");
}

inline double log_base(double x, double base) { return std::log(x) / std::log(base); }

}  // namespace detail

/// 2 r' (1 + log_q(P)/N) / (1 - d/N), d = 2 (Case1) or 4 (Case2).
inline double reading_cost(SchemeCase c, std::size_t N, double r_prime, std::size_t P,
                           std::uint64_t q) {
  detail::check_cost_args(c, N, P, q);
  const double n = static_cast<double>(N);
  const double lg = detail::log_base(static_cast<double>(P), static_cast<double>(q));
  return 2.0 * r_prime * (1.0 + lg / n) / (1.0 - detail::overhead_databases(c) / n);
}

/// 2 r (1 + log_q P) / (1 - d/N).
inline double writing_cost(SchemeCase c, std::size_t N, double r, std::size_t P,
                           std::uint64_t q) {
  detail::check_cost_args(c, N, P, q);
  const double n = static_cast<double>(N);
  const double lg = detail::log_base(static_cast<double>(P), static_cast<double>(q));
  return 2.0 * r * (1.0 + lg) / (1.0 - detail::overhead_databases(c) / n);
}

/// Same closed forms with log_q P replaced by the whole number of index
/// symbols actually sent.
inline double reading_cost_ceil(SchemeCase c, std::size_t N, double r_prime, std::size_t P,
                                std::uint64_t q) {
  detail::check_cost_args(c, N, P, q);
  const double n = static_cast<double>(N);
  const double idx = static_cast<double>(index_symbol_count(P, q));
  return 2.0 * r_prime * (1.0 + idx / n) / (1.0 - detail::overhead_databases(c) / n);
}

inline double writing_cost_ceil(SchemeCase c, std::size_t N, double r, std::size_t P,
                                std::uint64_t q) {
  detail::check_cost_args(c, N, P, q);
  const double n = static_cast<double>(N);
  const double idx = static_cast<double>(index_symbol_count(P, q));
  return 2.0 * r * (1.0 + idx) / (1.0 - detail::overhead_databases(c) / n);
}

struct CostReport {
  double reading_cost = 0.0;  // measured, per user per round
  double writing_cost = 0.0;
  double total_cost = 0.0;
  std::size_t measured_reading_symbols = 0;
  std::size_t measured_writing_symbols = 0;
  std::size_t L = 0;
  std::size_t reader_rounds = 0;  // distinct (round, user) pairs downloading
  std::size_t writer_rounds = 0;  // distinct (round, user) pairs uploading
  double analytic_reading_cost = 0.0;  // real-valued log_q P
  double analytic_writing_cost = 0.0;
  double analytic_reading_cost_ceil = 0.0;
  double analytic_writing_cost_ceil = 0.0;
};

/// Counts downloaded and uploaded field symbols in a transcript and
/// normalizes them by L and by the number of participating user-rounds.
inline CostReport audit_costs(const Transcript& transcript, const ModelConfig& cfg) {
  CostReport rep;
  rep.L = cfg.L();
  std::set<std::pair<std::size_t, std::string>> readers;
  std::set<std::pair<std::size_t, std::string>> writers;
  for (const auto& rec : transcript.records()) {
    const bool to_user = rec.to.rfind("user", 0) == 0;
    const bool from_user = rec.from.rfind("user", 0) == 0;
    const bool to_db = rec.to.rfind("db", 0) == 0;
    const bool from_db = rec.from.rfind("db", 0) == 0;
    switch (rec.phase) {
      case Phase::kDownlinkSelect:
      case Phase::kRead:
        if (!(from_db && to_user)) {
          throw std::invalid_argument("malformed transcript: read-phase record must go db -> user");
        }
        rep.measured_reading_symbols += rec.symbol_count;
        readers.emplace(rec.round, rec.to);
        break;
      case Phase::kWrite:
        if (!(from_user && to_db)) {
          throw std::invalid_argument("malformed transcript: write record must go user -> db");
        }
        rep.measured_writing_symbols += rec.symbol_count;
        writers.emplace(rec.round, rec.from);
        break;
    }
  }
  rep.reader_rounds = readers.size();
  rep.writer_rounds = writers.size();
  const double l = static_cast<double>(rep.L);
  if (rep.reader_rounds > 0) {
    rep.reading_cost = static_cast<double>(rep.measured_reading_symbols) /
                       (l * static_cast<double>(rep.reader_rounds));
  }
  if (rep.writer_rounds > 0) {
    rep.writing_cost = static_cast<double>(rep.measured_writing_symbols) /
                       (l * static_cast<double>(rep.writer_rounds));
  }
  rep.total_cost = rep.reading_cost + rep.writing_cost;
  if (rep.reader_rounds > 0) {
    rep.analytic_reading_cost = reading_cost(cfg.scheme, cfg.N, cfg.r_prime, cfg.P, cfg.field.q);
    rep.analytic_reading_cost_ceil =
        reading_cost_ceil(cfg.scheme, cfg.N, cfg.r_prime, cfg.P, cfg.field.q);
  }
  if (rep.writer_rounds > 0) {
    rep.analytic_writing_cost = writing_cost(cfg.scheme, cfg.N, cfg.r, cfg.P, cfg.field.q);
    rep.analytic_writing_cost_ceil = writing_cost_ceil(cfg.scheme, cfg.N, cfg.r, cfg.P, cfg.field.q);
  }
  return rep;
}

/// Exact integer check that measured costs equal the closed forms with
/// log_q P -> ceil(log_q P):
///   D (N - d) == 2 Pr' k ell (N + c)   and   U (N - d) == 2 Pr k ell N (1 + c).
inline bool satisfies_ceil_identity(const CostReport& rep, const ModelConfig& cfg) {
  const std::size_t d = detail::overhead_databases(cfg.scheme);
  const std::size_t c = index_symbol_count(cfg.P, cfg.field.q);
  using detail::u128;
  const u128 lhs_r = static_cast<u128>(rep.measured_reading_symbols) * (cfg.N - d);
  const u128 rhs_r = static_cast<u128>(2) * cfg.downlink_count() * rep.reader_rounds * cfg.ell *
                     (cfg.N + c);
  const u128 lhs_w = static_cast<u128>(rep.measured_writing_symbols) * (cfg.N - d);
  const u128 rhs_w = static_cast<u128>(2) * cfg.uplink_count() * rep.writer_rounds * cfg.ell *
                     cfg.N * (1 + c);
  return lhs_r == rhs_r && lhs_w == rhs_w;
}

// ---------------------------------------------------------------------------
// Storage

struct StorageReport {
  std::size_t data_symbols = 0;
  std::size_t within_matrix_symbols = 0;
  std::size_t segment_matrix_symbols = 0;
  std::string complexity_label;

  std::size_t total() const {
    return data_symbols + within_matrix_symbols + segment_matrix_symbols;
  }
};

inline std::string storage_complexity_label(SchemeCase c) {
  return c == SchemeCase::kCase1 ? "O(L^2/B)" : "max{O(L^2/B), O(L^2B^2/N^2)}";
}

/// Per-database symbol counts: L data symbols, B matrices of (P ell/B)^2,
/// and in Case2 one (B ell)^2 segment matrix.
inline StorageReport storage_report(SchemeCase c, std::size_t P, std::size_t B,
                                    std::size_t ell) {
  if (B == 0 || P % B != 0) throw std::invalid_argument("storage_report: B must divide P");
  StorageReport rep;
  const std::size_t block = P / B * ell;
  rep.data_symbols = P * ell;
  rep.within_matrix_symbols = B * block * block;
  rep.segment_matrix_symbols = c == SchemeCase::kCase2 ? (B * ell) * (B * ell) : 0;
  rep.complexity_label = storage_complexity_label(c);
  return rep;
}

inline StorageReport storage_report(const ModelConfig& cfg) {
  return storage_report(cfg.scheme, cfg.P, cfg.B, cfg.ell);
}

// ---------------------------------------------------------------------------
// Information leakage

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational reduced(std::uint64_t num, std::uint64_t den) {
    const std::uint64_t g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Exact binomial coefficient; throws if it does not fit in 64 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  detail::u128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;  // exact: acc is C(n-k+i, i) after the division
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("binomial coefficient exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

struct LeakageDistribution {
  std::vector<std::vector<std::size_t>> support;
  std::vector<std::uint64_t> counts;  // subsets realizing each profile
  std::uint64_t total = 1;            // C(P, Pr)
  double entropy_bits = 0.0;

  Rational probability(std::size_t i) const { return Rational::reduced(counts.at(i), total); }

  /// Entropy in an arbitrary logarithm base (e.g. base q).
  double entropy(double base) const { return entropy_bits / std::log2(base); }
};

namespace detail {

inline void check_leakage_args(std::size_t P, std::size_t B, std::size_t Pr) {
  if (B == 0 || P % B != 0) throw std::invalid_argument("leakage: B must divide P");
  if (Pr > P) throw std::invalid_argument("leakage: Pr exceeds P");
}

inline double entropy_from_counts(std::span<const std::uint64_t> counts, std::uint64_t total) {
  // H = sum (c/T) log2(T/c), summed in long double
  const long double t = static_cast<long double>(total);
  long double h = 0.0L;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const long double lc = static_cast<long double>(c);
    h += lc / t * std::log2(t / lc);
  }
  return static_cast<double>(h);
}

inline void enumerate_profiles(std::size_t seg, std::size_t remaining, std::size_t slots,
                               std::vector<std::size_t>& cur, std::uint64_t weight,
                               std::map<std::vector<std::size_t>, std::uint64_t>& out,
                               bool merge_order) {
  if (slots == 0) {
    if (remaining != 0) return;
    auto key = cur;
    if (merge_order) std::sort(key.begin(), key.end());
    out[key] += weight;
    return;
  }
  const std::size_t hi = std::min(seg, remaining);
  for (std::size_t k = 0; k <= hi; ++k) {
    if (remaining - k > seg * (slots - 1)) continue;
    cur.push_back(k);
    const detail::u128 w = static_cast<detail::u128>(weight) * binomial(seg, k);
    if (w > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("profile count exceeds 64 bits");
    }
    enumerate_profiles(seg, remaining - k, slots - 1, cur, static_cast<std::uint64_t>(w), out,
                       merge_order);
    cur.pop_back();
  }
}

inline LeakageDistribution leakage(std::size_t P, std::size_t B, std::size_t Pr,
                                   bool merge_order) {
  check_leakage_args(P, B, Pr);
  std::map<std::vector<std::size_t>, std::uint64_t> profiles;
  std::vector<std::size_t> cur;
  enumerate_profiles(P / B, Pr, B, cur, 1, profiles, merge_order);
  LeakageDistribution dist;
  dist.total = binomial(P, Pr);
  for (auto& [profile, count] : profiles) {
    dist.support.push_back(profile);
    dist.counts.push_back(count);
  }
  dist.entropy_bits = entropy_from_counts(dist.counts, dist.total);
  return dist;
}

}  // namespace detail

/// Ordered per-segment counts of the sparse subpackets under a uniform
/// choice of Pr out of P: P(k) = prod_i C(P/B, k_i) / C(P, Pr).
inline LeakageDistribution leakage_case1(std::size_t P, std::size_t B, std::size_t Pr) {
  return detail::leakage(P, B, Pr, false);
}

/// As leakage_case1, with profiles that are permutations of each other
/// merged into one sorted multiset.
inline LeakageDistribution leakage_case2(std::size_t P, std::size_t B, std::size_t Pr) {
  return detail::leakage(P, B, Pr, true);
}

inline LeakageDistribution leakage_for(SchemeCase c, std::size_t P, std::size_t B,
                                       std::size_t Pr) {
  return c == SchemeCase::kCase1 ? leakage_case1(P, B, Pr) : leakage_case2(P, B, Pr);
}

struct TradeoffChoice {
  std::size_t B = 0;
  std::size_t storage_symbols = 0;
  double leakage_bits = 0.0;
};

class InfeasibleBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Among candidate segment counts whose leakage is strictly below `epsilon`
/// bits, the one with the fewest stored symbols per database.
inline TradeoffChoice optimal_B(std::size_t P, std::size_t Pr, std::size_t ell,
                                double epsilon, SchemeCase c,
                                std::span<const std::size_t> candidates) {
  std::optional<TradeoffChoice> best;
  for (std::size_t B : candidates) {
    if (B == 0 || P % B != 0) {
      throw std::invalid_argument("optimal_B: candidate " + std::to_string(B) +
                                  " does not divide P");
    }
    const double h = leakage_for(c, P, B, Pr).entropy_bits;
    if (!(h < epsilon)) continue;
    const TradeoffChoice cand{B, storage_report(c, P, B, ell).total(), h};
    if (!best || cand.storage_symbols < best->storage_symbols ||
        (cand.storage_symbols == best->storage_symbols && cand.leakage_bits < best->leakage_bits)) {
      best = cand;
    }
  }
  if (!best) throw InfeasibleBudgetError("no candidate B meets the leakage budget");
  return *best;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

inline void write_leakage_csv(std::ostream& os, std::size_t P, std::size_t Pr,
                              std::span<const std::size_t> Bs) {
  os << "P,Pr,B,case1_bits,case2_bits\n";
  for (std::size_t B : Bs) {
    os << P << ',' << Pr << ',' << B << ','
       << format_double(leakage_case1(P, B, Pr).entropy_bits) << ','
       << format_double(leakage_case2(P, B, Pr).entropy_bits) << '\n';
  }
}

struct CostRow {
  SchemeCase scheme = SchemeCase::kCase1;
  double reading_cost = 0.0;
  double writing_cost = 0.0;
  std::size_t storage_symbols = 0;
  double leakage_bits = 0.0;
};

/// One row of the rate/storage/leakage table. N fixes ell; Pr = P*r.
inline CostRow cost_row(SchemeCase c, std::size_t N, double r, double r_prime, std::size_t P,
                        std::size_t B, std::uint64_t q) {
  const std::size_t d = detail::overhead_databases(c);
  if (N <= d || (N - d) % 2 != 0) {
    throw std::invalid_argument("N must be " + std::to_string(d) + " + 2*ell for this case");
  }
  const std::size_t ell = (N - d) / 2;
  const double pr = static_cast<double>(P) * r;
  if (!detail::whole_positive(pr)) throw std::invalid_argument("P*r must be a positive integer");
  CostRow row;
  row.scheme = c;
  row.reading_cost = reading_cost(c, N, r_prime, P, q);
  row.writing_cost = writing_cost(c, N, r, P, q);
  row.storage_symbols = storage_report(c, P, B, ell).total();
  row.leakage_bits =
      leakage_for(c, P, B, static_cast<std::size_t>(std::llround(pr))).entropy_bits;
  return row;
}

inline void write_cost_csv_header(std::ostream& os) {
  os << "case,reading_cost,writing_cost,storage_symbols,leakage_bits\n";
}

inline void write_cost_csv_row(std::ostream& os, const CostRow& row) {
  os << to_string(row.scheme) << ',' << format_double(row.reading_cost) << ','
     << format_double(row.writing_cost) << ',' << row.storage_symbols << ','
     << format_double(row.leakage_bits) << '\n';
}

}  // namespace sparsefl
