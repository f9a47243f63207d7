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
#include <compare>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsefl/field.hpp"

namespace sparsefl {

/// Case1 permutes subpackets inside each segment only; Case2 additionally
/// permutes the segments themselves.
enum class SchemeCase { kCase1, kCase2 };

inline std::string to_string(SchemeCase c) {
  return c == SchemeCase::kCase1 ? "1" : "2";
}

inline SchemeCase parse_scheme_case(const std::string& s) {
  if (s == "1" || s == "case1" || s == "Case1") return SchemeCase::kCase1;
  if (s == "2" || s == "case2" || s == "Case2") return SchemeCase::kCase2;
  throw std::invalid_argument("unknown scheme case '" + s + "' (expected 1 or 2)");
}

/// Number of databases required for a given subpacketization.
constexpr std::size_t databases_for(SchemeCase c, std::size_t ell) {
  return c == SchemeCase::kCase1 ? 2 * ell + 2 : 2 * ell + 4;
}

/// 1-based (segment, subpacket-within-segment) address in real order.
struct RealAddress {
  std::size_t segment = 1;
  std::size_t subpacket = 1;
  friend constexpr auto operator<=>(const RealAddress&, const RealAddress&) = default;
};

/// Address as the databases see it. In Case1 the segment is the real
/// segment; in Case2 both components are permuted.
struct PermutedAddress {
  std::size_t segment = 1;
  std::size_t subpacket = 1;
  friend constexpr auto operator<=>(const PermutedAddress&,
                                    const PermutedAddress&) = default;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

struct ModelConfig {
  std::size_t P = 0;    // subpackets
  std::size_t B = 1;    // segments
  std::size_t N = 0;    // databases
  std::size_t ell = 0;  // symbols per subpacket
  double r = 0.0;        // uplink sparsification rate
  double r_prime = 0.0;  // downlink sparsification rate
  SchemeCase scheme = SchemeCase::kCase1;
  FieldConfig field;

  /// Builds a config with N derived from ell and default field constants.
  static ModelConfig make(SchemeCase scheme, std::size_t P, std::size_t B,
                          std::size_t ell, double r, double r_prime,
                          std::uint64_t q = PrimeField::kDefaultModulus) {
    ModelConfig cfg;
    cfg.scheme = scheme;
    cfg.P = P;
    cfg.B = B;
    cfg.ell = ell;
    cfg.N = databases_for(scheme, ell);
    cfg.r = r;
    cfg.r_prime = r_prime;
    cfg.field = FieldConfig::make_default(ell, cfg.N, q);
    return cfg;
  }

  std::size_t L() const { return P * ell; }
  std::size_t segment_size() const { return B == 0 ? 0 : P / B; }
  /// Length of one segment's storage block, P*ell/B.
  std::size_t segment_symbols() const { return segment_size() * ell; }
  std::size_t uplink_count() const { return static_cast<std::size_t>(std::llround(P * r)); }
  std::size_t downlink_count() const {
    return static_cast<std::size_t>(std::llround(P * r_prime));
  }
  /// Degree x of the storage noise polynomial.
  std::size_t noise_degree() const { return scheme == SchemeCase::kCase1 ? ell : ell + 1; }

  /// 0-based row of the global model holding a real address.
  std::size_t global_index(RealAddress a) const {
    return (a.segment - 1) * segment_size() + (a.subpacket - 1);
  }
  RealAddress address_of(std::size_t global) const {
    return {global / segment_size() + 1, global % segment_size() + 1};
  }
  bool in_range(std::size_t segment, std::size_t subpacket) const {
    return segment >= 1 && segment <= B && subpacket >= 1 && subpacket <= segment_size();
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

namespace detail {
inline bool whole_positive(double x) {
  return x > 0.5 && std::abs(x - std::round(x)) < 1e-9;
}
}  // namespace detail

/// Every violated structural constraint, one message each.
inline std::vector<std::string> config_errors(const ModelConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.P == 0) out.push_back("P must be positive");
  if (cfg.ell == 0) out.push_back("ell must be positive");
  if (cfg.B < 1 || cfg.B >= cfg.P) out.push_back("B must satisfy 1 <= B < P");
  if (cfg.B >= 1 && cfg.P % cfg.B != 0) out.push_back("B must divide P");
  if (cfg.scheme == SchemeCase::kCase1 && cfg.N != 2 * cfg.ell + 2) {
    out.push_back("N = 2*ell+2 required for case 1");
  }
  if (cfg.scheme == SchemeCase::kCase2 && cfg.N != 2 * cfg.ell + 4) {
    out.push_back("N = 2*ell+4 required for case 2");
  }
  if (!detail::whole_positive(cfg.P * cfg.r) || cfg.P * cfg.r > cfg.P + 1e-9) {
    out.push_back("P*r must be a whole number of subpackets in [1, P]");
  }
  if (!detail::whole_positive(cfg.P * cfg.r_prime) || cfg.P * cfg.r_prime > cfg.P + 1e-9) {
    out.push_back("P*r' must be a whole number of subpackets in [1, P]");
  }
  if (cfg.field.f.size() != cfg.ell) out.push_back("field needs exactly ell constants f");
  if (cfg.field.alpha.size() != cfg.N) out.push_back("field needs exactly N constants alpha");
  for (auto& p : cfg.field.problems()) out.push_back(std::move(p));
  return out;
}

inline const ModelConfig& validate_config(const ModelConfig& cfg) {
  auto problems = config_errors(cfg);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

/// Plaintext model: row s is subpacket s (global, 0-based), ell symbols wide.
struct GlobalModel {
  Matrix W;

  static GlobalModel zeros(const ModelConfig& cfg) { return {Matrix(cfg.P, cfg.ell)}; }

  template <class Rng>
  static GlobalModel random(const ModelConfig& cfg, Rng& rng) {
    return {random_matrix(cfg.field.field(), cfg.P, cfg.ell, rng)};
  }

  std::vector<Fq> subpacket(std::size_t global) const {
    auto row = W.row(global);
    return {row.begin(), row.end()};
  }

  friend bool operator==(const GlobalModel&, const GlobalModel&) = default;
};

struct SparseUpdate {
  RealAddress address;
  std::vector<Fq> delta;  // ell symbols
};

struct SparseUpdateSet {
  std::vector<SparseUpdate> entries;
};

/// Checks size P*r, address range, delta width and distinctness.
inline void validate_sparse_set(const ModelConfig& cfg, const SparseUpdateSet& set) {
  if (set.entries.size() != cfg.uplink_count()) {
    throw std::invalid_argument("sparse update set must hold exactly P*r = " +
                                std::to_string(cfg.uplink_count()) + " entries, got " +
                                std::to_string(set.entries.size()));
  }
  std::set<RealAddress> seen;
  for (const auto& e : set.entries) {
    if (!cfg.in_range(e.address.segment, e.address.subpacket)) {
      throw std::out_of_range("sparse update address out of range");
    }
    if (e.delta.size() != cfg.ell) {
      throw DimensionError("sparse update delta must have ell symbols");
    }
    if (!seen.insert(e.address).second) {
      throw std::invalid_argument("duplicate address in sparse update set");
    }
  }
}

/// 1-based indices of the `count` largest magnitudes, ascending. Ties go to
/// the lower index.
inline std::vector<std::size_t> top_r_select(std::span<const double> magnitudes,
                                             std::size_t count) {
  if (count > magnitudes.size()) {
    throw std::invalid_argument("top_r_select: count exceeds number of subpackets");
  }
  std::vector<std::size_t> order(magnitudes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return magnitudes[a] > magnitudes[b];
  });
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<long>(count));
  std::sort(out.begin(), out.end());
  for (auto& i : out) ++i;
  return out;
}

}  // namespace sparsefl
