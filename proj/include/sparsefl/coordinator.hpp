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

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sparsefl/field.hpp"
#include "sparsefl/model.hpp"
#include "sparsefl/permutation.hpp"

namespace sparsefl {

/// Independent generator for one named stream of a seeded run.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32U)};
  return std::mt19937_64(seq);
}

namespace stream {
inline constexpr std::uint64_t kBundle = 1;
inline constexpr std::uint64_t kMatrixNoise = 2;
inline constexpr std::uint64_t kStorageNoise = 3;
}  // namespace stream

/// Coefficients I_{i,j}, j = 0..x, of the storage noise polynomial for every
/// stored symbol. Row (s*ell + i) belongs to symbol i of global subpacket s.
struct StorageNoise {
  Matrix coeffs;

  static StorageNoise zeros(const ModelConfig& cfg) {
    return {Matrix(cfg.L(), cfg.noise_degree() + 1)};
  }

  template <class Rng>
  static StorageNoise random(const ModelConfig& cfg, Rng& rng) {
    return {random_matrix(cfg.field.field(), cfg.L(), cfg.noise_degree() + 1, rng)};
  }
};

/// S_n[s,i] = W_i^[s] / (f_i - alpha_n) + sum_j alpha_n^j I_{i,j}^[s].
inline std::vector<Fq> encode_storage(const ModelConfig& cfg, const GlobalModel& model,
                                      const StorageNoise& noise, std::size_t n) {
  if (model.W.rows() != cfg.P || model.W.cols() != cfg.ell) {
    throw DimensionError("encode_storage: model shape does not match the config");
  }
  if (noise.coeffs.rows() != cfg.L() || noise.coeffs.cols() != cfg.noise_degree() + 1) {
    throw DimensionError("encode_storage: noise shape does not match the config");
  }
  const PrimeField field = cfg.field.field();
  const Fq alpha = cfg.field.alpha.at(n - 1);
  const auto gamma = gamma_diagonal(cfg.field, n);
  std::vector<Fq> out(cfg.L());
  for (std::size_t s = 0; s < cfg.P; ++s) {
    for (std::size_t i = 0; i < cfg.ell; ++i) {
      const std::size_t row = s * cfg.ell + i;
      // Horner over the noise coefficients
      Fq poly{};
      for (std::size_t j = noise.coeffs.cols(); j-- > 0;) {
        poly = field.add(field.mul(poly, alpha), noise.coeffs(row, j));
      }
      out[row] = field.add(field.mul(model.W(s, i), gamma[i]), poly);
    }
  }
  return out;
}

/// Everything database n receives at initialization. No permutation appears
/// here in the clear.
struct DatabasePackage {
  std::size_t n = 0;
  std::vector<Matrix> within;     // R_n^[1..B]
  std::optional<Matrix> segment;  // H_n, Case2 only
  std::vector<Fq> storage;        // S_n, length L

  friend bool operator==(const DatabasePackage&, const DatabasePackage&) = default;
};

struct InitPackage {
  ModelConfig config;
  PermutationBundle user_bundle;
  std::vector<DatabasePackage> db_packages;

  friend bool operator==(const InitPackage&, const InitPackage&) = default;
};

/// Builds the package from explicit randomness. Used directly by tests that
/// need to know the noise.
inline InitPackage assemble_package(const ModelConfig& cfg, const GlobalModel& model,
                                    const PermutationBundle& bundle,
                                    const NoiseMatrices& noise,
                                    const StorageNoise& storage_noise) {
  validate_config(cfg);
  check_bundle(cfg, bundle);
  InitPackage pkg{cfg, bundle, {}};
  for (std::size_t n = 1; n <= cfg.N; ++n) {
    DatabasePackage db;
    db.n = n;
    for (std::size_t i = 0; i < cfg.B; ++i) {
      db.within.push_back(build_within_matrix(cfg, bundle.within[i], n, noise.zbar.at(i)));
    }
    if (cfg.scheme == SchemeCase::kCase2) {
      db.segment = build_segment_matrix(cfg, *bundle.segmentwise, n, noise.zhat.value());
    }
    db.storage = encode_storage(cfg, model, storage_noise, n);
    pkg.db_packages.push_back(std::move(db));
  }
  return pkg;
}

/// Seeded initialization. `injected` replaces the random permutations (used to
/// replay fixed examples); the noise streams are unaffected by it.
inline InitPackage initialize(const ModelConfig& cfg, const GlobalModel& model,
                              std::uint64_t seed,
                              std::optional<PermutationBundle> injected = std::nullopt) {
  validate_config(cfg);
  auto bundle_rng = make_rng(seed, stream::kBundle);
  auto noise_rng = make_rng(seed, stream::kMatrixNoise);
  auto storage_rng = make_rng(seed, stream::kStorageNoise);
  PermutationBundle bundle = injected ? *injected : random_bundle(cfg, bundle_rng);
  return assemble_package(cfg, model, bundle, NoiseMatrices::random(cfg, noise_rng),
                          StorageNoise::random(cfg, storage_rng));
}

}  // namespace sparsefl
