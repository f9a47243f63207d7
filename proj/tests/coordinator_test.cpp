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

#include <random>
#include <set>

#include "gtest/gtest.h"
#include "reference_fixtures.hpp"
#include "sparsefl/coordinator.hpp"
#include "sparsefl/snapshot.hpp"

namespace sparsefl {
namespace {

using testing::case1_example_bundle;
using testing::case1_example_config;
using testing::case2_example_bundle;
using testing::case2_example_config;

// Scalar evaluation with plain integers and brute-force inversion.
std::uint64_t scalar_storage(std::uint64_t q, std::uint64_t w, std::uint64_t f, std::uint64_t alpha,
                             const std::vector<std::uint64_t>& coeffs) {
  const std::uint64_t diff = (f + q - alpha % q) % q;
  std::uint64_t inv = 0;
  for (std::uint64_t v = 1; v < q; ++v) {
    if (diff * v % q == 1) inv = v;
  }
  std::uint64_t s = w * inv % q;
  std::uint64_t power = 1;
  for (std::uint64_t c : coeffs) {
    s = (s + c * power) % q;
    power = power * alpha % q;
  }
  return s;
}

ModelConfig ell1_config() {
  auto cfg = ModelConfig::make(SchemeCase::kCase1, 2, 1, 1, 0.5, 0.5, 31);
  cfg.field.f = {Fq{1}};
  cfg.field.alpha = {Fq{2}, Fq{3}, Fq{4}, Fq{5}};
  return cfg;
}

TEST(EncodeStorageTest, ZeroModelAndNoiseGiveZero) {
  const auto cfg = case1_example_config();
  const auto model = GlobalModel::zeros(cfg);
  for (std::size_t n = 1; n <= cfg.N; ++n) {
    EXPECT_EQ(encode_storage(cfg, model, StorageNoise::zeros(cfg), n),
              std::vector<Fq>(cfg.L(), Fq{}));
  }
}

TEST(EncodeStorageTest, HandEvaluatedSymbol) {
  const auto cfg = ell1_config();
  // x = ell = 1 for Case1, so two noise coefficients per symbol
  GlobalModel model = GlobalModel::zeros(cfg);
  model.W(0, 0) = Fq{5};
  StorageNoise noise = StorageNoise::zeros(cfg);
  noise.coeffs(0, 0) = Fq{3};
  noise.coeffs(0, 1) = Fq{4};
  EXPECT_EQ(encode_storage(cfg, model, noise, 1)[0], Fq{6});
  EXPECT_EQ(scalar_storage(31, 5, 1, 2, {3, 4}), 6U);
}

TEST(EncodeStorageTest, MatchesScalarEvaluator) {
  const auto cfg = case2_example_config(97);
  std::mt19937_64 rng(21);
  const auto model = GlobalModel::random(cfg, rng);
  const auto noise = StorageNoise::random(cfg, rng);
  for (std::size_t n = 1; n <= cfg.N; ++n) {
    const auto s = encode_storage(cfg, model, noise, n);
    for (std::size_t row = 0; row < cfg.L(); row += 5) {
      std::vector<std::uint64_t> coeffs;
      for (std::size_t j = 0; j < noise.coeffs.cols(); ++j) coeffs.push_back(noise.coeffs(row, j).v);
      EXPECT_EQ(s[row].v, scalar_storage(97, model.W(row / cfg.ell, row % cfg.ell).v,
                                         cfg.field.f[row % cfg.ell].v, cfg.field.alpha[n - 1].v,
                                         coeffs));
    }
  }
}

TEST(EncodeStorageTest, ConstantNoiseCoefficientIsABijection) {
  const auto cfg = ell1_config();
  GlobalModel model = GlobalModel::zeros(cfg);
  model.W(0, 0) = Fq{17};
  for (std::size_t n = 1; n <= cfg.N; ++n) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i0 = 0; i0 < 31; ++i0) {
      StorageNoise noise = StorageNoise::zeros(cfg);
      noise.coeffs(0, 0) = Fq{i0};
      noise.coeffs(0, 1) = Fq{9};
      seen.insert(encode_storage(cfg, model, noise, n)[0].v);
    }
    EXPECT_EQ(seen.size(), 31U);
  }
}

TEST(EncodeStorageTest, StoredSymbolIsUniformForAnyModel) {
  // For every W, the histogram over I_0 of the stored symbol is flat.
  const auto cfg = ell1_config();
  for (std::uint64_t w = 0; w < 31; ++w) {
    GlobalModel model = GlobalModel::zeros(cfg);
    model.W(0, 0) = Fq{w};
    std::vector<int> hist(31, 0);
    for (std::uint64_t i0 = 0; i0 < 31; ++i0) {
      StorageNoise noise = StorageNoise::zeros(cfg);
      noise.coeffs(0, 0) = Fq{i0};
      ++hist[encode_storage(cfg, model, noise, 3)[0].v];
    }
    for (int h : hist) EXPECT_EQ(h, 1);
  }
}

TEST(EncodeStorageTest, ShapeMismatchThrows) {
  const auto cfg = case1_example_config();
  EXPECT_THROW(encode_storage(cfg, GlobalModel{Matrix(3, 3)}, StorageNoise::zeros(cfg), 1),
               DimensionError);
}

TEST(InitializeTest, Case1PackageShapes) {
  const auto cfg = case1_example_config();
  std::mt19937_64 rng(1);
  const auto pkg = initialize(cfg, GlobalModel::random(cfg, rng), 5, case1_example_bundle());
  EXPECT_EQ(pkg.user_bundle, case1_example_bundle());
  ASSERT_EQ(pkg.db_packages.size(), 8U);
  for (std::size_t n = 0; n < 8; ++n) {
    const auto& db = pkg.db_packages[n];
    EXPECT_EQ(db.n, n + 1);
    ASSERT_EQ(db.within.size(), 3U);
    for (const auto& m : db.within) {
      EXPECT_EQ(m.rows(), 15U);
      EXPECT_EQ(m.cols(), 15U);
    }
    EXPECT_FALSE(db.segment.has_value());
    EXPECT_EQ(db.storage.size(), 45U);
  }
}

TEST(InitializeTest, Case2PackageShapes) {
  const auto cfg = case2_example_config();
  std::mt19937_64 rng(1);
  const auto pkg = initialize(cfg, GlobalModel::random(cfg, rng), 5, case2_example_bundle());
  EXPECT_EQ(pkg.user_bundle.within.size(), 3U);
  ASSERT_TRUE(pkg.user_bundle.segmentwise.has_value());
  EXPECT_EQ(*pkg.user_bundle.segmentwise, Permutation({2, 3, 1}));
  ASSERT_EQ(pkg.db_packages.size(), 10U);
  for (const auto& db : pkg.db_packages) {
    ASSERT_TRUE(db.segment.has_value());
    EXPECT_EQ(db.segment->rows(), 9U);
    EXPECT_EQ(db.within.front().rows(), 12U);
  }
}

TEST(InitializeTest, SameSeedIsByteIdentical) {
  const auto cfg = case2_example_config();
  std::mt19937_64 rng(1);
  const auto model = GlobalModel::random(cfg, rng);
  const auto a = initialize(cfg, model, 99);
  const auto b = initialize(cfg, model, 99);
  EXPECT_EQ(a, b);
  EXPECT_EQ(snapshot_json(a).dump(), snapshot_json(b).dump());
  EXPECT_NE(snapshot_json(a).dump(), snapshot_json(initialize(cfg, model, 100)).dump());
}

TEST(InitializeTest, InvalidConfigRejected) {
  auto cfg = case1_example_config();
  cfg.B = 4;
  EXPECT_THROW(initialize(cfg, GlobalModel{Matrix(15, 3)}, 1), ConfigError);
}

TEST(InitializeTest, StorageDecodesToModel) {
  for (const auto& cfg : {case1_example_config(), case2_example_config()}) {
    std::mt19937_64 rng(8);
    const auto model = GlobalModel::random(cfg, rng);
    const auto pkg = initialize(cfg, model, 3);
    for (std::size_t s = 0; s < cfg.P; ++s) {
      for (std::size_t k = 0; k < cfg.ell; ++k) {
        // S_n[s,k] alone is W_k/(f_k-a_n) + poly(a_n), a decodable system
        // with the other symbols of the subpacket equal to zero.
        std::vector<Fq> answers;
        for (const auto& db : pkg.db_packages) answers.push_back(db.storage[s * cfg.ell + k]);
        const auto decoded = decode_subpacket(cfg.field, answers);
        for (std::size_t j = 0; j < cfg.ell; ++j) {
          EXPECT_EQ(decoded[j], j == k ? model.W(s, k) : Fq{});
        }
      }
    }
  }
}

TEST(SnapshotTest, RoundTrip) {
  const auto cfg = case2_example_config(97);
  std::mt19937_64 rng(2);
  const auto pkg = initialize(cfg, GlobalModel::random(cfg, rng), 4);
  EXPECT_EQ(snapshot_from_json(snapshot_json(pkg)), pkg);
  auto j = snapshot_json(pkg);
  j["format"] = "other/0";
  EXPECT_THROW(snapshot_from_json(j), std::invalid_argument);
}

}  // namespace
}  // namespace sparsefl
