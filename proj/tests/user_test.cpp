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

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "reference_fixtures.hpp"
#include "sparsefl/experiment.hpp"
#include "sparsefl/user.hpp"

namespace sparsefl {
namespace {

using testing::case1_example_bundle;
using testing::case1_example_config;
using testing::case1_example_writes;
using testing::case2_example_bundle;
using testing::case2_example_config;
using testing::case2_example_writes;
using testing::make_nodes;
using testing::random_updates;

FieldConfig ell1_field() {
  FieldConfig fc;
  fc.q = 31;
  fc.f = {Fq{1}};
  fc.alpha = {Fq{2}, Fq{3}, Fq{4}, Fq{5}};
  return fc;
}

TEST(AddressMapTest, Case2ReadMapping) {
  EXPECT_EQ(map_permuted_to_real(case2_example_bundle(), {3, 1}, SchemeCase::kCase2),
            (RealAddress{1, 2}));
}

TEST(AddressMapTest, Case1ReadMapping) {
  const auto b = case1_example_bundle();
  EXPECT_EQ(map_permuted_to_real(b, {1, 1}, SchemeCase::kCase1), (RealAddress{1, 2}));
  EXPECT_EQ(map_permuted_to_real(b, {1, 3}, SchemeCase::kCase1), (RealAddress{1, 4}));
}

TEST(AddressMapTest, IdentityBundleKeepsAddresses) {
  PermutationBundle id{{Permutation::identity(4), Permutation::identity(4), Permutation::identity(4)},
                       Permutation::identity(3)};
  for (std::size_t seg = 1; seg <= 3; ++seg) {
    for (std::size_t sub = 1; sub <= 4; ++sub) {
      const RealAddress r = map_permuted_to_real(id, {seg, sub}, SchemeCase::kCase2);
      EXPECT_EQ(r, (RealAddress{seg, sub}));
    }
  }
}

TEST(AddressMapTest, Case2WriteMapping) {
  const auto b = case2_example_bundle();
  std::vector<PermutedAddress> got;
  for (auto a : case2_example_writes()) got.push_back(map_real_to_permuted(b, a, SchemeCase::kCase2));
  EXPECT_EQ(got, (std::vector<PermutedAddress>{{3, 1}, {1, 1}, {2, 1}}));
}

TEST(AddressMapTest, Case1WriteMapping) {
  const auto b = case1_example_bundle();
  EXPECT_EQ(map_real_to_permuted(b, {1, 2}, SchemeCase::kCase1), (PermutedAddress{1, 1}));
  EXPECT_EQ(map_real_to_permuted(b, {1, 4}, SchemeCase::kCase1), (PermutedAddress{1, 3}));
}

TEST(AddressMapTest, RoundTripEverywhere) {
  for (SchemeCase c : {SchemeCase::kCase1, SchemeCase::kCase2}) {
    const auto cfg = ModelConfig::make(c, 24, 4, 2, 0.25, 0.25);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      const auto b = random_bundle(cfg, rng);
      for (std::size_t seg = 1; seg <= cfg.B; ++seg) {
        for (std::size_t sub = 1; sub <= cfg.segment_size(); ++sub) {
          const RealAddress a{seg, sub};
          EXPECT_EQ(map_permuted_to_real(b, map_real_to_permuted(b, a, c), c), a);
        }
      }
    }
  }
  EXPECT_THROW(map_real_to_permuted(case1_example_bundle(), {4, 1}, SchemeCase::kCase1),
               std::out_of_range);
}

TEST(CombineUpdateTest, HandEvaluated) {
  const auto fc = ell1_field();
  const std::vector<Fq> delta{Fq{5}};
  EXPECT_EQ(combine_update(fc, delta, Fq{3}, 1), Fq{2});
  const std::vector<Fq> zero{Fq{0}};
  EXPECT_EQ(combine_update(fc, zero, Fq{0}, 1), Fq{0});
}

TEST(CombineUpdateTest, ZeroPadValuesInterpolateTheDelta) {
  // With z = 0, alpha -> U is the degree ell-1 polynomial through
  // (f_k, delta_k). Interpolate it from ell database points and evaluate at
  // each f_k.
  const auto cfg = case1_example_config(97);
  const PrimeField f = cfg.field.field();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Fq> delta(cfg.ell);
    for (auto& d : delta) d = f.random(rng);
    std::vector<Fq> xs;
    std::vector<Fq> ys;
    for (std::size_t n = 1; n <= cfg.ell; ++n) {
      xs.push_back(cfg.field.alpha[n - 1]);
      ys.push_back(combine_update(cfg.field, delta, Fq{0}, n));
    }
    for (std::size_t k = 0; k < cfg.ell; ++k) {
      Fq v{};
      for (std::size_t i = 0; i < xs.size(); ++i) {
        Fq basis = f.one();
        for (std::size_t j = 0; j < xs.size(); ++j) {
          if (j != i) basis = f.mul(basis, f.div(f.sub(cfg.field.f[k], xs[j]), f.sub(xs[i], xs[j])));
        }
        v = f.add(v, f.mul(basis, ys[i]));
      }
      EXPECT_EQ(v, delta[k]);
    }
  }
}

TEST(CombineUpdateTest, PadIsABijectionForEveryDelta) {
  auto cfg = ModelConfig::make(SchemeCase::kCase1, 2, 1, 2, 0.5, 0.5, 31);
  for (std::size_t n = 1; n <= cfg.N; ++n) {
    for (std::uint64_t d0 = 0; d0 < 31; d0 += 5) {
      const std::vector<Fq> delta{Fq{d0}, Fq{(d0 * 7 + 3) % 31}};
      std::vector<int> hist(31, 0);
      for (std::uint64_t z = 0; z < 31; ++z) ++hist[combine_update(cfg.field, delta, Fq{z}, n).v];
      for (int h : hist) EXPECT_EQ(h, 1);
    }
  }
}

TEST(CombineUpdateTest, WidthMismatchThrows) {
  const std::vector<Fq> delta{Fq{1}, Fq{2}};
  EXPECT_THROW(combine_update(ell1_field(), delta, Fq{0}, 1), DimensionError);
}

TEST(DecodeTest, ZeroAnswersGiveZero) {
  const auto cfg = case1_example_config();
  EXPECT_EQ(decode_subpacket(cfg.field, std::vector<Fq>(cfg.N)), std::vector<Fq>(cfg.ell));
}

TEST(DecodeTest, ForwardSynthesisRoundTrip) {
  for (const auto& cfg : {case1_example_config(), case2_example_config()}) {
    const PrimeField f = cfg.field.field();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<Fq> w(cfg.ell);
      for (auto& x : w) x = f.random(rng);
      std::vector<Fq> coeffs(cfg.N - cfg.ell);
      for (auto& c : coeffs) c = f.random(rng);
      std::vector<Fq> answers;
      for (Fq a : cfg.field.alpha) {
        Fq s{};
        for (std::size_t k = 0; k < cfg.ell; ++k) s = f.add(s, f.div(w[k], f.sub(cfg.field.f[k], a)));
        Fq p = f.one();
        for (Fq c : coeffs) {
          s = f.add(s, f.mul(c, p));
          p = f.mul(p, a);
        }
        answers.push_back(s);
      }
      EXPECT_EQ(decode_subpacket(cfg.field, answers), w);
    }
  }
}

TEST(DecodeTest, WrongAnswerCountThrows) {
  const auto cfg = case1_example_config();
  EXPECT_THROW(decode_subpacket(cfg.field, std::vector<Fq>(cfg.N - 1)), DimensionError);
}

TEST(PrepareWriteTest, WorkedExampleTuples) {
  const auto cfg = case1_example_config();
  std::mt19937_64 rng(6);
  const auto sparse = random_updates(cfg, case1_example_writes(), rng);
  const auto streams = prepare_write(cfg, case1_example_bundle(), sparse, 11);
  ASSERT_EQ(streams.size(), cfg.N);
  for (const auto& s : streams) {
    std::vector<PermutedAddress> addrs;
    for (const auto& t : s) addrs.push_back(t.address);
    EXPECT_EQ(addrs, (std::vector<PermutedAddress>{{1, 1}, {1, 3}, {2, 3}, {3, 1}}));
  }
}

TEST(PrepareWriteTest, WrongSizeRejected) {
  const auto cfg = case1_example_config();
  EXPECT_THROW(prepare_write(cfg, case1_example_bundle(), SparseUpdateSet{}, 1),
               std::invalid_argument);
}

TEST(PrepareWriteTest, SeedChangesValuesButNotAddresses) {
  const auto cfg = case2_example_config();
  std::mt19937_64 rng(7);
  const auto sparse = random_updates(cfg, case2_example_writes(), rng);
  const auto a = prepare_write(cfg, case2_example_bundle(), sparse, 1);
  const auto b = prepare_write(cfg, case2_example_bundle(), sparse, 2);
  bool any_value_differs = false;
  for (std::size_t n = 0; n < cfg.N; ++n) {
    ASSERT_EQ(a[n].size(), b[n].size());
    for (std::size_t i = 0; i < a[n].size(); ++i) {
      EXPECT_EQ(a[n][i].address, b[n][i].address);
      any_value_differs = any_value_differs || a[n][i].u != b[n][i].u;
    }
  }
  EXPECT_TRUE(any_value_differs);
}

TEST(PrepareWriteTest, ReadAfterWriteIsExact) {
  for (const auto& cfg : {case1_example_config(), case2_example_config()}) {
    std::mt19937_64 rng(8);
    GlobalModel model = GlobalModel::random(cfg, rng);
    const auto pkg = initialize(cfg, model, 4);
    auto nodes = make_nodes(pkg);
    const PrimeField f = cfg.field.field();
    for (int round = 0; round < 3; ++round) {
      std::vector<std::size_t> idx(cfg.P);
      for (std::size_t i = 0; i < cfg.P; ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<RealAddress> where;
      for (std::size_t i = 0; i < cfg.uplink_count(); ++i) where.push_back(cfg.address_of(idx[i]));
      const auto sparse = random_updates(cfg, where, rng);
      const auto streams = prepare_write(cfg, pkg.user_bundle, sparse, rng);
      for (auto& node : nodes) node.apply_write(streams[node.index() - 1]);
      for (const auto& e : sparse.entries) {
        const std::size_t s = cfg.global_index(e.address);
        for (std::size_t k = 0; k < cfg.ell; ++k) model.W(s, k) = f.add(model.W(s, k), e.delta[k]);
      }
      for (std::size_t s = 0; s < cfg.P; ++s) {
        const auto p = map_real_to_permuted(pkg.user_bundle, cfg.address_of(s), cfg.scheme);
        EXPECT_EQ(private_read(cfg, nodes, p), model.subpacket(s));
      }
    }
  }
}

// Distribution over all permutation bundles of the sorted permuted addresses
// one database observes for a given real sparse set.
std::map<std::vector<PermutedAddress>, int> observed_distribution(
    const ModelConfig& cfg, const std::vector<RealAddress>& where) {
  std::vector<std::vector<std::size_t>> perms2{{1, 2}, {2, 1}};
  std::vector<PermutationBundle> bundles;
  for (const auto& a : perms2) {
    for (const auto& b : perms2) {
      if (cfg.scheme == SchemeCase::kCase1) {
        bundles.push_back({{Permutation(a), Permutation(b)}, std::nullopt});
      } else {
        for (const auto& s : perms2) bundles.push_back({{Permutation(a), Permutation(b)}, Permutation(s)});
      }
    }
  }
  std::map<std::vector<PermutedAddress>, int> dist;
  SparseUpdateSet sparse;
  for (auto a : where) sparse.entries.push_back({a, {Fq{1}}});
  for (const auto& b : bundles) {
    const auto streams = prepare_write(cfg, b, sparse, 3);
    std::vector<PermutedAddress> seen;
    for (const auto& t : streams[0]) seen.push_back(t.address);
    ++dist[seen];
  }
  return dist;
}

TEST(IndexPrivacyTest, ObservedAddressesDependOnlyOnTheProfile) {
  for (SchemeCase c : {SchemeCase::kCase1, SchemeCase::kCase2}) {
    const auto cfg = ModelConfig::make(c, 4, 2, 1, 0.5, 0.5, 31);
    std::vector<RealAddress> all;
    for (std::size_t s = 0; s < 4; ++s) all.push_back(cfg.address_of(s));
    std::map<std::vector<std::size_t>, std::vector<std::map<std::vector<PermutedAddress>, int>>> by_profile;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        std::vector<std::size_t> profile(2, 0);
        ++profile[all[i].segment - 1];
        ++profile[all[j].segment - 1];
        if (c == SchemeCase::kCase2) std::sort(profile.begin(), profile.end());
        by_profile[profile].push_back(observed_distribution(cfg, {all[i], all[j]}));
      }
    }
    std::size_t compared = 0;
    for (const auto& [profile, dists] : by_profile) {
      for (const auto& d : dists) {
        EXPECT_EQ(d, dists.front());
        ++compared;
      }
    }
    EXPECT_EQ(compared, 6U);
    EXPECT_EQ(by_profile.size(), c == SchemeCase::kCase1 ? 3U : 2U);
  }
}

}  // namespace
}  // namespace sparsefl
