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
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "sparsefl/field.hpp"
#include "sparsefl/model.hpp"

namespace sparsefl {

/// Bijection on {1..n}. `p(j)` is the real position of permuted position j.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<std::size_t> image) : image_(std::move(image)) {
    inverse_.assign(image_.size(), 0);
    for (std::size_t j = 0; j < image_.size(); ++j) {
      const std::size_t k = image_[j];
      if (k < 1 || k > image_.size() || inverse_[k - 1] != 0) {
        throw std::invalid_argument("permutation image is not a bijection on {1..n}");
      }
      inverse_[k - 1] = j + 1;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> img(n);
    std::iota(img.begin(), img.end(), std::size_t{1});
    return Permutation(std::move(img));
  }

  template <class Rng>
  static Permutation random(std::size_t n, Rng& rng) {
    std::vector<std::size_t> img(n);
    std::iota(img.begin(), img.end(), std::size_t{1});
    std::shuffle(img.begin(), img.end(), rng);
    return Permutation(std::move(img));
  }

  std::size_t size() const noexcept { return image_.size(); }

  std::size_t operator()(std::size_t permuted) const {
    if (permuted < 1 || permuted > image_.size()) {
      throw std::out_of_range("permutation argument out of range");
    }
    return image_[permuted - 1];
  }

  std::size_t inverse(std::size_t real) const {
    if (real < 1 || real > inverse_.size()) {
      throw std::out_of_range("permutation argument out of range");
    }
    return inverse_[real - 1];
  }

  const std::vector<std::size_t>& image() const noexcept { return image_; }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.image_ == b.image_;
  }

 private:
  std::vector<std::size_t> image_;
  std::vector<std::size_t> inverse_;
};

/// User-side secret: one permutation per segment, plus the segment
/// permutation in Case2.
struct PermutationBundle {
  std::vector<Permutation> within;
  std::optional<Permutation> segmentwise;

  friend bool operator==(const PermutationBundle&, const PermutationBundle&) = default;
};

template <class Rng>
PermutationBundle random_bundle(const ModelConfig& cfg, Rng& rng) {
  PermutationBundle bundle;
  for (std::size_t i = 0; i < cfg.B; ++i) {
    bundle.within.push_back(Permutation::random(cfg.segment_size(), rng));
  }
  if (cfg.scheme == SchemeCase::kCase2) bundle.segmentwise = Permutation::random(cfg.B, rng);
  return bundle;
}

inline PermutationBundle random_bundle(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_bundle(cfg, rng);
}

inline void check_bundle(const ModelConfig& cfg, const PermutationBundle& bundle) {
  if (bundle.within.size() != cfg.B) {
    throw std::invalid_argument("bundle needs one within-segment permutation per segment");
  }
  for (const auto& p : bundle.within) {
    if (p.size() != cfg.segment_size()) {
      throw std::invalid_argument("within-segment permutation has wrong length");
    }
  }
  const bool wants_segmentwise = cfg.scheme == SchemeCase::kCase2;
  if (wants_segmentwise != bundle.segmentwise.has_value()) {
    throw std::invalid_argument("segment permutation must be present exactly in case 2");
  }
  if (bundle.segmentwise && bundle.segmentwise->size() != cfg.B) {
    throw std::invalid_argument("segment permutation has wrong length");
  }
}

/// Additive noise for the reversing matrices. The same copy goes to every
/// database; only the Gamma_n parts differ between databases.
struct NoiseMatrices {
  std::vector<Matrix> zbar;  // B matrices, (P*ell/B) square
  std::optional<Matrix> zhat;  // (B*ell) square, Case2 only

  static NoiseMatrices zeros(const ModelConfig& cfg) {
    NoiseMatrices nm;
    for (std::size_t i = 0; i < cfg.B; ++i) {
      nm.zbar.emplace_back(cfg.segment_symbols(), cfg.segment_symbols());
    }
    if (cfg.scheme == SchemeCase::kCase2) nm.zhat = Matrix(cfg.B * cfg.ell, cfg.B * cfg.ell);
    return nm;
  }

  template <class Rng>
  static NoiseMatrices random(const ModelConfig& cfg, Rng& rng) {
    const PrimeField field = cfg.field.field();
    NoiseMatrices nm;
    for (std::size_t i = 0; i < cfg.B; ++i) {
      nm.zbar.push_back(random_matrix(field, cfg.segment_symbols(), cfg.segment_symbols(), rng));
    }
    if (cfg.scheme == SchemeCase::kCase2) {
      nm.zhat = random_matrix(field, cfg.B * cfg.ell, cfg.B * cfg.ell, rng);
    }
    return nm;
  }

  friend bool operator==(const NoiseMatrices&, const NoiseMatrices&) = default;
};

/// Diagonal of Gamma_n: 1/(f_i - alpha_n), i = 1..ell. `n` is 1-based.
inline std::vector<Fq> gamma_diagonal(const FieldConfig& fc, std::size_t n) {
  const PrimeField field = fc.field();
  std::vector<Fq> out;
  out.reserve(fc.f.size());
  for (Fq f : fc.f) out.push_back(field.inv(field.sub(f, fc.alpha.at(n - 1))));
  return out;
}

/// Diagonal of Gamma_n^{-1}: f_i - alpha_n.
inline std::vector<Fq> gamma_inverse_diagonal(const FieldConfig& fc, std::size_t n) {
  const PrimeField field = fc.field();
  std::vector<Fq> out;
  out.reserve(fc.f.size());
  for (Fq f : fc.f) out.push_back(field.sub(f, fc.alpha.at(n - 1)));
  return out;
}

namespace detail {

/// Block permutation matrix with `diag` on the diagonal of block
/// (perm(j), j) for every j.
inline Matrix block_permutation(const Permutation& perm, std::span<const Fq> diag) {
  const std::size_t ell = diag.size();
  Matrix m(perm.size() * ell, perm.size() * ell);
  for (std::size_t j = 1; j <= perm.size(); ++j) {
    const std::size_t k = perm(j);
    for (std::size_t s = 0; s < ell; ++s) m((k - 1) * ell + s, (j - 1) * ell + s) = diag[s];
  }
  return m;
}

}  // namespace detail

/// R_n^[i]: Gamma_n at block (perm(j), j), zero blocks elsewhere, plus zbar.
inline Matrix build_within_matrix(const ModelConfig& cfg, const Permutation& perm,
                                  std::size_t n, const Matrix& zbar) {
  if (perm.size() != cfg.segment_size() || zbar.rows() != cfg.segment_symbols() ||
      zbar.cols() != cfg.segment_symbols()) {
    throw DimensionError("build_within_matrix: dimensions do not match the config");
  }
  const auto gamma = gamma_diagonal(cfg.field, n);
  return mat_add(cfg.field.field(), detail::block_permutation(perm, gamma), zbar);
}

/// H_n: identity blocks at (phat(j), j) plus diag(Gamma_n^{-1}, ...) * zhat.
inline Matrix build_segment_matrix(const ModelConfig& cfg, const Permutation& phat,
                                   std::size_t n, const Matrix& zhat) {
  if (cfg.scheme != SchemeCase::kCase2) {
    throw std::logic_error("segment reversing matrix exists only in case 2");
  }
  const std::size_t dim = cfg.B * cfg.ell;
  if (phat.size() != cfg.B || zhat.rows() != dim || zhat.cols() != dim) {
    throw DimensionError("build_segment_matrix: dimensions do not match the config");
  }
  const PrimeField field = cfg.field.field();
  const std::vector<Fq> ones(cfg.ell, Fq{1});
  Matrix h = detail::block_permutation(phat, ones);
  const auto ginv = gamma_inverse_diagonal(cfg.field, n);
  for (std::size_t r = 0; r < dim; ++r) {
    const Fq scale = ginv[r % cfg.ell];
    for (std::size_t c = 0; c < dim; ++c) {
      h(r, c) = field.add(h(r, c), field.mul(scale, zhat(r, c)));
    }
  }
  return h;
}

/// L x L matrix whose (i,j) super-block is I_{P/B} (x) b_{i,j}, where b_{i,j}
/// is the (i,j) ell x ell block of H_n.
inline Matrix expand_segment_matrix(const ModelConfig& cfg, const Matrix& h) {
  const std::size_t ell = cfg.ell;
  const std::size_t seg = cfg.segment_size();
  const std::size_t block = cfg.segment_symbols();
  if (h.rows() != cfg.B * ell || h.cols() != cfg.B * ell) {
    throw DimensionError("expand_segment_matrix: H has wrong shape");
  }
  Matrix out(cfg.L(), cfg.L());
  for (std::size_t bi = 0; bi < cfg.B; ++bi) {
    for (std::size_t bj = 0; bj < cfg.B; ++bj) {
      for (std::size_t rep = 0; rep < seg; ++rep) {
        for (std::size_t a = 0; a < ell; ++a) {
          for (std::size_t b = 0; b < ell; ++b) {
            out(bi * block + rep * ell + a, bj * block + rep * ell + b) =
                h(bi * ell + a, bj * ell + b);
          }
        }
      }
    }
  }
  return out;
}

/// Combined Case2 reversing matrix blockdiag(R_n^[1..B]) * expand(H_n),
/// computed without materializing either factor.
inline Matrix combine_matrices(const ModelConfig& cfg, std::span<const Matrix> within,
                               const Matrix& h) {
  if (within.size() != cfg.B) throw DimensionError("combine_matrices: need B matrices");
  const std::size_t ell = cfg.ell;
  const std::size_t seg = cfg.segment_size();
  const std::size_t block = cfg.segment_symbols();
  if (h.rows() != cfg.B * ell || h.cols() != cfg.B * ell) {
    throw DimensionError("combine_matrices: H has wrong shape");
  }
  const PrimeField field = cfg.field.field();
  Matrix out(cfg.L(), cfg.L());
  for (std::size_t i = 0; i < cfg.B; ++i) {
    const Matrix& r = within[i];
    if (r.rows() != block || r.cols() != block) {
      throw DimensionError("combine_matrices: within-segment matrix has wrong shape");
    }
    for (std::size_t row = 0; row < block; ++row) {
      for (std::size_t rep = 0; rep < seg; ++rep) {
        for (std::size_t bj = 0; bj < cfg.B; ++bj) {
          for (std::size_t b = 0; b < ell; ++b) {
            Fq acc{};
            for (std::size_t a = 0; a < ell; ++a) {
              acc = field.add(acc, field.mul(r(row, rep * ell + a), h(i * ell + a, bj * ell + b)));
            }
            out(i * block + row, bj * block + rep * ell + b) = acc;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace sparsefl
