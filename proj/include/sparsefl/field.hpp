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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsefl {

/// Element of F_q. The value is always reduced into [0, q) by the owning
/// PrimeField; a bare Fq carries no modulus.
struct Fq {
  std::uint64_t v = 0;

  friend constexpr auto operator<=>(const Fq&, const Fq&) = default;
};

class DivisionByZeroError : public std::domain_error {
 public:
  DivisionByZeroError() : std::domain_error("inverse of zero in F_q") {}
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(std::size_t rank, std::size_t order)
      : std::runtime_error("singular system: rank " + std::to_string(rank) +
                           " < " + std::to_string(order)),
        rank_(rank) {}

  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

namespace detail {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t mulmod(std::uint64_t a, std::uint64_t b,
                               std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % m);
}

constexpr std::uint64_t powmod(std::uint64_t base, std::uint64_t exp,
                               std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1U) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1U;
  }
  return result;
}

}  // namespace detail

/// Deterministic Miller-Rabin; exact for every 64-bit input.
constexpr bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1U) == 0) {
    d >>= 1U;
    ++s;
  }
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = detail::powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = detail::mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Arithmetic in the prime field F_q for a runtime modulus q < 2^63.
class PrimeField {
 public:
  static constexpr std::uint64_t kDefaultModulus = 2147483647ULL;

  explicit PrimeField(std::uint64_t q = kDefaultModulus) : q_(q) {
    if (q >= (1ULL << 63U) || !is_prime(q)) {
      throw std::invalid_argument("field modulus must be a prime below 2^63, got " +
                                  std::to_string(q));
    }
  }

  std::uint64_t modulus() const noexcept { return q_; }

  Fq operator()(std::int64_t x) const {
    auto m = static_cast<std::int64_t>(q_);
    std::int64_t r = x % m;
    if (r < 0) r += m;
    return Fq{static_cast<std::uint64_t>(r)};
  }
  Fq from_u64(std::uint64_t x) const { return Fq{x % q_}; }

  Fq zero() const { return Fq{0}; }
  Fq one() const { return Fq{1}; }

  Fq add(Fq a, Fq b) const {
    std::uint64_t s = a.v + b.v;
    return Fq{s >= q_ ? s - q_ : s};
  }
  Fq sub(Fq a, Fq b) const { return Fq{a.v >= b.v ? a.v - b.v : a.v + q_ - b.v}; }
  Fq neg(Fq a) const { return Fq{a.v == 0 ? 0 : q_ - a.v}; }
  Fq mul(Fq a, Fq b) const { return Fq{detail::mulmod(a.v, b.v, q_)}; }
  Fq pow(Fq a, std::uint64_t e) const { return Fq{detail::powmod(a.v, e, q_)}; }

  /// Fermat inverse a^(q-2).
  Fq inv(Fq a) const {
    if (a.v == 0) throw DivisionByZeroError();
    return pow(a, q_ - 2);
  }
  Fq div(Fq a, Fq b) const { return mul(a, inv(b)); }

  template <class Rng>
  Fq random(Rng& rng) const {
    std::uniform_int_distribution<std::uint64_t> dist(0, q_ - 1);
    return Fq{dist(rng)};
  }
  template <class Rng>
  Fq random_nonzero(Rng& rng) const {
    std::uniform_int_distribution<std::uint64_t> dist(1, q_ - 1);
    return Fq{dist(rng)};
  }

  friend bool operator==(const PrimeField&, const PrimeField&) = default;

 private:
  std::uint64_t q_;
};

/// Free-function form of PrimeField::inv.
inline Fq field_inv(const PrimeField& field, Fq a) { return field.inv(a); }

/// Dense row-major matrix over F_q.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Fq{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Fq& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Fq& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<const Fq> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const Fq> data() const noexcept { return data_; }
  std::span<Fq> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Fq> data_;
};

template <class Rng>
Matrix random_matrix(const PrimeField& field, std::size_t rows, std::size_t cols,
                     Rng& rng) {
  Matrix m(rows, cols);
  for (Fq& x : m.data()) x = field.random(rng);
  return m;
}

inline Matrix mat_add(const PrimeField& field, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mat_add: shape mismatch");
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = field.add(a.data()[i], b.data()[i]);
  }
  return out;
}

inline Matrix mat_sub(const PrimeField& field, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mat_sub: shape mismatch");
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = field.sub(a.data()[i], b.data()[i]);
  }
  return out;
}

/// Exact product A*B.
inline Matrix mat_mul(const PrimeField& field, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("mat_mul: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()) + " differ");
  }
  const std::uint64_t q = field.modulus();
  Matrix out(a.rows(), b.cols());
  std::vector<detail::u128> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const std::uint64_t aik = a(i, k).v;
      if (aik == 0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        // a product is < 2^126, so one reduction per step keeps acc < 2^127
        acc[j] = (acc[j] + static_cast<detail::u128>(aik) * brow[j].v) % q;
      }
    }
    for (std::size_t j = 0; j < b.cols(); ++j) {
      out(i, j) = Fq{static_cast<std::uint64_t>(acc[j])};
    }
  }
  return out;
}

inline std::vector<Fq> mat_vec(const PrimeField& field, const Matrix& a,
                               std::span<const Fq> x) {
  if (a.cols() != x.size()) throw DimensionError("mat_vec: length mismatch");
  std::vector<Fq> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Fq s{};
    const auto r = a.row(i);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k].v != 0) s = field.add(s, field.mul(r[k], x[k]));
    }
    out[i] = s;
  }
  return out;
}

inline Fq dot(const PrimeField& field, std::span<const Fq> a,
              std::span<const Fq> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  Fq s{};
  for (std::size_t i = 0; i < a.size(); ++i) s = field.add(s, field.mul(a[i], b[i]));
  return s;
}

/// Gauss-Jordan elimination with first-nonzero pivoting. Returns the rank of
/// `a` and leaves it in reduced row echelon form; `rhs` is transformed along.
inline std::size_t row_reduce(const PrimeField& field, Matrix& a,
                              std::vector<Fq>* rhs) {
  std::size_t rank = 0;
  for (std::size_t col = 0; col < a.cols() && rank < a.rows(); ++col) {
    std::size_t pivot = rank;
    while (pivot < a.rows() && a(pivot, col).v == 0) ++pivot;
    if (pivot == a.rows()) continue;
    if (pivot != rank) {
      for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a(pivot, c), a(rank, c));
      if (rhs) std::swap((*rhs)[pivot], (*rhs)[rank]);
    }
    const Fq scale = field.inv(a(rank, col));
    for (std::size_t c = col; c < a.cols(); ++c) a(rank, c) = field.mul(a(rank, c), scale);
    if (rhs) (*rhs)[rank] = field.mul((*rhs)[rank], scale);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      if (r == rank || a(r, col).v == 0) continue;
      const Fq factor = a(r, col);
      for (std::size_t c = col; c < a.cols(); ++c) {
        a(r, c) = field.sub(a(r, c), field.mul(factor, a(rank, c)));
      }
      if (rhs) (*rhs)[r] = field.sub((*rhs)[r], field.mul(factor, (*rhs)[rank]));
    }
    ++rank;
  }
  return rank;
}

inline std::size_t rank_of(const PrimeField& field, Matrix a) {
  return row_reduce(field, a, nullptr);
}

/// Solves A x = b for square A. Throws SingularMatrixError carrying the rank
/// when A is not invertible.
inline std::vector<Fq> solve_linear(const PrimeField& field, Matrix a,
                                    std::vector<Fq> b) {
  if (a.rows() != a.cols()) throw DimensionError("solve_linear: matrix not square");
  if (b.size() != a.rows()) throw DimensionError("solve_linear: rhs length mismatch");
  const std::size_t rank = row_reduce(field, a, &b);
  if (rank < a.rows()) throw SingularMatrixError(rank, a.rows());
  return b;
}

/// Field modulus plus the public evaluation constants: f_1..f_ell for the
/// symbol positions and alpha_1..alpha_N for the databases.
struct FieldConfig {
  std::uint64_t q = PrimeField::kDefaultModulus;
  std::vector<Fq> f;
  std::vector<Fq> alpha;

  /// f_i = i and alpha_n = ell + n.
  static FieldConfig make_default(std::size_t ell, std::size_t databases,
                                  std::uint64_t q = PrimeField::kDefaultModulus) {
    FieldConfig cfg;
    cfg.q = q;
    for (std::size_t i = 1; i <= ell; ++i) cfg.f.push_back(Fq{i % q});
    for (std::size_t n = 1; n <= databases; ++n) cfg.alpha.push_back(Fq{(ell + n) % q});
    return cfg;
  }

  PrimeField field() const { return PrimeField(q); }

  /// Violated constraints, empty when the config is usable.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (q >= (1ULL << 63U) || !is_prime(q)) {
      out.push_back("q must be a prime below 2^63");
      return out;
    }
    if (q <= f.size() + alpha.size()) out.push_back("q must exceed ell + N");
    std::vector<std::uint64_t> all;
    for (Fq x : f) all.push_back(x.v);
    for (Fq x : alpha) all.push_back(x.v);
    for (std::uint64_t x : all) {
      if (x >= q) {
        out.push_back("constant " + std::to_string(x) + " is not reduced mod q");
        break;
      }
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      out.push_back("constants f and alpha must be pairwise distinct");
    }
    return out;
  }

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

}  // namespace sparsefl
