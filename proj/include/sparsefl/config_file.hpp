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

// Flat key-value experiment files. One `key = value` per line, `#` starts a
// comment, string values may be double-quoted. The accepted syntax is a
// subset of TOML, so the files can carry a .toml extension.
//
//   case = 2
//   P = 12
//   B = 3
//   ell = 3          # N is derived (2*ell+2 or 2*ell+4) unless given
//   r = 0.25
//   r_prime = 0.25
//   q = 2147483647
//   f = "1,2,3"      # optional, default f_i = i
//   alpha = "..."    # optional, default alpha_n = ell + n
//   users = 3
//   rounds = 5
//   seed = 7
//   magnitudes = "zipf:1.2"   # or "uniform"

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsefl/field.hpp"
#include "sparsefl/model.hpp"

namespace sparsefl {

class ConfigFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synthetic update-magnitude law used to drive top-r selection.
struct MagnitudeDistribution {
  enum class Kind { kUniform, kZipf };
  Kind kind = Kind::kUniform;
  double exponent = 1.0;

  static MagnitudeDistribution parse(const std::string& s) {
    if (s == "uniform") return {};
    if (s.rfind("zipf", 0) == 0) {
      MagnitudeDistribution d{Kind::kZipf, 1.0};
      if (s.size() > 4) {
        if (s[4] != ':' && s[4] != '(') throw ConfigFileError("bad magnitude law '" + s + "'");
        std::string num = s.substr(5);
        if (!num.empty() && num.back() == ')') num.pop_back();
        try {
          d.exponent = std::stod(num);
        } catch (const std::exception&) {
          throw ConfigFileError("bad zipf exponent in '" + s + "'");
        }
      }
      if (!(d.exponent > 0)) throw ConfigFileError("zipf exponent must be positive");
      return d;
    }
    throw ConfigFileError("unknown magnitude law '" + s + "' (uniform | zipf:<s>)");
  }

  std::string to_string() const {
    if (kind == Kind::kUniform) return "uniform";
    std::ostringstream os;
    os << "zipf:" << exponent;
    return os.str();
  }
};

struct ExperimentConfig {
  ModelConfig model;
  std::size_t users = 1;
  std::size_t rounds = 1;
  std::uint64_t seed = 1;
  MagnitudeDistribution magnitudes;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<Fq> parse_constants(const std::string& s, const std::string& key) {
  std::vector<Fq> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(Fq{std::stoull(item)});
    } catch (const std::exception&) {
      throw ConfigFileError("bad integer '" + item + "' in " + key);
    }
  }
  return out;
}

}  // namespace detail

/// Parses key-value text into raw string pairs, rejecting duplicates.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigFileError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw ConfigFileError("line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ConfigFileError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

inline ExperimentConfig experiment_from_key_values(std::map<std::string, std::string> kv) {
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto as_size = [](const std::string& key, const std::string& v) -> std::size_t {
    try {
      std::size_t pos = 0;
      const auto x = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
      throw ConfigFileError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
  };
  auto as_double = [](const std::string& key, const std::string& v) -> double {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigFileError("key '" + key + "' expects a number, got '" + v + "'");
    }
  };
  auto required = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigFileError("missing required key '" + key + "'");
    return *v;
  };

  ExperimentConfig ec;
  ModelConfig& m = ec.model;
  m.scheme = parse_scheme_case(take("case").value_or("1"));
  m.P = as_size("P", required("P"));
  m.B = as_size("B", required("B"));
  m.ell = as_size("ell", required("ell"));
  m.N = databases_for(m.scheme, m.ell);
  if (auto n = take("N")) m.N = as_size("N", *n);
  m.r = as_double("r", required("r"));
  m.r_prime = as_double("r_prime", required("r_prime"));
  std::uint64_t q = PrimeField::kDefaultModulus;
  if (auto v = take("q")) q = as_size("q", *v);
  m.field = FieldConfig::make_default(m.ell, m.N, q);
  if (auto v = take("f")) m.field.f = detail::parse_constants(*v, "f");
  if (auto v = take("alpha")) m.field.alpha = detail::parse_constants(*v, "alpha");
  if (auto v = take("users")) ec.users = as_size("users", *v);
  if (auto v = take("rounds")) ec.rounds = as_size("rounds", *v);
  if (auto v = take("seed")) ec.seed = as_size("seed", *v);
  if (auto v = take("magnitudes")) ec.magnitudes = MagnitudeDistribution::parse(*v);
  if (!kv.empty()) throw ConfigFileError("unknown key '" + kv.begin()->first + "'");
  return ec;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("config file not found: " + path);
  return experiment_from_key_values(parse_key_values(in));
}

inline void write_experiment_config(std::ostream& os, const ExperimentConfig& ec) {
  auto join = [](const std::vector<Fq>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i].v);
    return s;
  };
  const ModelConfig& m = ec.model;
  os << std::setprecision(17);
  os << "case = " << to_string(m.scheme) << "\n"
     << "P = " << m.P << "\nB = " << m.B << "\nN = " << m.N << "\nell = " << m.ell << "\n"
     << "r = " << m.r << "\nr_prime = " << m.r_prime << "\nq = " << m.field.q << "\n"
     << "f = \"" << join(m.field.f) << "\"\nalpha = \"" << join(m.field.alpha) << "\"\n"
     << "users = " << ec.users << "\nrounds = " << ec.rounds << "\nseed = " << ec.seed << "\n"
     << "magnitudes = \"" << ec.magnitudes.to_string() << "\"\n";
}

}  // namespace sparsefl
