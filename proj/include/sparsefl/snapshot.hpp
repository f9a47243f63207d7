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

// Versioned JSON snapshot of an InitPackage.

#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparsefl/coordinator.hpp"

namespace sparsefl {

inline constexpr const char* kSnapshotFormat = "sparsefl.init/1";

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson to_json(std::span<const Fq> v) {
  ojson a = ojson::array();
  for (Fq x : v) a.push_back(x.v);
  return a;
}

inline std::vector<Fq> fq_vector(const ojson& a) {
  std::vector<Fq> out;
  for (const auto& x : a) out.push_back(Fq{x.get<std::uint64_t>()});
  return out;
}

inline ojson to_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(to_json(m.row(r)));
  return rows;
}

inline Matrix matrix_from(const ojson& rows) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows[0].size();
  Matrix m(nr, nc);
  for (std::size_t r = 0; r < nr; ++r) {
    if (rows[r].size() != nc) throw std::invalid_argument("snapshot: ragged matrix");
    for (std::size_t c = 0; c < nc; ++c) m(r, c) = Fq{rows[r][c].get<std::uint64_t>()};
  }
  return m;
}

inline ojson to_json(const Permutation& p) { return p.image(); }

}  // namespace detail

inline nlohmann::ordered_json snapshot_json(const InitPackage& pkg) {
  using detail::ojson;
  const ModelConfig& c = pkg.config;
  ojson j;
  j["format"] = kSnapshotFormat;
  j["config"] = {{"case", to_string(c.scheme)}, {"P", c.P},      {"B", c.B},
                 {"N", c.N},                    {"ell", c.ell},  {"r", c.r},
                 {"r_prime", c.r_prime},        {"q", c.field.q}, {"f", detail::to_json(c.field.f)},
                 {"alpha", detail::to_json(c.field.alpha)}};
  ojson user;
  ojson within = ojson::array();
  for (const auto& p : pkg.user_bundle.within) within.push_back(detail::to_json(p));
  user["within"] = within;
  if (pkg.user_bundle.segmentwise) user["segmentwise"] = detail::to_json(*pkg.user_bundle.segmentwise);
  j["user_bundle"] = user;
  ojson dbs = ojson::array();
  for (const auto& db : pkg.db_packages) {
    ojson d;
    d["n"] = db.n;
    ojson ws = ojson::array();
    for (const auto& m : db.within) ws.push_back(detail::to_json(m));
    d["within"] = ws;
    if (db.segment) d["segment"] = detail::to_json(*db.segment);
    d["storage"] = detail::to_json(db.storage);
    dbs.push_back(d);
  }
  j["databases"] = dbs;
  return j;
}

inline InitPackage snapshot_from_json(const nlohmann::ordered_json& j) {
  if (j.value("format", std::string()) != kSnapshotFormat) {
    throw std::invalid_argument("snapshot: unsupported format tag");
  }
  InitPackage pkg;
  const auto& c = j.at("config");
  ModelConfig& m = pkg.config;
  m.scheme = parse_scheme_case(c.at("case").get<std::string>());
  m.P = c.at("P").get<std::size_t>();
  m.B = c.at("B").get<std::size_t>();
  m.N = c.at("N").get<std::size_t>();
  m.ell = c.at("ell").get<std::size_t>();
  m.r = c.at("r").get<double>();
  m.r_prime = c.at("r_prime").get<double>();
  m.field.q = c.at("q").get<std::uint64_t>();
  m.field.f = detail::fq_vector(c.at("f"));
  m.field.alpha = detail::fq_vector(c.at("alpha"));
  validate_config(m);
  for (const auto& p : j.at("user_bundle").at("within")) {
    pkg.user_bundle.within.emplace_back(p.get<std::vector<std::size_t>>());
  }
  if (j.at("user_bundle").contains("segmentwise")) {
    pkg.user_bundle.segmentwise =
        Permutation(j.at("user_bundle").at("segmentwise").get<std::vector<std::size_t>>());
  }
  check_bundle(m, pkg.user_bundle);
  for (const auto& d : j.at("databases")) {
    DatabasePackage db;
    db.n = d.at("n").get<std::size_t>();
    for (const auto& w : d.at("within")) db.within.push_back(detail::matrix_from(w));
    if (d.contains("segment")) db.segment = detail::matrix_from(d.at("segment"));
    db.storage = detail::fq_vector(d.at("storage"));
    pkg.db_packages.push_back(std::move(db));
  }
  return pkg;
}

inline void save_snapshot(const InitPackage& pkg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot to " + path);
  out << snapshot_json(pkg).dump() << '\n';
}

inline InitPackage load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot not found: " + path);
  return snapshot_from_json(nlohmann::ordered_json::parse(in));
}

}  // namespace sparsefl
