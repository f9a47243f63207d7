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
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparsefl/field.hpp"
#include "sparsefl/model.hpp"

namespace sparsefl {

/// Combined update for one sparse subpacket, addressed to one database.
/// Carries only the permuted address.
struct UpdateTuple {
  Fq u;
  PermutedAddress address;

  friend bool operator==(const UpdateTuple&, const UpdateTuple&) = default;
};

/// Permuted addresses chosen for download, ascending.
struct ReadSelection {
  std::vector<PermutedAddress> addresses;

  friend bool operator==(const ReadSelection&, const ReadSelection&) = default;
};

struct ReadQuery {
  PermutedAddress target;
  std::vector<Fq> vector;
};

/// Whole field symbols needed to send one subpacket index: ceil(log_q P).
constexpr std::size_t index_symbol_count(std::size_t P, std::uint64_t q) {
  std::size_t c = 0;
  detail::u128 reach = 1;
  while (reach < P) {
    reach *= q;
    ++c;
  }
  return c;
}

enum class Phase { kDownlinkSelect, kRead, kWrite };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::kDownlinkSelect: return "downlink_select";
    case Phase::kRead: return "read";
    case Phase::kWrite: return "write";
  }
  return "?";
}

inline Phase parse_phase(const std::string& s) {
  if (s == "downlink_select") return Phase::kDownlinkSelect;
  if (s == "read") return Phase::kRead;
  if (s == "write") return Phase::kWrite;
  throw std::invalid_argument("unknown transcript phase '" + s + "'");
}

inline std::string db_name(std::size_t n) { return "db" + std::to_string(n); }
inline std::string user_name(std::size_t u) { return "user" + std::to_string(u); }

struct TranscriptRecord {
  std::size_t round = 0;
  Phase phase = Phase::kRead;
  std::string from;
  std::string to;
  std::string payload_kind;
  std::size_t symbol_count = 0;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

/// Append-only log of every message that crosses a party boundary. Cost
/// audits read this and nothing else.
class Transcript {
 public:
  void append(TranscriptRecord rec) { records_.push_back(std::move(rec)); }
  const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Records of a single round.
  Transcript round(std::size_t r) const {
    Transcript out;
    for (const auto& rec : records_) {
      if (rec.round == r) out.append(rec);
    }
    return out;
  }

  void write_jsonl(std::ostream& os) const {
    for (const auto& rec : records_) {
      nlohmann::ordered_json j;
      j["round"] = rec.round;
      j["phase"] = to_string(rec.phase);
      j["from"] = rec.from;
      j["to"] = rec.to;
      j["payload_kind"] = rec.payload_kind;
      j["symbol_count"] = rec.symbol_count;
      os << j.dump() << '\n';
    }
  }

  static Transcript read_jsonl(std::istream& is) {
    Transcript t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        t.append({j.at("round").get<std::size_t>(),
                  parse_phase(j.at("phase").get<std::string>()),
                  j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                  j.at("payload_kind").get<std::string>(),
                  j.at("symbol_count").get<std::size_t>()});
      } catch (const std::exception& e) {
        throw std::invalid_argument("malformed transcript line " + std::to_string(lineno) +
                                    ": " + e.what());
      }
    }
    return t;
  }

 private:
  std::vector<TranscriptRecord> records_;
};

}  // namespace sparsefl
