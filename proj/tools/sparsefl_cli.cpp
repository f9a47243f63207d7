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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sparsefl/sparsefl.hpp"

namespace {

namespace fs = std::filesystem;
using sparsefl::SchemeCase;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SchemeCase parse_case_flag(const std::string& s) {
  try {
    return sparsefl::parse_scheme_case(s);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

/// Re-derives N and the default evaluation points after a case override.
void apply_case(sparsefl::ModelConfig& m, SchemeCase c) {
  if (m.scheme == c) return;
  m.scheme = c;
  m.N = sparsefl::databases_for(c, m.ell);
  m.field = sparsefl::FieldConfig::make_default(m.ell, m.N, m.field.q);
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

nlohmann::ordered_json cost_json(const sparsefl::CostReport& c) {
  return {{"reading_cost", c.reading_cost},
          {"writing_cost", c.writing_cost},
          {"total_cost", c.total_cost},
          {"measured_reading_symbols", c.measured_reading_symbols},
          {"measured_writing_symbols", c.measured_writing_symbols},
          {"L", c.L},
          {"analytic_reading_cost", c.analytic_reading_cost},
          {"analytic_writing_cost", c.analytic_writing_cost},
          {"analytic_reading_cost_ceil", c.analytic_reading_cost_ceil},
          {"analytic_writing_cost_ceil", c.analytic_writing_cost_ceil}};
}

struct InitArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scheme;
  std::string out_dir = ".";
};

int cmd_init(const InitArgs& a) {
  sparsefl::ExperimentConfig ec;
  if (!a.config.empty()) {
    ec = sparsefl::load_experiment_config(a.config);
  } else {
    ec.model = sparsefl::ModelConfig::make(SchemeCase::kCase2, 12, 3, 3, 0.25, 0.25);
  }
  if (!a.scheme.empty()) apply_case(ec.model, parse_case_flag(a.scheme));
  if (a.seed) ec.seed = *a.seed;
  const auto& cfg = sparsefl::validate_config(ec.model);
  auto model_rng = sparsefl::make_rng(ec.seed, sparsefl::stream::kInitialModel);
  const auto model = sparsefl::GlobalModel::random(cfg, model_rng);
  const auto pkg = sparsefl::initialize(
      cfg, model, sparsefl::make_rng(ec.seed, sparsefl::stream::kCoordinator)());
  const fs::path out = ensure_dir(a.out_dir) / "init.json";
  sparsefl::save_snapshot(pkg, out.string());
  std::cout << "wrote " << out.string() << " (" << to_string(cfg.scheme) << ", P=" << cfg.P
            << ", B=" << cfg.B << ", N=" << cfg.N << ", ell=" << cfg.ell << ")\n";
  return kExitOk;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scheme;
  std::string out_dir = ".";
};

int cmd_run(const RunArgs& a) {
  auto ec = sparsefl::load_experiment_config(a.config);
  if (!a.scheme.empty()) apply_case(ec.model, parse_case_flag(a.scheme));
  if (a.seed) ec.seed = *a.seed;
  const fs::path dir = ensure_dir(a.out_dir);
  const auto result = sparsefl::run_experiment(ec);

  const fs::path transcript_path = dir / "transcript.jsonl";
  {
    auto out = open_out(transcript_path);
    result.transcript.write_jsonl(out);
  }

  bool identity_ok = true;
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& rep : result.rounds) {
    identity_ok = identity_ok && rep.cost_identity_holds;
    rounds.push_back({{"round", rep.round},
                      {"read_correct", rep.read_correct},
                      {"write_correct", rep.write_correct},
                      {"costs", cost_json(rep.costs)},
                      {"cost_identity_holds", rep.cost_identity_holds},
                      {"transcript_path", transcript_path.filename().string()}});
  }
  nlohmann::ordered_json report;
  report["case"] = to_string(ec.model.scheme);
  report["P"] = ec.model.P;
  report["B"] = ec.model.B;
  report["N"] = ec.model.N;
  report["ell"] = ec.model.ell;
  report["users"] = ec.users;
  report["rounds"] = rounds;
  report["storage"] = {{"data_symbols", sparsefl::storage_report(ec.model).data_symbols},
                       {"total_symbols", sparsefl::storage_report(ec.model).total()},
                       {"complexity", sparsefl::storage_report(ec.model).complexity_label}};
  const fs::path report_path = dir / "report.json";
  {
    auto out = open_out(report_path);
    out << report.dump(2) << '\n';
  }

  std::cout << "rounds=" << result.rounds.size() << " users=" << ec.users
            << " correct=true cost_identity=" << (identity_ok ? "true" : "false") << "\n"
            << "wrote " << transcript_path.string() << " and " << report_path.string() << "\n";
  if (!identity_ok) {
    std::cerr << "error: measured costs disagree with the closed forms\n";
    return kExitFailure;
  }
  return kExitOk;
}

struct LeakageArgs {
  std::size_t P = 12;
  std::size_t Pr = 3;
  std::vector<std::size_t> Bs{1, 2, 3, 4, 6};
  std::string out_dir;
};

int cmd_leakage(const LeakageArgs& a) {
  std::ostringstream csv;
  sparsefl::write_leakage_csv(csv, a.P, a.Pr, a.Bs);
  std::cout << csv.str();
  if (!a.out_dir.empty()) open_out(ensure_dir(a.out_dir) / "leakage.csv") << csv.str();
  return kExitOk;
}

struct CostsArgs {
  std::string scheme = "1";
  std::size_t N = 10;
  double r = 0.01;
  double r_prime = 0.01;
  std::size_t P = 100;
  std::size_t B = 1;
  std::uint64_t q = sparsefl::PrimeField::kDefaultModulus;
  std::string out_dir;
};

int cmd_costs(const CostsArgs& a) {
  std::ostringstream csv;
  sparsefl::write_cost_csv_header(csv);
  sparsefl::write_cost_csv_row(
      csv, sparsefl::cost_row(parse_case_flag(a.scheme), a.N, a.r, a.r_prime, a.P, a.B, a.q));
  std::cout << csv.str();
  if (!a.out_dir.empty()) open_out(ensure_dir(a.out_dir) / "costs.csv") << csv.str();
  return kExitOk;
}

struct TradeoffArgs {
  double epsilon = std::numeric_limits<double>::infinity();
  std::size_t P = 12;
  std::size_t Pr = 3;
  std::size_t ell = 3;
  std::vector<std::size_t> Bs{1, 2, 3, 4, 6};
  std::string scheme = "1";
};

int cmd_tradeoff(const TradeoffArgs& a) {
  const auto choice =
      sparsefl::optimal_B(a.P, a.Pr, a.ell, a.epsilon, parse_case_flag(a.scheme), a.Bs);
  std::cout << "B,storage_symbols,leakage_bits\n"
            << choice.B << ',' << choice.storage_symbols << ','
            << sparsefl::format_double(choice.leakage_bits) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private read/update of sparse federated-learning models"};
  app.require_subcommand(1);

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init", "Initialize storage and snapshot the package");
  init_cmd->add_option("--config", init.config, "Experiment config file");
  init_cmd->add_option("--seed", init.seed, "Random seed");
  init_cmd->add_option("--case", init.scheme, "Scheme case (1 or 2)");
  init_cmd->add_option("--out-dir", init.out_dir, "Output directory");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a multi-user, multi-round experiment");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required();
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("--case", run.scheme, "Override the scheme case (1 or 2)");
  run_cmd->add_option("--out-dir", run.out_dir, "Output directory");

  LeakageArgs leak;
  auto* leak_cmd = app.add_subcommand("leakage", "Leakage entropy sweep over B (CSV)");
  leak_cmd->add_option("--P", leak.P, "Number of subpackets");
  leak_cmd->add_option("--Pr", leak.Pr, "Number of sparse subpackets");
  leak_cmd->add_option("--B", leak.Bs, "Segment counts")->delimiter(',');
  leak_cmd->add_option("--out-dir", leak.out_dir, "Also write leakage.csv here");

  CostsArgs costs;
  auto* costs_cmd = app.add_subcommand("costs", "Evaluate the cost table row (CSV)");
  costs_cmd->add_option("--case", costs.scheme, "Scheme case (1 or 2)");
  costs_cmd->add_option("--N", costs.N, "Number of databases");
  costs_cmd->add_option("--r", costs.r, "Uplink sparsification rate");
  costs_cmd->add_option("--rprime", costs.r_prime, "Downlink sparsification rate");
  costs_cmd->add_option("--P", costs.P, "Number of subpackets");
  costs_cmd->add_option("--B", costs.B, "Number of segments");
  costs_cmd->add_option("--q", costs.q, "Field size");
  costs_cmd->add_option("--out-dir", costs.out_dir, "Also write costs.csv here");

  TradeoffArgs trade;
  auto* trade_cmd = app.add_subcommand("tradeoff", "Smallest-storage B under a leakage budget");
  trade_cmd->add_option("--epsilon", trade.epsilon, "Leakage budget in bits (strict)");
  trade_cmd->add_option("--P", trade.P, "Number of subpackets");
  trade_cmd->add_option("--Pr", trade.Pr, "Number of sparse subpackets");
  trade_cmd->add_option("--ell", trade.ell, "Subpacketization");
  trade_cmd->add_option("--B", trade.Bs, "Candidate segment counts")->delimiter(',');
  trade_cmd->add_option("--case", trade.scheme, "Scheme case (1 or 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*init_cmd) return cmd_init(init);
    if (*run_cmd) return cmd_run(run);
    if (*leak_cmd) return cmd_leakage(leak);
    if (*costs_cmd) return cmd_costs(costs);
    if (*trade_cmd) return cmd_tradeoff(trade);
  } catch (const sparsefl::CorrectnessError& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return kExitFailure;
  } catch (const sparsefl::ConfigFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sparsefl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
