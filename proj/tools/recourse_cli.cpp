// recourse: command-line front end.
//
//   recourse solve QUERY.json [-o FILE] [--audit]
//   recourse experiment [LOG.csv] [--synthetic n=N silent=K] [--matrix ID[=P]]...
//                       [--mode M] [--seed S] [--format F] [--jobs J]
//                       [--principal p1|both] [--include-identity]
//   recourse generate --synthetic n=N silent=K [--matrix ID[=P]]... [--seed S] [-o FILE]
//   recourse graph (SCM.json | --matrix ID) [-o FILE]
//
// Exit codes: 0 success, 2 well-formed query with no feasible recommendation,
// 1 any error. Relative output paths are resolved under $RECOURSE_OUTPUT_DIR
// when it is set.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recourse/experiment.hpp"
#include "recourse/games.hpp"
#include "recourse/json_io.hpp"
#include "recourse/query_io.hpp"
#include "recourse/recourse.hpp"
#include "recourse/scm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoRecommendation = 2;

std::string resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("RECOURSE_OUTPUT_DIR"); dir && *dir) p = std::filesystem::path(dir) / p;
  }
  return p.string();
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  const auto path = resolve_output(output);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw recourse::Error("cannot write '" + path + "'");
  out << text;
}

struct SyntheticParams {
  std::size_t n_total = 0;
  std::size_t n_silent = 0;
};

// Accepts "n=3294 silent=434" as separate tokens or comma-joined.
SyntheticParams parse_synthetic(const std::vector<std::string>& tokens) {
  SyntheticParams p;
  bool have_n = false, have_silent = false;
  for (const auto& token : tokens) {
    for (const auto& part : recourse::detail::split_csv_line(token)) {
      if (part.empty()) continue;
      const auto eq = part.find('=');
      if (eq == std::string::npos)
        throw recourse::InvalidParamsError("--synthetic expects key=value, got '" + part + "'");
      const auto key = part.substr(0, eq);
      const auto value = recourse::try_parse_rational(part.substr(eq + 1));
      if (!value || value->denominator() != 1 || *value < 0)
        throw recourse::InvalidParamsError("--synthetic " + key + " must be a non-negative integer");
      const auto v = static_cast<std::size_t>(value->numerator());
      if (key == "n") { p.n_total = v; have_n = true; }
      else if (key == "silent") { p.n_silent = v; have_silent = true; }
      else throw recourse::InvalidParamsError("unknown --synthetic key '" + key + "'");
    }
  }
  if (!have_n || !have_silent) throw recourse::InvalidParamsError("--synthetic needs n=... and silent=...");
  return p;
}

// "--matrix table2" or "--matrix table2=0.5 --matrix table3=0.5".
std::map<std::string, double> parse_matrix_mix(const std::vector<std::string>& specs) {
  std::map<std::string, double> mix;
  if (specs.empty()) return {{"table2", 1.0}};
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    const auto id = s.substr(0, eq);
    double share = 1.0;
    if (eq != std::string::npos) {
      try {
        std::size_t used = 0;
        share = std::stod(s.substr(eq + 1), &used);
        if (used != s.size() - eq - 1) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw recourse::InvalidParamsError("bad matrix share in '" + s + "'");
      }
    } else if (specs.size() > 1) {
      throw recourse::InvalidParamsError("give shares (id=p) when mixing several matrices");
    }
    mix[id] += share;
  }
  return mix;
}

int cmd_solve(const std::string& query_path, const std::string& output, bool audit) {
  const auto query = recourse::load_query(query_path);
  return std::visit(
      [&](const auto& q) {
        using Q = std::decay_t<decltype(q)>;
        std::vector<recourse::FeasibleRow> rows;
        std::optional<recourse::RecourseOutcome> outcome;
        if constexpr (std::is_same_v<Q, recourse::CfeQuery>) {
          rows = recourse::enumerate_cfe(q);
          outcome = recourse::solve_cfe_baseline(q);
        } else {
          rows = recourse::enumerate_feasible(q);
          outcome = recourse::solve(q);
        }
        recourse::Json out;
        if (outcome) {
          out = recourse::outcome_to_json(*outcome);
        } else {
          recourse::ConstraintSpec shown;
          if constexpr (std::is_same_v<Q, recourse::RecourseQuery>) shown = q.constraints;
          out = recourse::no_recommendation_to_json(q.principal, rows.size(), shown);
        }
        if (audit) out["rows"] = recourse::rows_to_json(rows);
        emit(out.dump(2) + "\n", output);
        return outcome ? kExitOk : kExitNoRecommendation;
      },
      query);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent algorithmic recourse over discrete structural causal models"};
  app.require_subcommand(1);

  std::string output;
  std::uint64_t seed = 1;
  std::vector<std::string> synthetic;
  std::vector<std::string> matrices;

  auto* solve = app.add_subcommand("solve", "Solve one recourse query file");
  std::string query_path;
  bool audit = false;
  solve->add_option("query", query_path, "Query JSON file")->required()->check(CLI::ExistingFile);
  solve->add_option("-o,--output", output, "Output file (default stdout)");
  solve->add_flag("--audit", audit, "Include one row per considered action");

  auto* experiment = app.add_subcommand("experiment", "Run a recourse mode over a game log");
  std::string log_path;
  std::string mode = "single_agent";
  std::string format = "table";
  std::string principal = "p1";
  std::string welfare = "strict";
  unsigned jobs = 1;
  bool include_identity = false;
  std::vector<std::string> matrix_csvs;
  auto* log_opt = experiment->add_option("log", log_path, "Game log CSV")->check(CLI::ExistingFile);
  auto* syn_opt = experiment->add_option("--synthetic", synthetic, "Synthetic log: n=N silent=K")
                      ->expected(1, 2);
  log_opt->excludes(syn_opt);
  experiment->add_option("--matrix", matrices, "Matrix id, or id=share for synthetic mixes");
  experiment->add_option("--matrix-csv", matrix_csvs, "Custom matrix as id=path.csv");
  experiment->add_option("--mode", mode, "Constraint family")
      ->check(CLI::IsMember({"single_agent", "social_welfare", "pareto", "pareto_and_welfare"}));
  experiment->add_option("--seed", seed, "Seed for --synthetic");
  experiment->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json"}));
  experiment->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  experiment->add_option("--principal", principal)->check(CLI::IsMember({"p1", "both"}));
  experiment->add_option("--welfare", welfare, "Welfare comparison")
      ->check(CLI::IsMember({"strict", "non-strict"}));
  experiment->add_flag("--include-identity", include_identity, "Keep do-nothing actions");
  experiment->add_option("-o,--output", output, "Output file (default stdout)");

  auto* generate = app.add_subcommand("generate", "Write a synthetic single-round game log");
  generate->add_option("--synthetic", synthetic, "n=N silent=K")->expected(1, 2)->required();
  generate->add_option("--matrix", matrices, "Matrix id, or id=share");
  generate->add_option("--seed", seed);
  generate->add_option("-o,--output", output, "Output file (default stdout)");

  auto* graph = app.add_subcommand("graph", "Export a causal graph as DOT");
  std::string scm_path;
  std::string graph_matrix;
  auto* scm_opt = graph->add_option("scm", scm_path, "SCM JSON file")->check(CLI::ExistingFile);
  auto* gm_opt = graph->add_option("--matrix", graph_matrix, "Builtin matrix id");
  scm_opt->excludes(gm_opt);
  graph->add_option("-o,--output", output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*solve) return cmd_solve(query_path, output, audit);

    if (*generate) {
      const auto p = parse_synthetic(synthetic);
      const auto games = recourse::generate_synthetic_log(p.n_total, p.n_silent, parse_matrix_mix(matrices), seed);
      emit(recourse::serialize_game_log(games), output);
      return kExitOk;
    }

    if (*graph) {
      if (scm_path.empty() && graph_matrix.empty()) throw recourse::InvalidParamsError("graph needs an SCM file or --matrix");
      const auto scm = scm_path.empty() ? recourse::pd_scm(recourse::builtin_matrix(graph_matrix))
                                        : recourse::build_scm(recourse::load_scm_spec(scm_path));
      emit(recourse::graph_to_dot(recourse::to_graph(scm)), output);
      return kExitOk;
    }

    if (*experiment) {
      std::vector<recourse::GameRecord> games;
      if (!synthetic.empty()) {
        const auto p = parse_synthetic(synthetic);
        games = recourse::generate_synthetic_log(p.n_total, p.n_silent, parse_matrix_mix(matrices), seed);
      } else if (!log_path.empty()) {
        games = recourse::load_game_log(log_path);
      } else {
        throw recourse::InvalidParamsError("experiment needs a log file or --synthetic");
      }
      const auto kept = recourse::filter_single_round(games);
      if (kept.empty()) std::cerr << "warning: no single-round games remain after filtering\n";

      recourse::ExperimentConfig config;
      config.mode = recourse::parse_experiment_mode(mode);
      config.principal_policy = principal == "both" ? recourse::PrincipalPolicy::both_players
                                                    : recourse::PrincipalPolicy::player1_only;
      config.strict_welfare = welfare == "strict";
      config.exclude_identity = !include_identity;
      config.jobs = jobs;
      for (const auto& spec : matrix_csvs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw recourse::InvalidParamsError("--matrix-csv expects id=path");
        const auto id = spec.substr(0, eq);
        config.matrices[id] = recourse::load_matrix_csv(spec.substr(eq + 1), id);
      }
      auto report = recourse::run_experiment(kept, config);
      report.games_filtered_out = games.size() - kept.size();
      emit(recourse::render_report(report, recourse::parse_report_format(format)), output);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
