#pragma once

// Batch harness: game-log ingestion, single-round filtering, synthetic log
// generation, per-game recourse and count aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "recourse/error.hpp"
#include "recourse/games.hpp"
#include "recourse/json_io.hpp"
#include "recourse/rational.hpp"
#include "recourse/recourse.hpp"

namespace recourse {

enum class Group { test, control };

inline std::string to_string(Group g) { return g == Group::test ? "test" : "control"; }

struct Round {
  Action p1 = Action::silent;
  Action p2 = Action::silent;
  friend bool operator==(const Round&, const Round&) = default;
};

struct GameRecord {
  std::string game_id;
  std::string matrix_id;
  Group group = Group::test;
  std::optional<Rational> delta;  // continuation probability; test games only
  std::vector<Round> rounds;

  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

inline const std::string& game_log_header() {
  static const std::string h = "game_id,matrix_id,group,delta,round,p1_action,p2_action";
  return h;
}

// One row per round; rows of a game need not be contiguous but their round
// numbers must count up from 1. Games keep their order of first appearance.
inline std::vector<GameRecord> parse_game_log(const std::string& text) {
  std::vector<GameRecord> games;
  std::map<std::string, std::size_t> index;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  const std::vector<Rational> allowed_deltas{Rational(0), Rational(1, 2), Rational(3, 4)};

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    if (!header_seen) {
      if (detail::trim(line) != game_log_header())
        throw ParseError("expected header '" + game_log_header() + "'", line_no);
      header_seen = true;
      continue;
    }
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7)
      throw ParseError("expected 7 fields, found " + std::to_string(f.size()), line_no);
    if (f[0].empty()) throw ParseError("empty game_id", line_no);
    if (f[1].empty()) throw ParseError("empty matrix_id", line_no);

    Group group;
    if (f[2] == "test") group = Group::test;
    else if (f[2] == "control") group = Group::control;
    else throw ParseError("group must be 'test' or 'control', got '" + f[2] + "'", line_no);

    std::optional<Rational> delta;
    if (group == Group::test) {
      auto d = try_parse_rational(f[3]);
      if (!d) throw ParseError("test game needs a numeric delta", line_no);
      if (std::find(allowed_deltas.begin(), allowed_deltas.end(), *d) == allowed_deltas.end())
        throw DomainError("delta " + to_string(*d) + " is not one of 0, 1/2, 3/4", line_no);
      delta = *d;
    }

    const auto round_no = try_parse_rational(f[4]);
    if (!round_no || round_no->denominator() != 1 || *round_no < 1)
      throw ParseError("round must be a positive integer", line_no);
    const Round round{detail::parse_action(f[5], line_no), detail::parse_action(f[6], line_no)};

    auto [it, inserted] = index.emplace(f[0], games.size());
    if (inserted) games.push_back(GameRecord{f[0], f[1], group, delta, {}});
    GameRecord& g = games[it->second];
    if (g.matrix_id != f[1] || g.group != group || g.delta != delta)
      throw ParseError("game '" + g.game_id + "' changes matrix, group or delta between rows",
                       line_no);
    if (static_cast<std::size_t>(round_no->numerator()) != g.rounds.size() + 1)
      throw ParseError("game '" + g.game_id + "' expected round " +
                           std::to_string(g.rounds.size() + 1),
                       line_no);
    g.rounds.push_back(round);
  }
  if (!header_seen) throw ParseError("game log is empty; expected a header line");
  return games;
}

inline std::vector<GameRecord> load_game_log(const std::string& path) {
  return parse_game_log(read_text_file(path));
}

inline std::string serialize_game_log(const std::vector<GameRecord>& games) {
  std::string out = game_log_header() + "\n";
  for (const auto& g : games) {
    const std::string delta = g.group == Group::test && g.delta ? to_string(*g.delta) : "";
    for (std::size_t r = 0; r < g.rounds.size(); ++r) {
      out += g.game_id + "," + g.matrix_id + "," + to_string(g.group) + "," + delta + "," +
             std::to_string(r + 1) + "," + std::to_string(static_cast<int>(g.rounds[r].p1)) +
             "," + std::to_string(static_cast<int>(g.rounds[r].p2)) + "\n";
    }
  }
  return out;
}

// Keeps test games with delta = 0 and one-round control games; both are
// one-shot prisoner's dilemmas.
inline std::vector<GameRecord> filter_single_round(const std::vector<GameRecord>& games) {
  std::vector<GameRecord> kept;
  for (const auto& g : games) {
    const bool one_shot_test = g.group == Group::test && g.delta && *g.delta == 0;
    const bool one_round_control = g.group == Group::control && g.rounds.size() == 1;
    if ((one_shot_test || one_round_control) && !g.rounds.empty()) kept.push_back(g);
  }
  return kept;
}

// Synthetic single-round log. Exactly `n_principal_silent` games have player
// 1 silent; matrices are apportioned by largest remainder and shuffled;
// opponent actions and group membership are pseudo-random. Only raw
// mt19937_64 output is consumed, so logs are identical across platforms.
inline std::vector<GameRecord> generate_synthetic_log(std::size_t n_total,
                                                      std::size_t n_principal_silent,
                                                      const std::map<std::string, double>& matrix_mix,
                                                      std::uint64_t seed) {
  if (n_principal_silent > n_total)
    throw InvalidParamsError("silent count " + std::to_string(n_principal_silent) +
                             " exceeds total " + std::to_string(n_total));
  if (n_total == 0) return {};
  if (matrix_mix.empty()) throw InvalidParamsError("matrix mix is empty");
  double sum = 0;
  for (const auto& [id, p] : matrix_mix) {
    if (!(p >= 0)) throw InvalidParamsError("matrix proportion for '" + id + "' is negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidParamsError("matrix proportions must sum to 1");

  std::mt19937_64 rng(seed);
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  };

  // Largest-remainder apportionment; ties go to the lexicographically first id.
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (const auto& [id, p] : matrix_mix) {
    const double quota = p * static_cast<double>(n_total);
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    remainders.emplace_back(quota - static_cast<double>(whole), counts.size());
    counts.emplace_back(id, whole);
    assigned += whole;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n_total; ++k, ++assigned)
    ++counts[remainders[k % remainders.size()].second].second;

  std::vector<std::string> matrix_of;
  matrix_of.reserve(n_total);
  for (const auto& [id, c] : counts) matrix_of.insert(matrix_of.end(), c, id);
  shuffle(matrix_of);

  std::vector<std::size_t> order(n_total);
  for (std::size_t i = 0; i < n_total; ++i) order[i] = i;
  shuffle(order);
  std::vector<bool> silent(n_total, false);
  for (std::size_t k = 0; k < n_principal_silent; ++k) silent[order[k]] = true;

  const std::size_t width = std::max<std::size_t>(6, std::to_string(n_total).size());
  std::vector<GameRecord> games;
  games.reserve(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    std::ostringstream id;
    id << 'g' << std::setw(static_cast<int>(width)) << std::setfill('0') << (i + 1);
    GameRecord g;
    g.game_id = id.str();
    g.matrix_id = matrix_of[i];
    const Action opponent = (rng() >> 63) ? Action::betray : Action::silent;
    if (rng() >> 63) {
      g.group = Group::test;
      g.delta = Rational(0);
    } else {
      g.group = Group::control;
    }
    g.rounds.push_back({silent[i] ? Action::silent : Action::betray, opponent});
    games.push_back(std::move(g));
  }
  return games;
}

// ---------------------------------------------------------------------------

enum class ExperimentMode { single_agent, social_welfare, pareto, pareto_and_welfare, custom };
enum class PrincipalPolicy { player1_only, both_players };

inline std::string to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::single_agent: return "single_agent";
    case ExperimentMode::social_welfare: return "social_welfare";
    case ExperimentMode::pareto: return "pareto";
    case ExperimentMode::pareto_and_welfare: return "pareto_and_welfare";
    case ExperimentMode::custom: return "custom";
  }
  return "custom";
}

inline ExperimentMode parse_experiment_mode(const std::string& s) {
  for (auto m : {ExperimentMode::single_agent, ExperimentMode::social_welfare, ExperimentMode::pareto,
                 ExperimentMode::pareto_and_welfare, ExperimentMode::custom})
    if (to_string(m) == s) return m;
  throw InvalidParamsError("unknown mode '" + s + "'");
}

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::single_agent;
  ConstraintSpec custom;  // used when mode == custom
  PrincipalPolicy principal_policy = PrincipalPolicy::player1_only;
  bool strict_improvement = true;
  bool strict_welfare = true;
  bool exclude_identity = true;
  unsigned jobs = 1;
  std::map<std::string, PayoffMatrix> matrices;  // custom ids; builtins need no entry
};

inline ConstraintSpec constraints_for(const ExperimentConfig& c) {
  switch (c.mode) {
    case ExperimentMode::single_agent:
      return {{PrincipalImprovement{c.strict_improvement}}};
    case ExperimentMode::social_welfare:
      return {{SocialWelfare{c.strict_welfare}}};
    case ExperimentMode::pareto:
      return {{PrincipalImprovement{c.strict_improvement}, Pareto{}}};
    case ExperimentMode::pareto_and_welfare:
      return {{PrincipalImprovement{c.strict_improvement}, Pareto{}, SocialWelfare{c.strict_welfare}}};
    case ExperimentMode::custom:
      return c.custom;
  }
  return c.custom;
}

struct Counts {
  std::size_t total_games = 0;
  std::size_t queries = 0;
  std::size_t recommendations_made = 0;
  std::size_t principal_improved = 0;
  std::size_t principal_worsened = 0;
  std::size_t pareto_violated = 0;
  std::size_t welfare_increased = 0;
  std::size_t welfare_decreased = 0;
  std::size_t opponent_improved = 0;

  Counts& operator+=(const Counts& o) {
    total_games += o.total_games;
    queries += o.queries;
    recommendations_made += o.recommendations_made;
    principal_improved += o.principal_improved;
    principal_worsened += o.principal_worsened;
    pareto_violated += o.pareto_violated;
    welfare_increased += o.welfare_increased;
    welfare_decreased += o.welfare_decreased;
    opponent_improved += o.opponent_improved;
    return *this;
  }

  // Adds one query's result.
  void tally(const std::optional<RecourseOutcome>& o) {
    ++queries;
    if (!o) return;
    ++recommendations_made;
    const Rational principal_delta = o->per_agent.at(o->principal).delta;
    if (principal_delta > 0) ++principal_improved;
    if (principal_delta < 0) ++principal_worsened;
    if (o->flags.pareto_violated) ++pareto_violated;
    if (o->flags.welfare_delta > 0) ++welfare_increased;
    if (o->flags.welfare_delta < 0) ++welfare_decreased;
    if (std::any_of(o->per_agent.begin(), o->per_agent.end(),
                    [&](const auto& kv) { return kv.first != o->principal && kv.second.delta > 0; }))
      ++opponent_improved;
  }

  friend bool operator==(const Counts&, const Counts&) = default;
};

inline const std::vector<std::pair<std::string, std::size_t Counts::*>>& count_fields() {
  static const std::vector<std::pair<std::string, std::size_t Counts::*>> fields{
      {"total_games", &Counts::total_games},
      {"queries", &Counts::queries},
      {"recommendations_made", &Counts::recommendations_made},
      {"principal_improved", &Counts::principal_improved},
      {"principal_worsened", &Counts::principal_worsened},
      {"pareto_violated", &Counts::pareto_violated},
      {"welfare_increased", &Counts::welfare_increased},
      {"welfare_decreased", &Counts::welfare_decreased},
      {"opponent_improved", &Counts::opponent_improved},
  };
  return fields;
}

struct ExperimentReport {
  std::string mode;
  std::size_t games_filtered_out = 0;
  Counts all;
  std::map<std::string, Counts> per_matrix;

  ExperimentReport& operator+=(const ExperimentReport& o) {
    all += o.all;
    for (const auto& [id, c] : o.per_matrix) per_matrix[id] += c;
    return *this;
  }

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

// Result of one recourse query inside the experiment.
struct QueryResult {
  std::string game_id;
  std::string matrix_id;
  AgentId principal = 1;
  std::optional<RecourseOutcome> outcome;
};

class GameRunner {
 public:
  explicit GameRunner(ExperimentConfig config)
      : config_(std::move(config)), constraints_(constraints_for(config_)) {
    for (const auto& id : builtin_matrix_ids()) scms_.emplace(id, make_scm(builtin_matrix(id)));
    for (const auto& [id, m] : config_.matrices) scms_[id] = make_scm(m);
  }

  const ExperimentConfig& config() const { return config_; }

  // The query the harness issues for one principal of a one-shot game:
  // factual = round-1 profile, feasible = both values of the principal's
  // action variable.
  RecourseQuery query_for(const GameRecord& g, AgentId principal) const {
    auto it = scms_.find(g.matrix_id);
    if (it == scms_.end()) throw UnknownMatrixError("unknown payoff matrix '" + g.matrix_id + "'");
    if (g.rounds.empty()) throw InvalidQueryError("game has no rounds");
    const std::string var = principal == 1 ? "x1" : "x2";
    RecourseQuery q;
    q.scm = it->second;
    q.principal = principal;
    q.agents = {{1, "h1"}, {2, "h2"}};
    q.factual = WorldState{{"x1", Rational(static_cast<int>(g.rounds.front().p1))},
                           {"x2", Rational(static_cast<int>(g.rounds.front().p2))}};
    q.controllable = {var};
    q.feasible = {InterventionSet{{var, Rational(0)}}, InterventionSet{{var, Rational(1)}}};
    q.constraints = constraints_;
    q.exclude_identity = config_.exclude_identity;
    return q;
  }

  std::vector<QueryResult> run(const GameRecord& g) const {
    std::vector<QueryResult> out;
    try {
      for (AgentId p : principals()) out.push_back({g.game_id, g.matrix_id, p, solve(query_for(g, p))});
    } catch (const Error& e) {
      throw Error("game " + g.game_id + ": " + e.what());
    }
    return out;
  }

 private:
  std::vector<AgentId> principals() const {
    if (config_.principal_policy == PrincipalPolicy::both_players) return {1, 2};
    return {1};
  }

  static std::shared_ptr<const Scm> make_scm(const PayoffMatrix& m) {
    return std::make_shared<const Scm>(pd_scm(m));
  }

  ExperimentConfig config_;
  ConstraintSpec constraints_;
  std::map<std::string, std::shared_ptr<const Scm>> scms_;
};

// Runs every query and folds the results. Workers take contiguous chunks and
// their partial reports are summed, so the result does not depend on jobs.
inline ExperimentReport run_experiment(const std::vector<GameRecord>& games,
                                       const ExperimentConfig& config) {
  const GameRunner runner(config);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    ExperimentReport r;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& g = games[i];
      Counts c;
      c.total_games = 1;
      for (const auto& res : runner.run(g)) c.tally(res.outcome);
      r.all += c;
      r.per_matrix[g.matrix_id] += c;
    }
    return r;
  };

  ExperimentReport report;
  const std::size_t jobs =
      std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(1, games.size()));
  if (jobs == 1) {
    report = run_range(0, games.size());
  } else {
    std::vector<ExperimentReport> partial(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    const std::size_t chunk = (games.size() + jobs - 1) / jobs;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          const std::size_t begin = std::min(games.size(), w * chunk);
          partial[w] = run_range(begin, std::min(games.size(), begin + chunk));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);  // earliest failing chunk
    for (const auto& p : partial) report += p;
  }
  report.mode = to_string(config.mode);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering. CSV columns are fixed:
//   scope,mode,games_filtered_out,total_games,queries,recommendations_made,
//   principal_improved,principal_worsened,pareto_violated,welfare_increased,
//   welfare_decreased,opponent_improved
// with one "all" row followed by one row per matrix id (sorted).

enum class ReportFormat { table, csv, json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "table") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw InvalidParamsError("unknown format '" + s + "'");
}

inline std::string report_csv_header() {
  std::string h = "scope,mode,games_filtered_out";
  for (const auto& [name, _] : count_fields()) h += "," + name;
  return h;
}

inline Json counts_to_json(const Counts& c) {
  Json j;
  for (const auto& [name, field] : count_fields()) j[name] = c.*field;
  return j;
}

inline Counts counts_from_json(const Json& j) {
  Counts c;
  for (const auto& [name, field] : count_fields()) c.*field = j.at(name).get<std::size_t>();
  return c;
}

inline Json report_to_json(const ExperimentReport& r) {
  Json j;
  j["mode"] = r.mode;
  j["games_filtered_out"] = r.games_filtered_out;
  j["all"] = counts_to_json(r.all);
  j["per_matrix"] = Json::object();
  for (const auto& [id, c] : r.per_matrix) j["per_matrix"][id] = counts_to_json(c);
  return j;
}

inline ExperimentReport report_from_json(const Json& j) {
  return with_json_context("report", [&] {
    ExperimentReport r;
    r.mode = j.at("mode").get<std::string>();
    r.games_filtered_out = j.at("games_filtered_out").get<std::size_t>();
    r.all = counts_from_json(j.at("all"));
    for (const auto& [id, c] : j.at("per_matrix").items()) r.per_matrix.emplace(id, counts_from_json(c));
    return r;
  });
}

inline ExperimentReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  ExperimentReport r;
  bool saw_all = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != report_csv_header()) throw ParseError("unexpected report header", line_no);
      continue;
    }
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3 + count_fields().size()) throw ParseError("wrong field count", line_no);
    Counts c;
    for (std::size_t k = 0; k < count_fields().size(); ++k) {
      const auto v = try_parse_rational(f[3 + k]);
      if (!v || v->denominator() != 1 || *v < 0) throw ParseError("bad count", line_no);
      c.*(count_fields()[k].second) = static_cast<std::size_t>(v->numerator());
    }
    if (f[0] == "all") {
      r.mode = f[1];
      r.games_filtered_out = static_cast<std::size_t>(parse_rational(f[2]).numerator());
      r.all = c;
      saw_all = true;
    } else {
      r.per_matrix.emplace(f[0], c);
    }
  }
  if (!saw_all) throw ParseError("report has no 'all' row");
  return r;
}

inline std::string render_report(const ExperimentReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return report_to_json(r).dump(2) + "\n";
    case ReportFormat::csv: {
      auto row = [&](const std::string& scope, const Counts& c, std::size_t filtered) {
        std::string s = scope + "," + r.mode + "," + std::to_string(filtered);
        for (const auto& [_, field] : count_fields()) s += "," + std::to_string(c.*field);
        return s + "\n";
      };
      std::string out = report_csv_header() + "\n" + row("all", r.all, r.games_filtered_out);
      for (const auto& [id, c] : r.per_matrix) out += row(id, c, 0);
      return out;
    }
    case ReportFormat::table: {
      std::ostringstream out;
      out << "mode: " << r.mode << "\n";
      out << "games filtered out: " << r.games_filtered_out << "\n";
      out << std::left << std::setw(22) << "metric" << std::right << std::setw(10) << "all";
      for (const auto& [id, _] : r.per_matrix) out << std::setw(10) << id;
      out << "\n";
      for (const auto& [name, field] : count_fields()) {
        out << std::left << std::setw(22) << name << std::right << std::setw(10) << r.all.*field;
        for (const auto& [_, c] : r.per_matrix) out << std::setw(10) << c.*field;
        out << "\n";
      }
      return out.str();
    }
  }
  return {};
}

}  // namespace recourse
