#pragma once

// Query file and outcome serialization.
//
// A query file is a JSON object. The model comes from exactly one of
//   "scm"          inline SCM object
//   "scm_file"     path to an SCM file (relative to the query file)
//   "matrix"       builtin payoff matrix id, expanded to its PD SCM
//   "matrix_file"  path to a matrix CSV, expanded to its PD SCM
// "solver" selects "causal" (default) or "cfe" (nearest-counterfactual
// baseline, which reads "features", "shifts", "threshold", "strict").

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "recourse/games.hpp"
#include "recourse/json_io.hpp"
#include "recourse/recourse.hpp"

namespace recourse {

using AnyQuery = std::variant<RecourseQuery, CfeQuery>;

namespace detail {

inline std::shared_ptr<const Scm> scm_from_query_json(const Json& j,
                                                      const std::filesystem::path& base) {
  int sources = j.contains("scm") + j.contains("scm_file") + j.contains("matrix") +
                j.contains("matrix_file");
  if (sources != 1)
    throw ParseError("query must give exactly one of scm, scm_file, matrix, matrix_file");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_relative() ? base / path : path).string();
  };
  if (j.contains("scm")) return std::make_shared<const Scm>(build_scm(scm_spec_from_json(j.at("scm"))));
  if (j.contains("scm_file"))
    return std::make_shared<const Scm>(build_scm(load_scm_spec(resolve(j.at("scm_file").get<std::string>()))));
  if (j.contains("matrix"))
    return std::make_shared<const Scm>(pd_scm(builtin_matrix(j.at("matrix").get<std::string>())));
  return std::make_shared<const Scm>(
      pd_scm(load_matrix_csv(resolve(j.at("matrix_file").get<std::string>()), "custom")));
}

inline std::map<AgentId, std::string> agents_from_json(const Json& j) {
  std::map<AgentId, std::string> agents;
  for (const auto& [key, value] : j.items()) {
    std::size_t used = 0;
    AgentId id = 0;
    try {
      id = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) throw ParseError("agent key '" + key + "' is not an integer");
    agents.emplace(id, value.get<std::string>());
  }
  return agents;
}

inline CostModel cost_from_json(const Json& j) {
  CostModel c;
  const auto kind = j.value("kind", std::string("composite"));
  if (kind == "count") c.kind = CostModel::Kind::count;
  else if (kind == "weighted_change") c.kind = CostModel::Kind::weighted_change;
  else if (kind == "composite") c.kind = CostModel::Kind::composite;
  else throw ParseError("unknown cost kind '" + kind + "'");
  if (j.contains("weights"))
    for (const auto& [name, w] : j.at("weights").items()) c.weights.emplace(name, rational_from_json(w));
  return c;
}

inline PlausibleSet plausible_from_json(const Json& j) {
  PlausibleSet p;
  for (const auto& pattern : j) p.patterns.push_back(state_from_json(pattern));
  return p;
}

}  // namespace detail

inline Clause clause_from_json(const Json& j) {
  return with_json_context("constraint", [&]() -> Clause {
    const auto type = j.at("type").get<std::string>();
    if (type == "threshold")
      return Threshold{j.at("agent").get<AgentId>(), rational_from_json(j.at("t")),
                       j.value("strict", false)};
    if (type == "principal_improvement") return PrincipalImprovement{j.value("strict", true)};
    if (type == "social_welfare") return SocialWelfare{j.value("strict", true)};
    if (type == "pareto") return Pareto{};
    if (type == "plausible") return Plausible{};
    throw ParseError("unknown constraint type '" + type + "'");
  });
}

inline Json clause_to_json(const Clause& c) {
  struct Visitor {
    Json operator()(const Threshold& t) const {
      return Json{{"type", "threshold"}, {"agent", t.agent}, {"t", rational_to_json(t.t)}, {"strict", t.strict}};
    }
    Json operator()(const PrincipalImprovement& p) const {
      return Json{{"type", "principal_improvement"}, {"strict", p.strict}};
    }
    Json operator()(const SocialWelfare& s) const {
      return Json{{"type", "social_welfare"}, {"strict", s.strict}};
    }
    Json operator()(const Pareto&) const { return Json{{"type", "pareto"}}; }
    Json operator()(const Plausible&) const { return Json{{"type", "plausible"}}; }
  };
  return std::visit(Visitor{}, c);
}

inline AnyQuery query_from_json(const Json& j, const std::filesystem::path& base = {}) {
  return with_json_context("query", [&]() -> AnyQuery {
    if (!j.is_object()) throw ParseError("query must be a JSON object");
    auto scm = detail::scm_from_query_json(j, base);
    const auto solver = j.value("solver", std::string("causal"));
    const AgentId principal = j.value("principal", AgentId{1});
    auto agents = detail::agents_from_json(j.at("agents"));
    WorldState factual = state_from_json(j.at("factual"));
    PlausibleSet plausible;
    if (j.contains("plausible")) plausible = detail::plausible_from_json(j.at("plausible"));
    CostModel cost;
    if (j.contains("cost")) cost = detail::cost_from_json(j.at("cost"));

    if (solver == "cfe") {
      CfeQuery q;
      q.scm = std::move(scm);
      q.principal = principal;
      q.agents = std::move(agents);
      q.factual = std::move(factual);
      q.plausible = std::move(plausible);
      q.cost = std::move(cost);
      q.features = j.at("features").get<std::vector<std::string>>();
      for (const auto& shift : j.at("shifts")) {
        std::vector<Rational> s;
        for (const auto& x : shift) s.push_back(rational_from_json(x));
        q.shifts.push_back(std::move(s));
      }
      if (j.contains("threshold")) q.threshold = rational_from_json(j.at("threshold"));
      q.strict = j.value("strict", true);
      return q;
    }
    if (solver != "causal") throw ParseError("unknown solver '" + solver + "'");

    RecourseQuery q;
    q.scm = std::move(scm);
    q.principal = principal;
    q.agents = std::move(agents);
    q.factual = std::move(factual);
    q.plausible = std::move(plausible);
    q.cost = std::move(cost);
    q.controllable = j.value("controllable", std::vector<std::string>{});
    for (const auto& a : j.at("feasible")) q.feasible.push_back(intervention_from_json(a));
    if (j.contains("constraints"))
      for (const auto& c : j.at("constraints")) q.constraints.clauses.push_back(clause_from_json(c));
    q.exclude_identity = j.value("exclude_identity", false);
    return q;
  });
}

inline AnyQuery load_query(const std::string& path) {
  const auto text = read_text_file(path);
  return query_from_json(parse_json_text(text), std::filesystem::path(path).parent_path());
}

inline Json outcome_to_json(const RecourseOutcome& o) {
  Json j;
  j["status"] = "recommendation";
  j["principal"] = o.principal;
  j["action"] = assignment_to_json(o.action);
  j["action_text"] = to_string(o.action);
  j["cost"] = Json{{"interventions", rational_to_json(o.cost.interventions)},
                   {"change", rational_to_json(o.cost.change)}};
  j["factual"] = assignment_to_json(o.factual);
  j["counterfactual"] = assignment_to_json(o.counterfactual);
  j["agents"] = Json::array();
  for (const auto& [agent, a] : o.per_agent)
    j["agents"].push_back(Json{{"agent", agent},
                               {"variable", a.variable},
                               {"factual", rational_to_json(a.factual)},
                               {"counterfactual", rational_to_json(a.counterfactual)},
                               {"delta", rational_to_json(a.delta)}});
  j["welfare"] = Json{{"factual", rational_to_json(o.welfare_factual())},
                      {"counterfactual", rational_to_json(o.welfare_counterfactual())}};
  j["flags"] = Json{{"principal_improved", o.flags.principal_improved},
                    {"pareto_violated", o.flags.pareto_violated},
                    {"welfare_delta", rational_to_json(o.flags.welfare_delta)}};
  return j;
}

// Payload for a well-formed query with no satisfying action.
inline Json no_recommendation_to_json(AgentId principal, std::size_t actions_considered,
                                      const ConstraintSpec& constraints) {
  Json j;
  j["status"] = "no_feasible_recommendation";
  j["principal"] = principal;
  j["actions_considered"] = actions_considered;
  j["constraints"] = Json::array();
  for (const auto& c : constraints.clauses) j["constraints"].push_back(clause_to_json(c));
  return j;
}

inline Json rows_to_json(const std::vector<FeasibleRow>& rows) {
  Json j = Json::array();
  for (const auto& r : rows) {
    Json jr;
    jr["action"] = assignment_to_json(r.outcome.action);
    jr["counterfactual"] = assignment_to_json(r.outcome.counterfactual);
    jr["satisfied"] = r.satisfied;
    jr["plausible"] = r.plausible;
    j.push_back(std::move(jr));
  }
  return j;
}

}  // namespace recourse
