#pragma once

// Multi-agent recourse by exact enumeration over a finite action set.
//
// Every recourse problem here has the same shape: pick the minimum-cost
// action from the feasible set whose structural counterfactual satisfies a
// conjunction of clauses. Single-agent, social-welfare and Pareto recourse
// differ only in the clause list.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "recourse/error.hpp"
#include "recourse/rational.hpp"
#include "recourse/scm.hpp"

namespace recourse {

using AgentId = int;

// Lexicographic cost: number of variables the action changes, then the
// weighted absolute change. Single-criterion models zero out the other part.
struct Cost {
  Rational interventions;
  Rational change;

  friend bool operator==(const Cost&, const Cost&) = default;
  friend bool operator<(const Cost& a, const Cost& b) {
    if (a.interventions != b.interventions) return a.interventions < b.interventions;
    return a.change < b.change;
  }
};

struct CostModel {
  enum class Kind { count, weighted_change, composite };

  Kind kind = Kind::composite;
  std::map<std::string, Rational> weights;  // missing entries weigh 1

  Rational weight(const std::string& name) const {
    auto it = weights.find(name);
    return it == weights.end() ? Rational(1) : it->second;
  }

  // Assignments that leave a variable at its factual value cost nothing, so
  // cost(identity) = 0 however the identity is spelled.
  Cost operator()(const InterventionSet& a, const WorldState& factual) const {
    Cost c;
    for (const auto& [name, value] : a) {
      const Rational diff = abs(value - factual.at(name));
      if (diff == 0) continue;
      if (kind != Kind::weighted_change) c.interventions += 1;
      if (kind != Kind::count) c.change += weight(name) * diff;
    }
    return c;
  }
};

inline std::string to_string(CostModel::Kind k) {
  switch (k) {
    case CostModel::Kind::count: return "count";
    case CostModel::Kind::weighted_change: return "weighted_change";
    case CostModel::Kind::composite: return "composite";
  }
  return "composite";
}

// ---------------------------------------------------------------------------
// Constraint clauses. A query's clauses are conjunctive.

// h_agent(x^SCF) >= t, or > t when strict.
struct Threshold {
  AgentId agent = 0;
  Rational t;
  bool strict = false;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

// h_principal(x^SCF) >= h_principal(x^F), or > when strict.
struct PrincipalImprovement {
  bool strict = true;
  friend bool operator==(const PrincipalImprovement&, const PrincipalImprovement&) = default;
};

// sum_j h_j(x^SCF) > sum_j h_j(x^F), or >= when not strict.
struct SocialWelfare {
  bool strict = true;
  friend bool operator==(const SocialWelfare&, const SocialWelfare&) = default;
};

// No agent ends up strictly worse off.
struct Pareto {
  friend bool operator==(const Pareto&, const Pareto&) = default;
};

// x^SCF lies in the plausible set. Always enforced; listing it only adds a
// column to the audit rows.
struct Plausible {
  friend bool operator==(const Plausible&, const Plausible&) = default;
};

using Clause = std::variant<Threshold, PrincipalImprovement, SocialWelfare, Pareto, Plausible>;

struct ConstraintSpec {
  std::vector<Clause> clauses;
  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

inline std::string describe(const Clause& c) {
  struct Visitor {
    std::string operator()(const Threshold& t) const {
      return "threshold(agent " + std::to_string(t.agent) + (t.strict ? " > " : " >= ") +
             to_string(t.t) + ")";
    }
    std::string operator()(const PrincipalImprovement& p) const {
      return p.strict ? "principal_improvement(strict)" : "principal_improvement";
    }
    std::string operator()(const SocialWelfare& s) const {
      return s.strict ? "social_welfare(strict)" : "social_welfare";
    }
    std::string operator()(const Pareto&) const { return "pareto"; }
    std::string operator()(const Plausible&) const { return "plausible"; }
  };
  return std::visit(Visitor{}, c);
}

// P as a union of patterns: a state is plausible when it agrees with every
// assignment of at least one pattern. No patterns means every in-domain
// state is plausible.
struct PlausibleSet {
  std::vector<WorldState> patterns;

  bool contains(const WorldState& s) const {
    if (patterns.empty()) return true;
    return std::any_of(patterns.begin(), patterns.end(), [&](const WorldState& p) {
      return std::all_of(p.begin(), p.end(), [&](const auto& kv) {
        return s.contains(kv.first) && s.at(kv.first) == kv.second;
      });
    });
  }
};

struct RecourseQuery {
  std::shared_ptr<const Scm> scm;
  AgentId principal = 1;
  std::map<AgentId, std::string> agents;  // agent -> outcome variable h_j
  WorldState factual;                     // x^F, complete or abducible
  std::vector<std::string> controllable;  // empty: unrestricted
  std::vector<InterventionSet> feasible;
  PlausibleSet plausible;
  CostModel cost;
  ConstraintSpec constraints;
  bool exclude_identity = false;
};

struct AgentOutcome {
  std::string variable;
  Rational factual;
  Rational counterfactual;
  Rational delta;
  friend bool operator==(const AgentOutcome&, const AgentOutcome&) = default;
};

struct OutcomeFlags {
  bool principal_improved = false;
  bool pareto_violated = false;
  Rational welfare_delta;
  friend bool operator==(const OutcomeFlags&, const OutcomeFlags&) = default;
};

struct RecourseOutcome {
  AgentId principal = 1;
  InterventionSet action;
  WorldState factual;         // complete x^F
  WorldState counterfactual;  // x^SCF
  Cost cost;
  std::map<AgentId, AgentOutcome> per_agent;
  OutcomeFlags flags;

  Rational welfare_factual() const {
    Rational s;
    for (const auto& [_, o] : per_agent) s += o.factual;
    return s;
  }
  Rational welfare_counterfactual() const {
    Rational s;
    for (const auto& [_, o] : per_agent) s += o.counterfactual;
    return s;
  }
};

inline OutcomeFlags classify(const RecourseOutcome& outcome) {
  OutcomeFlags f;
  for (const auto& [agent, o] : outcome.per_agent) {
    if (o.delta < 0) f.pareto_violated = true;
    if (agent == outcome.principal && o.delta > 0) f.principal_improved = true;
    f.welfare_delta += o.delta;
  }
  return f;
}

// One audit row per considered action.
struct FeasibleRow {
  RecourseOutcome outcome;
  std::vector<bool> satisfied;  // parallel to the query's clauses
  bool plausible = true;

  bool satisfies_all() const {
    return plausible && std::all_of(satisfied.begin(), satisfied.end(), [](bool b) { return b; });
  }
};

namespace detail {

inline void validate(const RecourseQuery& q) {
  if (!q.scm) throw InvalidQueryError("query has no SCM");
  const Scm& scm = *q.scm;
  if (!q.agents.count(q.principal))
    throw InvalidQueryError("principal " + std::to_string(q.principal) + " is not an agent");
  for (const auto& [agent, var] : q.agents) {
    auto i = scm.find(var);
    if (!i) throw InvalidQueryError("agent " + std::to_string(agent) + " outcome '" + var + "' is not a variable");
    if (scm.is_exogenous(*i))
      throw InvalidQueryError("agent " + std::to_string(agent) + " outcome '" + var + "' is exogenous");
  }
  for (const auto& c : q.controllable)
    if (!scm.find(c)) throw InvalidQueryError("controllable variable '" + c + "' is not declared");
  for (const auto& a : q.feasible) {
    for (const auto& [name, value] : a) {
      auto i = scm.find(name);
      if (!i) throw InvalidQueryError("action " + to_string(a) + " targets undeclared '" + name + "'");
      if (!q.controllable.empty() &&
          std::find(q.controllable.begin(), q.controllable.end(), name) == q.controllable.end())
        throw InvalidQueryError("action " + to_string(a) + " targets '" + name +
                                "', which the principal does not control");
      scm.domain_index(*i, value);
    }
  }
  for (const auto& [name, w] : q.cost.weights) {
    if (!scm.find(name)) throw InvalidQueryError("cost weight for undeclared '" + name + "'");
    if (w < 0) throw InvalidQueryError("cost weight for '" + name + "' is negative");
  }
  for (const auto& c : q.constraints.clauses)
    if (const auto* t = std::get_if<Threshold>(&c); t && !q.agents.count(t->agent))
      throw InvalidQueryError("threshold clause names unknown agent " + std::to_string(t->agent));
}

inline bool is_identity(const InterventionSet& a, const WorldState& factual) {
  return std::all_of(a.begin(), a.end(),
                     [&](const auto& kv) { return factual.at(kv.first) == kv.second; });
}

// Deterministic tie-break: intervened names in order, then values by their
// position in the variable's domain.
inline std::vector<std::pair<std::string, std::size_t>> tie_key(const Scm& scm,
                                                                const InterventionSet& a) {
  std::vector<std::pair<std::string, std::size_t>> key;
  for (const auto& [name, value] : a)
    key.emplace_back(name, scm.domain_index(scm.index_of(name), value));
  return key;
}

inline WorldState exogenous_part(const Scm& scm, const WorldState& complete) {
  WorldState u;
  for (const auto& [name, value] : complete)
    if (scm.is_exogenous(scm.index_of(name))) u.values.emplace(name, value);
  return u;
}

inline bool clause_holds(const Clause& clause, const RecourseOutcome& o, bool plausible) {
  struct Visitor {
    const RecourseOutcome& o;
    bool plausible;
    bool operator()(const Threshold& t) const {
      const Rational h = o.per_agent.at(t.agent).counterfactual;
      return t.strict ? h > t.t : h >= t.t;
    }
    bool operator()(const PrincipalImprovement& p) const {
      const Rational d = o.per_agent.at(o.principal).delta;
      return p.strict ? d > 0 : d >= 0;
    }
    bool operator()(const SocialWelfare& s) const {
      return s.strict ? o.flags.welfare_delta > 0 : o.flags.welfare_delta >= 0;
    }
    bool operator()(const Pareto&) const { return !o.flags.pareto_violated; }
    bool operator()(const Plausible&) const { return plausible; }
  };
  return std::visit(Visitor{o, plausible}, clause);
}

inline RecourseOutcome make_outcome(AgentId principal, const std::map<AgentId, std::string>& agents,
                                    const InterventionSet& action, const WorldState& factual,
                                    WorldState counterfactual, Cost cost) {
  RecourseOutcome o;
  o.principal = principal;
  o.action = action;
  o.factual = factual;
  o.counterfactual = std::move(counterfactual);
  o.cost = cost;
  for (const auto& [agent, var] : agents) {
    AgentOutcome a;
    a.variable = var;
    a.factual = factual.at(var);
    a.counterfactual = o.counterfactual.at(var);
    a.delta = a.counterfactual - a.factual;
    o.per_agent.emplace(agent, std::move(a));
  }
  o.flags = classify(o);
  return o;
}

inline std::optional<RecourseOutcome> pick_minimum(const Scm& scm,
                                                   const std::vector<FeasibleRow>& rows) {
  const FeasibleRow* best = nullptr;
  for (const auto& row : rows) {
    if (!row.satisfies_all()) continue;
    if (!best || row.outcome.cost < best->outcome.cost ||
        (row.outcome.cost == best->outcome.cost &&
         tie_key(scm, row.outcome.action) < tie_key(scm, best->outcome.action)))
      best = &row;
  }
  if (!best) return std::nullopt;
  return best->outcome;
}

}  // namespace detail

// Audit view: one row per feasible action (identity actions dropped when
// exclude_identity is set), in the order the query lists them.
inline std::vector<FeasibleRow> enumerate_feasible(const RecourseQuery& q) {
  detail::validate(q);
  const Scm& scm = *q.scm;
  const WorldState factual = abduct(scm, q.factual);
  const WorldState exogenous = detail::exogenous_part(scm, factual);

  std::vector<FeasibleRow> rows;
  rows.reserve(q.feasible.size());
  for (const auto& action : q.feasible) {
    if (q.exclude_identity && detail::is_identity(action, factual)) continue;
    const Scm mutilated = apply_intervention(scm, action);
    FeasibleRow row;
    row.outcome = detail::make_outcome(q.principal, q.agents, action, factual,
                                       evaluate(mutilated, exogenous), q.cost(action, factual));
    row.plausible = q.plausible.contains(row.outcome.counterfactual);
    for (const auto& clause : q.constraints.clauses)
      row.satisfied.push_back(detail::clause_holds(clause, row.outcome, row.plausible));
    rows.push_back(std::move(row));
  }
  return rows;
}

// a* = argmin cost over feasible actions whose counterfactual satisfies
// every clause; empty when none does.
inline std::optional<RecourseOutcome> solve(const RecourseQuery& q) {
  return detail::pick_minimum(*q.scm, enumerate_feasible(q));
}

// ---------------------------------------------------------------------------
// Nearest-counterfactual baseline: x^CFE = x^F + delta on a feature subset,
// outcomes read straight off each agent's model with no abduction and no
// propagation to other variables.

struct CfeQuery {
  std::shared_ptr<const Scm> scm;  // agents' equations act as the models h_j
  AgentId principal = 1;
  std::map<AgentId, std::string> agents;
  WorldState factual;
  std::vector<std::string> features;
  std::vector<std::vector<Rational>> shifts;  // each parallel to features
  std::optional<Rational> threshold;          // default: h_principal(x^F)
  bool strict = true;
  PlausibleSet plausible;
  CostModel cost;
};

inline std::vector<FeasibleRow> enumerate_cfe(const CfeQuery& q) {
  if (!q.scm) throw InvalidQueryError("query has no SCM");
  const Scm& scm = *q.scm;
  if (!q.agents.count(q.principal))
    throw InvalidQueryError("principal " + std::to_string(q.principal) + " is not an agent");
  for (const auto& [agent, var] : q.agents) {
    auto i = scm.find(var);
    if (!i || scm.is_exogenous(*i))
      throw InvalidQueryError("agent " + std::to_string(agent) + " outcome '" + var +
                              "' is not an endogenous variable");
  }
  for (const auto& f : q.features) scm.index_of(f);

  const WorldState factual = abduct(scm, q.factual);
  const std::string& principal_var = q.agents.at(q.principal);
  const Rational t = q.threshold.value_or(factual.at(principal_var));

  std::vector<FeasibleRow> rows;
  for (const auto& shift : q.shifts) {
    if (shift.size() != q.features.size())
      throw InvalidQueryError("shift vector has " + std::to_string(shift.size()) +
                              " entries for " + std::to_string(q.features.size()) + " features");
    WorldState moved = factual;
    InterventionSet action;
    for (std::size_t k = 0; k < q.features.size(); ++k) {
      const std::string& f = q.features[k];
      const Rational v = factual.at(f) + shift[k];
      scm.domain_index(scm.index_of(f), v);
      moved.values[f] = v;
      if (shift[k] != 0) action.values.emplace(f, v);
    }
    // h_j(x^CFE): each model reads its parents from the shifted vector.
    WorldState cfe = moved;
    for (const auto& [agent, var] : q.agents) {
      const auto* eq = scm.equation_for(scm.index_of(var));
      std::size_t row = 0;
      for (std::size_t p : eq->parents)
        row = row * scm.variable(p).domain.size() +
              scm.domain_index(p, moved.at(scm.variable(p).name));
      cfe.values[var] = scm.variable(eq->target).domain[eq->outputs[row]];
    }
    FeasibleRow r;
    r.outcome = detail::make_outcome(q.principal, q.agents, action, factual, std::move(cfe),
                                     q.cost(action, factual));
    r.plausible = q.plausible.contains(r.outcome.counterfactual);
    const Rational h = r.outcome.per_agent.at(q.principal).counterfactual;
    r.satisfied.push_back(q.strict ? h > t : h >= t);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::optional<RecourseOutcome> solve_cfe_baseline(const CfeQuery& q) {
  return detail::pick_minimum(*q.scm, enumerate_cfe(q));
}

}  // namespace recourse
