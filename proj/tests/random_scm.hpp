#pragma once

// Test-only random table SCMs plus a brute-force oracle that works on the
// generator's own representation. Nothing here calls into the engine's
// evaluation, abduction or solver code.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "recourse/recourse.hpp"
#include "recourse/scm.hpp"

namespace recourse::testing {

using Values = std::map<std::string, Rational>;

struct RawVariable {
  std::string name;
  std::vector<Rational> domain;
  std::vector<std::string> parents;                   // endogenous only
  std::map<std::vector<Rational>, Rational> table;    // endogenous only
};

struct RawScm {
  std::vector<RawVariable> exogenous;   // binary
  std::vector<RawVariable> endogenous;  // listed in a valid evaluation order

  const RawVariable& find(const std::string& name) const {
    for (const auto& v : exogenous) if (v.name == name) return v;
    for (const auto& v : endogenous) if (v.name == name) return v;
    throw std::logic_error("no variable " + name);
  }

  ScmSpec to_spec() const {
    ScmSpec spec;
    for (const auto& v : exogenous) spec.variables.push_back({v.name, VariableKind::exogenous, v.domain});
    for (const auto& v : endogenous) {
      spec.variables.push_back({v.name, VariableKind::endogenous, v.domain});
      EquationSpec eq{v.name, v.parents, {}};
      for (const auto& [in, out] : v.table) eq.table.push_back({in, out});
      spec.equations.push_back(std::move(eq));
    }
    return spec;
  }

  // Straight-line evaluation; intervened variables take their do-value.
  Values eval(const Values& exo, const Values& intervention = {}) const {
    Values v;
    for (const auto& x : exogenous) {
      auto it = intervention.find(x.name);
      v[x.name] = it != intervention.end() ? it->second : exo.at(x.name);
    }
    for (const auto& x : endogenous) {
      if (auto it = intervention.find(x.name); it != intervention.end()) {
        v[x.name] = it->second;
        continue;
      }
      std::vector<Rational> key;
      for (const auto& p : x.parents) key.push_back(v.at(p));
      v[x.name] = x.table.at(key);
    }
    return v;
  }

  std::vector<Values> all_exogenous() const {
    std::vector<Values> out;
    const std::size_t n = exogenous.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      Values u;
      for (std::size_t k = 0; k < n; ++k) u[exogenous[k].name] = Rational(static_cast<int>((mask >> k) & 1));
      out.push_back(std::move(u));
    }
    return out;
  }

  // Every exogenous assignment whose evaluation agrees with the observation.
  std::vector<Values> preimages(const Values& observation) const {
    std::vector<Values> out;
    for (const auto& u : all_exogenous()) {
      const Values full = eval(u);
      bool ok = true;
      for (const auto& [name, value] : observation) ok = ok && full.at(name) == value;
      if (ok) out.push_back(full);
    }
    return out;
  }
};

struct RandomScmOptions {
  std::size_t max_exogenous = 4;
  std::size_t max_agents = 3;
  bool injective = false;  // add a variable that encodes all exogenous bits
};

inline Rational random_value(std::mt19937_64& rng) {
  // Halves in [-2, 12].
  return Rational(static_cast<int>(rng() % 29) - 4, 2);
}

inline std::vector<Rational> random_domain(std::mt19937_64& rng, std::size_t size) {
  std::vector<Rational> d;
  while (d.size() < size) {
    const Rational v = random_value(rng);
    if (std::find(d.begin(), d.end(), v) == d.end()) d.push_back(v);
  }
  return d;
}

inline void fill_table(std::mt19937_64& rng, const RawScm& scm, RawVariable& v) {
  std::vector<std::vector<Rational>> keys{{}};
  for (const auto& p : v.parents) {
    std::vector<std::vector<Rational>> next;
    for (const auto& k : keys)
      for (const auto& val : scm.find(p).domain) {
        auto k2 = k;
        k2.push_back(val);
        next.push_back(std::move(k2));
      }
    keys = std::move(next);
  }
  for (const auto& k : keys) v.table[k] = v.domain[rng() % v.domain.size()];
}

// Agents' outcome variables are named a1, a2, ...; optional intermediates m1..
inline RawScm random_scm(std::mt19937_64& rng, const RandomScmOptions& opt = {}) {
  RawScm scm;
  const std::size_t n_exo = 1 + rng() % opt.max_exogenous;
  for (std::size_t k = 0; k < n_exo; ++k)
    scm.exogenous.push_back({"u" + std::to_string(k + 1), {Rational(0), Rational(1)}, {}, {}});

  auto pick_parents = [&](std::size_t max_from_endo) {
    std::vector<std::string> parents;
    for (const auto& x : scm.exogenous)
      if (rng() % 2) parents.push_back(x.name);
    for (std::size_t k = 0; k < std::min(max_from_endo, scm.endogenous.size()); ++k)
      if (rng() % 3 == 0) parents.push_back(scm.endogenous[k].name);
    std::shuffle(parents.begin(), parents.end(), rng);
    return parents;
  };

  if (opt.injective) {
    RawVariable code{"code", {}, {}, {}};
    for (const auto& x : scm.exogenous) code.parents.push_back(x.name);
    const std::size_t n = std::size_t{1} << n_exo;
    std::vector<int> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) code.domain.push_back(Rational(static_cast<int>(i)));
    for (std::size_t mask = 0; mask < n; ++mask) {
      std::vector<Rational> key;
      for (std::size_t k = 0; k < n_exo; ++k) key.push_back(Rational(static_cast<int>((mask >> (n_exo - 1 - k)) & 1)));
      code.table[key] = Rational(perm[mask]);
    }
    scm.endogenous.push_back(std::move(code));
  }

  const std::size_t n_mid = rng() % 2;
  for (std::size_t k = 0; k < n_mid; ++k) {
    RawVariable m{"m" + std::to_string(k + 1), random_domain(rng, 2 + rng() % 2), pick_parents(scm.endogenous.size()), {}};
    fill_table(rng, scm, m);
    scm.endogenous.push_back(std::move(m));
  }
  const std::size_t n_agents = 1 + rng() % opt.max_agents;
  for (std::size_t k = 0; k < n_agents; ++k) {
    RawVariable a{"a" + std::to_string(k + 1), random_domain(rng, 2 + rng() % 3), pick_parents(scm.endogenous.size()), {}};
    fill_table(rng, scm, a);
    scm.endogenous.push_back(std::move(a));
  }
  return scm;
}

inline std::vector<std::string> agent_names(const RawScm& scm) {
  std::vector<std::string> out;
  for (const auto& v : scm.endogenous)
    if (v.name[0] == 'a') out.push_back(v.name);
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force recourse oracle.

struct OracleClause {
  enum Kind { threshold, improvement, welfare, pareto };
  Kind kind = threshold;
  bool strict = false;
  int agent = 0;
  Rational t;
};

struct OracleProblem {
  RawScm scm;
  Values factual_exogenous;
  std::map<int, std::string> agents;
  int principal = 1;
  std::vector<Values> actions;
  std::vector<OracleClause> clauses;
  std::vector<Values> plausible;  // empty: all
  bool exclude_identity = false;
};

// Index of the chosen action in `actions`, or nullopt when none qualifies.
inline std::optional<std::size_t> oracle_solve(const OracleProblem& p) {
  const Values factual = p.scm.eval(p.factual_exogenous);
  std::optional<std::size_t> best;
  std::pair<Rational, Rational> best_cost;
  std::vector<std::pair<std::string, std::size_t>> best_key;

  for (std::size_t i = 0; i < p.actions.size(); ++i) {
    const Values& a = p.actions[i];
    bool identity = true;
    for (const auto& [n, v] : a) identity = identity && factual.at(n) == v;
    if (p.exclude_identity && identity) continue;

    const Values cf = p.scm.eval(p.factual_exogenous, a);
    Rational welfare_delta;
    bool harmed = false;
    for (const auto& [id, var] : p.agents) {
      const Rational d = cf.at(var) - factual.at(var);
      welfare_delta += d;
      harmed = harmed || d < 0;
    }
    bool ok = true;
    for (const auto& c : p.clauses) {
      switch (c.kind) {
        case OracleClause::threshold: {
          const Rational h = cf.at(p.agents.at(c.agent));
          ok = ok && (c.strict ? h > c.t : h >= c.t);
          break;
        }
        case OracleClause::improvement: {
          const auto& var = p.agents.at(p.principal);
          ok = ok && (c.strict ? cf.at(var) > factual.at(var) : cf.at(var) >= factual.at(var));
          break;
        }
        case OracleClause::welfare:
          ok = ok && (c.strict ? welfare_delta > 0 : welfare_delta >= 0);
          break;
        case OracleClause::pareto:
          ok = ok && !harmed;
          break;
      }
    }
    if (!p.plausible.empty()) {
      bool any = false;
      for (const auto& pat : p.plausible) {
        bool match = true;
        for (const auto& [n, v] : pat) match = match && cf.at(n) == v;
        any = any || match;
      }
      ok = ok && any;
    }
    if (!ok) continue;

    std::pair<Rational, Rational> cost{Rational(0), Rational(0)};
    std::vector<std::pair<std::string, std::size_t>> key;
    for (const auto& [n, v] : a) {
      const Rational diff = v > factual.at(n) ? v - factual.at(n) : factual.at(n) - v;
      if (diff != 0) {
        cost.first += 1;
        cost.second += diff;
      }
      const auto& dom = p.scm.find(n).domain;
      key.emplace_back(n, static_cast<std::size_t>(std::find(dom.begin(), dom.end(), v) - dom.begin()));
    }
    const bool better = !best || cost.first < best_cost.first ||
                        (cost.first == best_cost.first && cost.second < best_cost.second) ||
                        (cost == best_cost && key < best_key);
    if (better) {
      best = i;
      best_cost = cost;
      best_key = key;
    }
  }
  return best;
}

// Random problem over a random SCM.
inline OracleProblem random_problem(std::mt19937_64& rng) {
  OracleProblem p;
  p.scm = random_scm(rng);
  const auto names = agent_names(p.scm);
  for (std::size_t k = 0; k < names.size(); ++k) p.agents[static_cast<int>(k + 1)] = names[k];
  p.principal = 1 + static_cast<int>(rng() % names.size());
  for (const auto& x : p.scm.exogenous) p.factual_exogenous[x.name] = Rational(static_cast<int>(rng() % 2));

  std::vector<const RawVariable*> targets;
  for (const auto& x : p.scm.exogenous) targets.push_back(&x);
  for (const auto& x : p.scm.endogenous) targets.push_back(&x);
  const std::size_t n_actions = 1 + rng() % 6;
  for (std::size_t i = 0; i < n_actions; ++i) {
    Values a;
    const std::size_t size = rng() % 3;
    for (std::size_t k = 0; k < size; ++k) {
      const auto* v = targets[rng() % targets.size()];
      a[v->name] = v->domain[rng() % v->domain.size()];
    }
    p.actions.push_back(std::move(a));
  }

  const std::size_t n_clauses = rng() % 4;
  for (std::size_t i = 0; i < n_clauses; ++i) {
    OracleClause c;
    c.kind = static_cast<OracleClause::Kind>(rng() % 4);
    c.strict = rng() % 2;
    c.agent = 1 + static_cast<int>(rng() % names.size());
    c.t = random_value(rng);
    p.clauses.push_back(c);
  }
  if (rng() % 4 == 0) {
    const auto& v = p.scm.endogenous.back();
    p.plausible.push_back({{v.name, v.domain[rng() % v.domain.size()]}});
  }
  p.exclude_identity = rng() % 2;
  return p;
}

inline Clause to_engine_clause(const OracleClause& c) {
  switch (c.kind) {
    case OracleClause::threshold: return Threshold{c.agent, c.t, c.strict};
    case OracleClause::improvement: return PrincipalImprovement{c.strict};
    case OracleClause::welfare: return SocialWelfare{c.strict};
    case OracleClause::pareto: return Pareto{};
  }
  return Pareto{};
}

inline RecourseQuery to_engine_query(const OracleProblem& p) {
  RecourseQuery q;
  q.scm = std::make_shared<const Scm>(build_scm(p.scm.to_spec()));
  q.principal = p.principal;
  q.agents = p.agents;
  q.factual = WorldState(p.scm.eval(p.factual_exogenous));
  for (const auto& a : p.actions) q.feasible.push_back(InterventionSet(a));
  for (const auto& c : p.clauses) q.constraints.clauses.push_back(to_engine_clause(c));
  for (const auto& pat : p.plausible) q.plausible.patterns.push_back(WorldState(pat));
  q.exclude_identity = p.exclude_identity;
  return q;
}

}  // namespace recourse::testing
