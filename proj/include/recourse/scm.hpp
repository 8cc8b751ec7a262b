#pragma once

// Finite-domain structural causal models: validation, evaluation, abduction,
// do-interventions and structural counterfactuals.
//
// Values are kept as indices into each variable's declared domain on the hot
// path; the public surface speaks in Rational values keyed by name.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recourse/error.hpp"
#include "recourse/rational.hpp"

namespace recourse {

enum class VariableKind { exogenous, endogenous };

inline std::string_view to_string(VariableKind kind) {
  return kind == VariableKind::exogenous ? "exogenous" : "endogenous";
}

struct VariableDecl {
  std::string name;
  VariableKind kind = VariableKind::exogenous;
  std::vector<Rational> domain;  // ordered, distinct, non-empty

  friend bool operator==(const VariableDecl&, const VariableDecl&) = default;
};

// Named assignment of values to variables. Used for complete states, for
// partial observations and (through InterventionSet) for do-assignments.
struct Assignment {
  std::map<std::string, Rational> values;

  Assignment() = default;
  Assignment(std::initializer_list<std::pair<const std::string, Rational>> init)
      : values(init) {}
  explicit Assignment(std::map<std::string, Rational> v) : values(std::move(v)) {}

  bool empty() const { return values.empty(); }
  std::size_t size() const { return values.size(); }
  bool contains(const std::string& name) const { return values.count(name) != 0; }
  const Rational& at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ScmSpecError("no value for variable '" + name + "'");
    return it->second;
  }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// x^F, x^SCF and partial observations.
struct WorldState : Assignment {
  using Assignment::Assignment;
  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// A = do({X_i := a_i}). The empty set is the identity action.
struct InterventionSet : Assignment {
  using Assignment::Assignment;
  friend bool operator==(const InterventionSet&, const InterventionSet&) = default;
};

// do(x1:=1, h2:=5)
inline std::string to_string(const InterventionSet& a) {
  std::string out = "do(";
  bool first = true;
  for (const auto& [name, value] : a) {
    if (!first) out += ", ";
    first = false;
    out += name + ":=" + to_string(value);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Unvalidated description, as read from the SCM file format.

struct TableRow {
  std::vector<Rational> in;
  Rational out;
};

struct EquationSpec {
  std::string target;
  std::vector<std::string> parents;
  std::vector<TableRow> table;
};

struct ScmSpec {
  std::vector<VariableDecl> variables;
  std::vector<EquationSpec> equations;
};

// ---------------------------------------------------------------------------

// f_target as an exhaustive table. `outputs` holds the index of the output
// value in the target's domain, laid out row-major over the parents' domain
// indices (first parent most significant).
struct StructuralEquation {
  std::size_t target = 0;
  std::vector<std::size_t> parents;
  std::vector<std::size_t> outputs;

  friend bool operator==(const StructuralEquation&, const StructuralEquation&) = default;
};

struct CausalGraph {
  std::vector<std::string> nodes;                          // sorted
  std::vector<std::pair<std::string, std::string>> edges;  // sorted, unique

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;
};

class Scm;
Scm build_scm(const ScmSpec& spec);
Scm apply_intervention(const Scm& scm, const InterventionSet& a);

// M = <F, X, U>. Immutable once built; only build_scm and apply_intervention
// create instances.
class Scm {
 public:
  const std::vector<VariableDecl>& variables() const { return variables_; }
  const std::vector<StructuralEquation>& equations() const { return equations_; }
  const std::vector<std::size_t>& topological_order() const { return topo_order_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = std::lower_bound(
        by_name_.begin(), by_name_.end(), name,
        [](const auto& entry, std::string_view n) { return entry.first < n; });
    if (it == by_name_.end() || it->first != name) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw ScmSpecError("unknown variable '" + std::string(name) + "'");
  }

  const VariableDecl& variable(std::size_t i) const { return variables_[i]; }
  const VariableDecl& variable(std::string_view name) const {
    return variables_[index_of(name)];
  }

  bool is_exogenous(std::size_t i) const {
    return variables_[i].kind == VariableKind::exogenous;
  }

  // Equation assigning variable i, or nullptr for exogenous variables.
  const StructuralEquation* equation_for(std::size_t i) const {
    return equation_of_[i] ? &equations_[*equation_of_[i]] : nullptr;
  }

  // Exogenous variables pinned by a do-intervention hold a fixed domain index.
  std::optional<std::size_t> pinned(std::size_t i) const { return pinned_[i]; }

  std::size_t domain_index(std::size_t var, const Rational& value) const {
    const auto& dom = variables_[var].domain;
    auto it = std::find(dom.begin(), dom.end(), value);
    if (it == dom.end())
      throw DomainError("value " + to_string(value) + " is outside the domain of '" +
                        variables_[var].name + "'");
    return static_cast<std::size_t>(it - dom.begin());
  }

  // Endogenous values in topological order from a vector of domain indices
  // whose exogenous slots are already filled. Pinned exogenous slots are
  // overwritten with their pin.
  void propagate(std::vector<std::size_t>& values) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (pinned_[i]) values[i] = *pinned_[i];
    for (std::size_t v : topo_order_) {
      const auto* eq = equation_for(v);
      if (!eq) continue;
      std::size_t row = 0;
      for (std::size_t p : eq->parents)
        row = row * variables_[p].domain.size() + values[p];
      values[v] = eq->outputs[row];
    }
  }

  friend bool operator==(const Scm&, const Scm&) = default;

  WorldState to_state(const std::vector<std::size_t>& values) const {
    WorldState s;
    for (std::size_t i = 0; i < variables_.size(); ++i)
      s.values.emplace(variables_[i].name, variables_[i].domain[values[i]]);
    return s;
  }

 private:
  Scm() = default;
  friend Scm build_scm(const ScmSpec& spec);
  friend Scm apply_intervention(const Scm& scm, const InterventionSet& a);

  std::vector<VariableDecl> variables_;
  std::vector<StructuralEquation> equations_;
  std::vector<std::optional<std::size_t>> equation_of_;
  std::vector<std::optional<std::size_t>> pinned_;
  std::vector<std::size_t> topo_order_;
  std::vector<std::pair<std::string, std::size_t>> by_name_;  // sorted
};

namespace detail {

// Kahn's algorithm over the parent -> target edges. Throws CycleError.
inline std::vector<std::size_t> topological_sort(
    const std::vector<VariableDecl>& variables,
    const std::vector<StructuralEquation>& equations) {
  const std::size_t n = variables.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> in_degree(n, 0);
  for (const auto& eq : equations) {
    for (std::size_t p : eq.parents) {
      children[p].push_back(eq.target);
      ++in_degree[eq.target];
    }
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = n; i-- > 0;)
    if (in_degree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t c : children[v])
      if (--in_degree[c] == 0) ready.push_back(c);
  }
  if (order.size() != n) {
    std::string members;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_degree[i] == 0) continue;
      if (!members.empty()) members += ", ";
      members += variables[i].name;
    }
    throw CycleError("causal graph has a cycle through: " + members);
  }
  return order;
}

inline std::size_t table_size(const std::vector<VariableDecl>& variables,
                              const std::vector<std::size_t>& parents) {
  std::size_t size = 1;
  for (std::size_t p : parents) size *= variables[p].domain.size();
  return size;
}

}  // namespace detail

inline Scm build_scm(const ScmSpec& spec) {
  Scm scm;
  scm.variables_ = spec.variables;
  const std::size_t n = spec.variables.size();

  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = spec.variables[i];
    if (v.name.empty()) throw ScmSpecError("variable with empty name");
    if (v.domain.empty()) throw DomainError("domain of '" + v.name + "' is empty");
    for (std::size_t a = 0; a < v.domain.size(); ++a)
      for (std::size_t b = a + 1; b < v.domain.size(); ++b)
        if (v.domain[a] == v.domain[b])
          throw DomainError("domain of '" + v.name + "' repeats value " +
                            to_string(v.domain[a]));
    scm.by_name_.emplace_back(v.name, i);
  }
  std::sort(scm.by_name_.begin(), scm.by_name_.end());
  for (std::size_t i = 1; i < scm.by_name_.size(); ++i)
    if (scm.by_name_[i].first == scm.by_name_[i - 1].first)
      throw ScmSpecError("variable '" + scm.by_name_[i].first + "' declared twice");

  scm.equation_of_.assign(n, std::nullopt);
  scm.pinned_.assign(n, std::nullopt);

  for (const auto& es : spec.equations) {
    const std::size_t target = scm.index_of(es.target);
    if (scm.is_exogenous(target))
      throw ScmSpecError("exogenous variable '" + es.target + "' cannot have an equation");
    if (scm.equation_of_[target])
      throw DuplicateEquationError("variable '" + es.target + "' has more than one equation");

    StructuralEquation eq;
    eq.target = target;
    for (const auto& p : es.parents) {
      const std::size_t pi = scm.index_of(p);
      if (std::find(eq.parents.begin(), eq.parents.end(), pi) != eq.parents.end())
        throw ScmSpecError("equation for '" + es.target + "' lists parent '" + p + "' twice");
      eq.parents.push_back(pi);
    }

    const std::size_t rows = detail::table_size(scm.variables_, eq.parents);
    std::vector<std::optional<std::size_t>> outputs(rows);
    for (const auto& row : es.table) {
      if (row.in.size() != eq.parents.size())
        throw ScmSpecError("equation for '" + es.target + "' has a row with " +
                           std::to_string(row.in.size()) + " inputs, expected " +
                           std::to_string(eq.parents.size()));
      std::size_t key = 0;
      for (std::size_t k = 0; k < eq.parents.size(); ++k) {
        const std::size_t p = eq.parents[k];
        key = key * scm.variables_[p].domain.size() + scm.domain_index(p, row.in[k]);
      }
      const std::size_t out = scm.domain_index(target, row.out);
      if (outputs[key] && *outputs[key] != out)
        throw ScmSpecError("equation for '" + es.target +
                           "' maps the same parent values to two outputs");
      outputs[key] = out;
    }
    for (std::size_t key = 0; key < rows; ++key)
      if (!outputs[key])
        throw IncompleteTableError("equation for '" + es.target + "' covers " +
                                   std::to_string(std::count_if(
                                       outputs.begin(), outputs.end(),
                                       [](const auto& o) { return o.has_value(); })) +
                                   " of " + std::to_string(rows) + " parent combinations");
    eq.outputs.reserve(rows);
    for (const auto& o : outputs) eq.outputs.push_back(*o);

    scm.equation_of_[target] = scm.equations_.size();
    scm.equations_.push_back(std::move(eq));
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!scm.is_exogenous(i) && !scm.equation_of_[i])
      throw IncompleteTableError("endogenous variable '" + scm.variables_[i].name +
                                 "' has no equation");

  scm.topo_order_ = detail::topological_sort(scm.variables_, scm.equations_);
  return scm;
}

// Computes every endogenous value from an assignment of all exogenous
// variables. Exogenous variables pinned by an intervention may be omitted;
// a supplied value for them is overridden by the pin.
inline WorldState evaluate(const Scm& scm, const WorldState& exogenous) {
  const auto& vars = scm.variables();
  std::vector<std::size_t> values(vars.size(), 0);
  for (const auto& [name, value] : exogenous) {
    const std::size_t i = scm.index_of(name);
    if (!scm.is_exogenous(i))
      throw ScmSpecError("'" + name + "' is endogenous; evaluate takes exogenous values only");
    values[i] = scm.domain_index(i, value);
  }
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (scm.is_exogenous(i) && !scm.pinned(i) && !exogenous.contains(vars[i].name))
      throw MissingExogenousError("no value for exogenous variable '" + vars[i].name + "'");
  scm.propagate(values);
  return scm.to_state(values);
}

// F^-1: the unique complete state consistent with a (possibly partial)
// observation, by exhaustive search over the exogenous assignments.
// Throws NonInvertibleError when zero or several assignments fit.
inline WorldState abduct(const Scm& scm, const WorldState& observation) {
  const auto& vars = scm.variables();
  const std::size_t n = vars.size();
  std::vector<std::optional<std::size_t>> observed(n);
  for (const auto& [name, value] : observation) {
    const std::size_t i = scm.index_of(name);
    observed[i] = scm.domain_index(i, value);
  }

  std::vector<std::size_t> free;  // exogenous variables to search over
  std::vector<std::size_t> values(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!scm.is_exogenous(i) || scm.pinned(i)) continue;
    if (observed[i]) values[i] = *observed[i];
    else free.push_back(i);
  }

  std::optional<std::vector<std::size_t>> found;
  std::vector<std::size_t> candidate(n);
  std::vector<std::size_t> digits(free.size(), 0);
  bool exhausted = false;
  while (!exhausted) {
    candidate = values;
    for (std::size_t k = 0; k < free.size(); ++k) candidate[free[k]] = digits[k];
    scm.propagate(candidate);
    bool consistent = true;
    for (std::size_t i = 0; i < n && consistent; ++i)
      consistent = !observed[i] || *observed[i] == candidate[i];
    if (consistent) {
      if (found)
        throw NonInvertibleError(
            "observation is consistent with more than one exogenous assignment");
      found = candidate;
    }
    // Mixed-radix increment, last free variable fastest.
    exhausted = true;
    for (std::size_t k = free.size(); k-- > 0;) {
      if (++digits[k] < vars[free[k]].domain.size()) {
        exhausted = false;
        break;
      }
      digits[k] = 0;
    }
  }
  if (!found)
    throw NonInvertibleError("observation is not produced by any exogenous assignment");
  return scm.to_state(*found);
}

// M -> M_A. Intervened endogenous variables get a constant equation with no
// parents; intervened exogenous variables are pinned.
inline Scm apply_intervention(const Scm& scm, const InterventionSet& a) {
  Scm out = scm;
  for (const auto& [name, value] : a) {
    const std::size_t i = out.index_of(name);
    const std::size_t v = out.domain_index(i, value);
    if (out.is_exogenous(i)) {
      out.pinned_[i] = v;
    } else {
      auto& eq = out.equations_[*out.equation_of_[i]];
      eq.parents.clear();
      eq.outputs.assign(1, v);
    }
  }
  if (!a.empty()) out.topo_order_ = detail::topological_sort(out.variables_, out.equations_);
  return out;
}

// x^SCF = F_A(F^-1(x^F)).
inline WorldState counterfactual(const Scm& scm, const WorldState& factual,
                                 const InterventionSet& a) {
  const WorldState complete = abduct(scm, factual);
  const Scm mutilated = apply_intervention(scm, a);
  WorldState exogenous;
  for (const auto& [name, value] : complete) {
    const std::size_t i = scm.index_of(name);
    if (scm.is_exogenous(i) && !mutilated.pinned(i)) exogenous.values.emplace(name, value);
  }
  return evaluate(mutilated, exogenous);
}

inline CausalGraph to_graph(const Scm& scm) {
  CausalGraph g;
  for (const auto& v : scm.variables()) g.nodes.push_back(v.name);
  for (const auto& eq : scm.equations())
    for (std::size_t p : eq.parents)
      g.edges.emplace_back(scm.variable(p).name, scm.variable(eq.target).name);
  std::sort(g.nodes.begin(), g.nodes.end());
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

inline std::string graph_to_dot(const CausalGraph& g) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q + "\"";
  };
  std::string out = "digraph scm {\n";
  for (const auto& n : g.nodes) out += "  " + quote(n) + ";\n";
  for (const auto& [from, to] : g.edges) out += "  " + quote(from) + " -> " + quote(to) + ";\n";
  out += "}\n";
  return out;
}

}  // namespace recourse
