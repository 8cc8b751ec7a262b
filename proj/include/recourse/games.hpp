#pragma once

// Two-player prisoner's-dilemma payoff matrices and their SCMs.
//
// Actions are encoded Betray = 1, Silent = 0. The SCM has exogenous actions
// x1, x2 in {0, 1} and endogenous payoffs h1, h2, each a table function of
// (x1, x2).

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "recourse/error.hpp"
#include "recourse/rational.hpp"
#include "recourse/scm.hpp"

namespace recourse {

enum class Action : int { silent = 0, betray = 1 };

struct Payoffs {
  Rational p1;
  Rational p2;
  friend bool operator==(const Payoffs&, const Payoffs&) = default;
};

struct PayoffMatrix {
  std::string id;  // "table1", "table2", "table3" or a custom name
  // cells[row action][column action], indexed by the action's numeric code.
  std::array<std::array<Payoffs, 2>, 2> cells{};

  const Payoffs& at(Action row, Action col) const {
    return cells[static_cast<int>(row)][static_cast<int>(col)];
  }
  Payoffs& at(Action row, Action col) {
    return cells[static_cast<int>(row)][static_cast<int>(col)];
  }

  bool is_symmetric() const {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        if (cells[a][b].p1 != cells[b][a].p2) return false;
    return true;
  }

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;
};

namespace detail {

inline PayoffMatrix symmetric_matrix(std::string id, Rational reward, Rational temptation,
                                     Rational sucker, Rational punishment) {
  PayoffMatrix m;
  m.id = std::move(id);
  m.at(Action::betray, Action::betray) = {punishment, punishment};
  m.at(Action::betray, Action::silent) = {temptation, sucker};
  m.at(Action::silent, Action::betray) = {sucker, temptation};
  m.at(Action::silent, Action::silent) = {reward, reward};
  return m;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_matrix_ids() {
  static const std::vector<std::string> ids{"table1", "table2", "table3"};
  return ids;
}

// table1 is the illustrative game; table2 and table3 are the two matrices
// used in the laboratory experiment.
inline PayoffMatrix builtin_matrix(const std::string& id) {
  if (id == "table1")
    return detail::symmetric_matrix(id, Rational(5), Rational(10), Rational(1), Rational(7, 2));
  if (id == "table2")
    return detail::symmetric_matrix(id, Rational(65), Rational(100), Rational(10), Rational(35));
  if (id == "table3")
    return detail::symmetric_matrix(id, Rational(75), Rational(100), Rational(10), Rational(45));
  throw UnknownMatrixError("unknown payoff matrix '" + id + "'");
}

// Player 1's payoffs satisfy temptation > reward > punishment > sucker.
inline bool is_pd_ordered(const PayoffMatrix& m) {
  if (!m.is_symmetric())
    throw AsymmetricMatrixError("matrix '" + m.id + "' is not symmetric");
  const Rational temptation = m.at(Action::betray, Action::silent).p1;
  const Rational reward = m.at(Action::silent, Action::silent).p1;
  const Rational punishment = m.at(Action::betray, Action::betray).p1;
  const Rational sucker = m.at(Action::silent, Action::betray).p1;
  return temptation > reward && reward > punishment && punishment > sucker;
}

inline ScmSpec pd_scm_spec(const PayoffMatrix& m) {
  ScmSpec spec;
  const std::vector<Rational> binary{Rational(0), Rational(1)};
  spec.variables.push_back({"x1", VariableKind::exogenous, binary});
  spec.variables.push_back({"x2", VariableKind::exogenous, binary});

  auto payoff_domain = [&](auto pick) {
    std::vector<Rational> dom;
    for (const auto& row : m.cells)
      for (const auto& cell : row) dom.push_back(pick(cell));
    std::sort(dom.begin(), dom.end());
    dom.erase(std::unique(dom.begin(), dom.end()), dom.end());
    return dom;
  };
  auto table = [&](auto pick) {
    std::vector<TableRow> rows;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) rows.push_back({{Rational(a), Rational(b)}, pick(m.cells[a][b])});
    return rows;
  };
  auto p1 = [](const Payoffs& c) { return c.p1; };
  auto p2 = [](const Payoffs& c) { return c.p2; };
  spec.variables.push_back({"h1", VariableKind::endogenous, payoff_domain(p1)});
  spec.variables.push_back({"h2", VariableKind::endogenous, payoff_domain(p2)});
  spec.equations.push_back({"h1", {"x1", "x2"}, table(p1)});
  spec.equations.push_back({"h2", {"x1", "x2"}, table(p2)});
  return spec;
}

inline Scm pd_scm(const PayoffMatrix& m) { return build_scm(pd_scm_spec(m)); }

// ---------------------------------------------------------------------------
// Matrix CSV: four data rows `row_action,col_action,p1,p2`, with an optional
// header line of exactly those column names. Actions are 0/1 or
// silent/betray.

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline Action parse_action(const std::string& text, std::size_t line) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "0" || t == "silent") return Action::silent;
  if (t == "1" || t == "betray") return Action::betray;
  throw DomainError("action '" + text + "' is not 0/1 (silent/betray)", line);
}

}  // namespace detail

inline PayoffMatrix parse_matrix_csv(const std::string& text, std::string id = "custom") {
  PayoffMatrix m;
  m.id = std::move(id);
  std::array<std::array<bool, 2>, 2> seen{};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (rows == 0 && !fields.empty() && fields[0] == "row_action") {
      if (fields != std::vector<std::string>{"row_action", "col_action", "p1", "p2"})
        throw ParseError("matrix header must be row_action,col_action,p1,p2", line_no);
      continue;
    }
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    const Action row = detail::parse_action(fields[0], line_no);
    const Action col = detail::parse_action(fields[1], line_no);
    auto& flag = seen[static_cast<int>(row)][static_cast<int>(col)];
    if (flag) throw ParseError("cell listed twice", line_no);
    flag = true;
    auto p1 = try_parse_rational(fields[2]);
    auto p2 = try_parse_rational(fields[3]);
    if (!p1 || !p2) throw ParseError("payoffs must be exact numbers", line_no);
    m.at(row, col) = {*p1, *p2};
    ++rows;
  }
  if (rows != 4)
    throw ParseError("payoff matrix needs all four cells, found " + std::to_string(rows));
  return m;
}

inline PayoffMatrix load_matrix_csv(const std::string& path, std::string id) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_matrix_csv(ss.str(), std::move(id));
}

inline std::string matrix_to_csv(const PayoffMatrix& m) {
  std::string out = "row_action,col_action,p1,p2\n";
  for (int a = 1; a >= 0; --a)
    for (int b = 1; b >= 0; --b)
      out += std::to_string(a) + "," + std::to_string(b) + "," + to_string(m.cells[a][b].p1) +
             "," + to_string(m.cells[a][b].p2) + "\n";
  return out;
}

}  // namespace recourse
