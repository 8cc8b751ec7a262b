#pragma once

// JSON plumbing shared by the SCM, query, outcome and report formats.

#include <json.hpp>

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "recourse/error.hpp"
#include "recourse/rational.hpp"
#include "recourse/scm.hpp"

namespace recourse {

using Json = nlohmann::ordered_json;

// Numbers are read through their textual form so "3.5" stays exactly 7/2.
// Strings may use fraction syntax ("1/3").
inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) return parse_rational(j.dump());
  throw ParseError("expected a number, got " + j.dump());
}

// Integers are written as JSON numbers; anything else as an exact string.
inline Json rational_to_json(const Rational& r) {
  if (r.denominator() == 1) return Json(r.numerator());
  return Json(to_string(r));
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte is 1-based and points just past the offending character.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError("malformed JSON: " + std::string(e.what()),
                     line_of_offset(text, offset));
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Wraps nlohmann type errors (missing keys, wrong types) as ParseError.
template <typename F>
auto with_json_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
}

inline WorldState state_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("expected an object of variable assignments");
  WorldState s;
  for (const auto& [name, value] : j.items()) s.values.emplace(name, rational_from_json(value));
  return s;
}

inline InterventionSet intervention_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("expected an object of do-assignments");
  InterventionSet a;
  for (const auto& [name, value] : j.items()) a.values.emplace(name, rational_from_json(value));
  return a;
}

inline Json assignment_to_json(const Assignment& a) {
  Json j = Json::object();
  for (const auto& [name, value] : a) j[name] = rational_to_json(value);
  return j;
}

// ---------------------------------------------------------------------------
// SCM file format:
//   {"variables":[{"name":..,"kind":"exogenous"|"endogenous","domain":[..]}],
//    "equations":[{"target":..,"parents":[..],"table":[{"in":[..],"out":v}]}]}

inline ScmSpec scm_spec_from_json(const Json& j) {
  return with_json_context("SCM", [&] {
    ScmSpec spec;
    for (const auto& jv : j.at("variables")) {
      VariableDecl v;
      v.name = jv.at("name").get<std::string>();
      const auto kind = jv.at("kind").get<std::string>();
      if (kind == "exogenous") v.kind = VariableKind::exogenous;
      else if (kind == "endogenous") v.kind = VariableKind::endogenous;
      else throw ParseError("variable '" + v.name + "' has unknown kind '" + kind + "'");
      for (const auto& d : jv.at("domain")) v.domain.push_back(rational_from_json(d));
      spec.variables.push_back(std::move(v));
    }
    if (j.contains("equations")) {
      for (const auto& je : j.at("equations")) {
        EquationSpec eq;
        eq.target = je.at("target").get<std::string>();
        eq.parents = je.value("parents", std::vector<std::string>{});
        for (const auto& row : je.at("table")) {
          TableRow r;
          for (const auto& x : row.at("in")) r.in.push_back(rational_from_json(x));
          r.out = rational_from_json(row.at("out"));
          eq.table.push_back(std::move(r));
        }
        spec.equations.push_back(std::move(eq));
      }
    }
    return spec;
  });
}

inline Json scm_spec_to_json(const ScmSpec& spec) {
  Json j;
  j["variables"] = Json::array();
  for (const auto& v : spec.variables) {
    Json jv;
    jv["name"] = v.name;
    jv["kind"] = std::string(to_string(v.kind));
    jv["domain"] = Json::array();
    for (const auto& d : v.domain) jv["domain"].push_back(rational_to_json(d));
    j["variables"].push_back(std::move(jv));
  }
  j["equations"] = Json::array();
  for (const auto& eq : spec.equations) {
    Json je;
    je["target"] = eq.target;
    je["parents"] = eq.parents;
    je["table"] = Json::array();
    for (const auto& row : eq.table) {
      Json jr;
      jr["in"] = Json::array();
      for (const auto& x : row.in) jr["in"].push_back(rational_to_json(x));
      jr["out"] = rational_to_json(row.out);
      je["table"].push_back(std::move(jr));
    }
    j["equations"].push_back(std::move(je));
  }
  return j;
}

inline ScmSpec load_scm_spec(const std::string& path) {
  return scm_spec_from_json(parse_json_text(read_text_file(path)));
}

}  // namespace recourse
