#pragma once

#include <string>

#include "recourse/scm.hpp"

namespace recourse::testing {

inline Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

inline std::string data_path(const std::string& name) {
  return std::string(RECOURSE_DATA_DIR) + "/" + name;
}

}  // namespace recourse::testing
