#pragma once

#include <stdexcept>
#include <string>

namespace mmplan {

// Malformed or unreadable input document.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A domain invariant does not hold; the message names the offending field.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A search or partition has no feasible solution under the given budget.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mmplan
