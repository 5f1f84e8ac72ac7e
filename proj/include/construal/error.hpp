#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace construal {

enum class Errc {
  invalid_mdp,
  parse,
  numeric_failure,
  pairing_mismatch,
  coverage_gap,
  unmapped_mass,
  endpoint_mismatch,
  empty_scope,
  invalid_map,
  inconsistent_interface,
  missing_abstract_choice,
  hint_conflict,
  invalid_budget,
  dangling_endpoint,
  composition_conflict,
  invalid_parameter,
  io,
};

const char* to_string(Errc code);

// Single exception type for the library; `code` tells callers what failed
// and `states` carries the offending state ids where that makes sense.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::vector<std::size_t> states = {})
      : std::runtime_error(what), code_(code), states_(std::move(states)) {}

  Errc code() const noexcept { return code_; }
  const std::vector<std::size_t>& states() const noexcept { return states_; }

 private:
  Errc code_;
  std::vector<std::size_t> states_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(Errc::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace construal
