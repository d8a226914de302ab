#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fisher {

/// Iterative solver ran out of iterations before meeting its tolerance.
struct NoConvergence : std::runtime_error {
  long iterations;
  double residual;
  NoConvergence(long it, double res, const std::string& what_arg)
      : std::runtime_error(what_arg + " (iterations=" + std::to_string(it) +
                           ", residual=" + std::to_string(res) + ")"),
        iterations(it),
        residual(res) {}
};

struct ParseError : std::runtime_error {
  std::string field;  // offending field, empty for syntax errors
  std::size_t line;   // 1-based line in the input, 0 if unknown
  ParseError(std::string f, std::size_t ln, const std::string& what_arg)
      : std::runtime_error(what_arg), field(std::move(f)), line(ln) {}
};

struct InfeasibleShape : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonPositiveUtility : std::domain_error {
  using std::domain_error::domain_error;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct InfeasibleTarget : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EpsilonFloorViolated : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BuyerValuesNothing : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fisher
