#pragma once

#include <stdexcept>
#include <string>

namespace scalelaw {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kInput = 2,
  kIllPosed = 3,
  kInfeasible = 4,
};

// Base for every error the toolkit raises on purpose. `code()` is the short
// machine-readable tag printed after the `code:` prefix by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what, ExitCode exit)
      : std::runtime_error(what), code_(std::move(code)), exit_(exit) {}

  const std::string& code() const noexcept { return code_; }
  ExitCode exit_code() const noexcept { return exit_; }

 private:
  std::string code_;
  ExitCode exit_;
};

// Input outside the mathematical domain of a form (nonpositive scales,
// inverted plateaus, density outside (0, 1]).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error("domain-error", what, ExitCode::kInput) {}
};

// Malformed input file or command line.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error("parse-error", what, ExitCode::kInput) {}
};

// Not enough (or not enough distinct) data to identify the parameters.
class IllPosedError : public Error {
 public:
  explicit IllPosedError(const std::string& what)
      : Error("ill-posed", what, ExitCode::kIllPosed) {}
};

// A design query has no solution within the requested domain.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error("infeasible", what, ExitCode::kInfeasible) {}
};

}  // namespace scalelaw
