#pragma once

// Local minimizers for sum-of-squares objectives over an unconstrained
// parameter vector. Callers map box/positivity constraints into this space
// (log transforms) before calling in.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace scalelaw::lsq {

// Fills `residuals` and, when `jacobian` is non-empty, the row-major
// (num_residuals x num_params) Jacobian. Returns false when `u` lies outside
// the model's domain or produces non-finite values.
using Evaluator = std::function<bool(std::span<const double> u,
                                     std::span<double> residuals,
                                     std::span<double> jacobian)>;

struct Problem {
  std::size_t num_params = 0;
  std::size_t num_residuals = 0;
  Evaluator evaluate;
  // When false the evaluator ignores `jacobian` and forward differences are
  // used instead.
  bool analytic_jacobian = true;
};

struct Options {
  int max_iterations = 500;
  double objective_tolerance = 1e-10;
};

struct Result {
  std::vector<double> u;
  double objective = 0.0;
  int iterations = 0;
  // False only when the iteration budget ran out before a stopping test.
  bool converged = false;
  bool simplex_used = false;
  // Condition number of J^T J at the returned point (inf when singular).
  double condition = 0.0;
};

Result levenberg_marquardt(const Problem& problem, std::vector<double> u0,
                           const Options& options);

Result nelder_mead(const Problem& problem, std::vector<double> u0,
                   const Options& options);

// Levenberg-Marquardt, followed by a simplex search from the LM end point
// when LM exhausted its budget on an ill-conditioned Jacobian. The better of
// the two end points is returned.
Result minimize(const Problem& problem, std::vector<double> u0,
                const Options& options);

// Residuals and Jacobian at `u` (analytic or forward-difference, per the
// problem). Returns false outside the domain.
bool evaluate_with_jacobian(const Problem& problem, std::span<const double> u,
                            std::vector<double>& residuals,
                            std::vector<double>& jacobian);

// Forward-difference Jacobian regardless of `analytic_jacobian`.
bool numeric_jacobian(const Problem& problem, std::span<const double> u,
                      std::vector<double>& jacobian);

double sum_of_squares(std::span<const double> residuals);

}  // namespace scalelaw::lsq
