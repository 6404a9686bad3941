#pragma once

// Least-squares estimation of the landscape parameters from measurements.
// The objective is the plain sum of squared relative divergences
// delta = (estimated - actual) / actual over the input records.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scalelaw/forms.hpp"

namespace scalelaw {

using ParamSet = std::variant<DenseParams, PruneParams, PruneJointParams>;

// Initialization interval for one parameter; draws are log-uniform.
struct InitRange {
  double lo;
  double hi;
};

// Default draw interval for a named parameter. Names: alpha, beta, b, c_inf,
// eta, eps0, gamma, eps_up (multiplier of the largest eps_np), p, p_prime,
// phi, psi. Throws ParseError for unknown names.
InitRange default_init_range(const std::string& name);

struct FitConfig {
  int restarts = 100;
  std::uint64_t seed = 0;
  int max_iterations = 500;
  double objective_tolerance = 1e-10;
  // Dense fits only. With kFixedFromClasses, `fixed_eps0` is held constant.
  Eps0Mode eps0_mode = Eps0Mode::kFreeParameter;
  double fixed_eps0 = 0.0;
  // Joint pruning fits: omitted exponents are held at zero.
  bool fix_phi = false;
  bool fix_psi = false;
  // Overrides of default_init_range, keyed by parameter name.
  std::map<std::string, InitRange> init_ranges;
};

struct PointResult {
  std::size_t index;  // position in the input records
  double actual;
  double estimated;
  double delta;
};

struct FoldSummary {
  std::size_t held_out;
  double mu;
  double sigma;
};

struct FitReport {
  explicit FitReport(ParamSet p) : params(std::move(p)) {}

  ParamSet params;
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation of delta
  double objective = 0.0;
  std::vector<PointResult> per_point;
  // Final objective of every restart, by restart index.
  std::vector<double> restarts_summary;
  // Fitted parameters of every restart, by restart index; empty when the
  // restart diverged.
  std::vector<std::optional<ParamSet>> restart_params;
  std::size_t best_restart = 0;
  bool converged = true;
  std::vector<std::string> warnings;
  // Set by cross-validation: per-fold held-out statistics and the spread of
  // those statistics across folds.
  std::optional<std::vector<FoldSummary>> folds;
  double fold_mu_std = 0.0;
  double fold_sigma_std = 0.0;
};

// (estimated - actual) / actual; DomainError when actual <= 0.
double divergence(double estimated, double actual);

// Mean and population standard deviation.
struct Moments {
  double mean;
  double stddev;
};
Moments moments(std::span<const double> values);

FitReport fit_dense(std::span<const DenseMeasurement> data, const FitConfig& config);

// `curve` holds one (depth, width, n) configuration; eps_np is supplied.
FitReport fit_prune_single(std::span<const PruneMeasurement> curve, double eps_np,
                           const FitConfig& config);

FitReport fit_prune_joint(std::span<const PruneMeasurement> data,
                          const FitConfig& config);

// k-fold cross-validation over configurations. The returned parameters are
// the fit to all data; per_point, mu, sigma and objective are the held-out
// divergences, each point predicted by the fold that excluded it.
FitReport cross_validate(std::span<const DenseMeasurement> data, int k,
                         const FitConfig& config);
FitReport cross_validate(std::span<const PruneMeasurement> data, int k,
                         const FitConfig& config);

// Divergences of fixed parameters against data; objective is their sum of
// squares.
FitReport evaluate_fit(const DenseParams& params,
                       std::span<const DenseMeasurement> data);
FitReport evaluate_fit(const PruneJointParams& params,
                       std::span<const PruneMeasurement> data);

struct AveragedDense {
  std::vector<DenseMeasurement> data;  // one record per (m, n), first-seen order
  std::vector<double> spread;          // sample std of the replicates (0 if one)
  std::vector<int> count;
};
AveragedDense average_replicates(std::span<const DenseMeasurement> data);

struct AveragedPrune {
  std::vector<PruneMeasurement> data;  // one record per (l, w, d, n)
  std::vector<double> spread;
  std::vector<int> count;
};
AveragedPrune average_replicates(std::span<const PruneMeasurement> data);

namespace detail {

// Largest relative column gap ||J_analytic - J_forward|| / ||J_analytic||
// between the analytic fitting Jacobian and forward differences, at `at`.
double jacobian_mismatch(std::span<const DenseMeasurement> data, const FitConfig& config,
                         const DenseParams& at);
double jacobian_mismatch(std::span<const PruneMeasurement> data, const FitConfig& config,
                         const PruneJointParams& at);

}  // namespace detail

}  // namespace scalelaw
