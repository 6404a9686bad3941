#pragma once

// Design questions answered on fitted laws: how large a model or dataset is
// still useful, the compute-optimal model/data pair, constant-error contours,
// and the smallest pruned network reaching a target error.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scalelaw/forms.hpp"

namespace scalelaw {

enum class DesignKind {
  kMaxModel,
  kMaxData,
  kOptimalPair,
  kContour,
  kPruneConfig,
  kPruneEnvelope,
};

std::string_view design_kind_name(DesignKind kind);

using NamedValues = std::vector<std::pair<std::string, double>>;

struct DesignAnswer {
  explicit DesignAnswer(DesignKind k) : kind(k) {}

  DesignKind kind;
  NamedValues inputs;
  NamedValues values;
  NamedValues residuals;
  double achieved_error = 0.0;
  bool feasible = true;
  std::string formula;
  std::string note;

  // Throws std::out_of_range for unknown names.
  double value(std::string_view name) const;
};

// m_max = (b T)^(1/beta) n_lim^(alpha/beta), the model size at which the data
// term is T times the model term. Requires beta > 0.
DesignAnswer max_useful_model(const DenseParams& params, double n_lim, double threshold);

// n_max = (T / b)^(1/alpha) m_lim^(beta/alpha), the data size at which the
// model term is T times the data term. Requires alpha > 0.
DesignAnswer max_useful_data(const DenseParams& params, double m_lim, double threshold);

// Minimizes m n subject to n^-alpha + b m^-beta = c (the power-law part of
// the core, c_inf excluded). InfeasibleError when c <= 0.
DesignAnswer optimal_compute_pair(const DenseParams& params, double c);

// The core value whose envelope equals `error`: eta e / sqrt(eps0^2 - e^2).
// InfeasibleError unless 0 < error < eps0.
double core_for_error(const DenseParams& params, double error);

enum class ContourMethod { kBisection, kPowerRegion };

struct ContourPoint {
  double m;
  double n;
  double error;  // envelope re-evaluated at (m, n)
  int iterations;
  bool power_region_valid;  // core / eta below kPowerRegionRatio
};

struct ContourResult {
  double target;
  std::vector<ContourPoint> points;
  std::vector<double> model_limited;  // m values whose floor is above target
  std::string note;
};

inline constexpr double kPowerRegionRatio = 0.1;

// Solves envelope(m, n) = target for n at `count` geometric m values in
// [m_lo, m_hi]. InfeasibleError unless exact floor < target < eps0.
ContourResult error_contour(const DenseParams& params, double target, double m_lo,
                            double m_hi, int count,
                            ContourMethod method = ContourMethod::kBisection);

// m* at which the joint law equals `target`. InfeasibleError when target is
// outside (eps_np, eps_up), including targets so close to eps_np that m* is
// not finite.
double invert_prune_for_mstar(double eps_np, double target, const PruneJointParams& params);

// Unpruned error of a network of the family at a fixed data size.
struct EpsNpProvider {
  std::function<double(double depth, double width)> eps_np;
  std::string description;
};

// Log-log bilinear interpolation over a measured table; values[i][j] is the
// error of depths[i] x widths[j]. Queries are clamped to the table.
EpsNpProvider measured_eps_np(std::vector<double> depths, std::vector<double> widths,
                              std::vector<std::vector<double>> values);

// Dense law evaluated at m = model_size(depth, width) and data size n.
EpsNpProvider modeled_eps_np(const DenseParams& dense,
                             std::function<double(double depth, double width)> model_size,
                             double n, std::string description);

struct PruneSearchDomain {
  std::vector<double> depths;
  std::vector<double> widths;
  // Continue with a log-space pattern search inside the hull of the grid.
  bool refine = true;
};

// Geometric grid of `count` values spanning [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int count);

// Parameter count of a ResNet-style network: depth * width^2 * density.
double resnet_parameter_count(double depth, double width, double density);

// Minimizes depth * width^2 * density over the domain subject to the joint
// law reaching eps_k. InfeasibleError when no member reaches eps_k.
DesignAnswer prune_min_params(const EpsNpProvider& family, const PruneJointParams& params,
                              double eps_k, const PruneSearchDomain& domain);

// prune_min_params per error level; infeasible levels are reported with
// feasible = false rather than thrown.
std::vector<DesignAnswer> prune_min_param_envelope(const EpsNpProvider& family,
                                                   const PruneJointParams& params,
                                                   std::span<const double> eps_grid,
                                                   const PruneSearchDomain& domain);

}  // namespace scalelaw
