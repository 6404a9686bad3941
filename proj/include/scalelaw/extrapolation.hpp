#pragma once

// Fit on small configurations, predict larger ones.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scalelaw/fit.hpp"

namespace scalelaw {

enum class PointRole { kFitted, kPredicted, kExcluded };

struct ExtrapolatedPoint {
  std::size_t index;  // position in the input records
  double actual;
  double predicted;        // best-objective restart
  double delta;            // divergence of `predicted`
  double mean_prediction;  // mean over near-optimal restarts
  double band;             // std over near-optimal restarts
  double band_all;         // std over every restart that produced parameters
};

struct ExtrapolationReport {
  // Dense corners set corner_m / corner_n; pruning subsets set `subset`.
  double corner_m = 0.0;
  double corner_n = 0.0;
  std::string subset;
  std::vector<PointRole> roles;  // one per input record
  std::size_t fitted_points = 0;
  std::size_t predicted_points = 0;
  std::size_t excluded_points = 0;
  double mu = 0.0;
  double sigma = 0.0;
  std::vector<ExtrapolatedPoint> per_point;
  std::size_t band_restarts = 0;  // restarts counted as near-optimal
  std::optional<FitReport> fit;
  std::vector<std::string> warnings;
};

// Restarts whose objective is within this factor of the best contribute to
// the band (the rest converged to other local minima).
inline constexpr double kNearOptimalFactor = 2.0;

// Fits {m <= corner_m, n <= corner_n} and predicts {m > corner_m, n > corner_n};
// mixed configurations are excluded. Throws IllPosedError when the fitted
// subset violates the fit preconditions or nothing lies beyond the corner.
ExtrapolationReport extrapolate_dense(std::span<const DenseMeasurement> data,
                                      double corner_m, double corner_n,
                                      const FitConfig& config);

struct SweepEntry {
  std::size_t i;  // index of corner_m among the sorted distinct m values
  std::size_t j;
  double corner_m;
  double corner_n;
  bool skipped = false;
  std::string reason;
  std::optional<ExtrapolationReport> report;
};

// One entry per corner (m_i, n_j) with both coordinates below the largest
// value on their axis; failures are recorded in place.
std::vector<SweepEntry> extrapolation_sweep(std::span<const DenseMeasurement> data,
                                            const FitConfig& config);

// Fits the records whose (depth, width, n) satisfy `in_subset` and predicts
// every record with a larger parameter count depth * width^2 than any fitted
// network, at a data size that was fitted. Other records are excluded.
ExtrapolationReport extrapolate_prune(
    std::span<const PruneMeasurement> data,
    const std::function<bool(double depth, double width, double n)>& in_subset,
    std::string subset_label, const FitConfig& config);

}  // namespace scalelaw
