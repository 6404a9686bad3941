#include "scalelaw/extrapolation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "scalelaw/errors.hpp"

namespace scalelaw {

namespace {

using Predictor = std::function<double(const ParamSet&, std::size_t index)>;

void fill_predictions(ExtrapolationReport& report, const FitReport& fit,
                      std::span<const double> actual, const Predictor& predict) {
  const double best = fit.restarts_summary[fit.best_restart];
  std::vector<std::size_t> near, all;
  for (std::size_t r = 0; r < fit.restarts_summary.size(); ++r) {
    if (!fit.restart_params[r]) continue;
    all.push_back(r);
    if (fit.restarts_summary[r] <= kNearOptimalFactor * best + 1e-300) near.push_back(r);
  }
  report.band_restarts = near.size();

  std::vector<double> deltas;
  for (std::size_t i = 0; i < report.roles.size(); ++i) {
    if (report.roles[i] != PointRole::kPredicted) continue;
    double est;
    try {
      est = predict(fit.params, i);
    } catch (const DomainError& e) {
      std::ostringstream os;
      os << "record " << i << " cannot be predicted by the fitted law: " << e.what();
      throw IllPosedError(os.str());
    }
    std::vector<double> near_pred, all_pred;
    for (std::size_t r : all) {
      double v;
      try {
        v = predict(*fit.restart_params[r], i);
      } catch (const DomainError&) {
        continue;
      }
      if (!std::isfinite(v)) continue;
      all_pred.push_back(v);
      if (std::binary_search(near.begin(), near.end(), r)) near_pred.push_back(v);
    }
    const Moments mn = moments(near_pred);
    const Moments ma = moments(all_pred);
    const double d = divergence(est, actual[i]);
    report.per_point.push_back({i, actual[i], est, d, mn.mean, mn.stddev, ma.stddev});
    deltas.push_back(d);
  }
  const Moments m = moments(deltas);
  report.mu = m.mean;
  report.sigma = m.stddev;
}

void count_roles(ExtrapolationReport& report) {
  for (PointRole r : report.roles) {
    switch (r) {
      case PointRole::kFitted: ++report.fitted_points; break;
      case PointRole::kPredicted: ++report.predicted_points; break;
      case PointRole::kExcluded: ++report.excluded_points; break;
    }
  }
}

}  // namespace

ExtrapolationReport extrapolate_dense(std::span<const DenseMeasurement> data,
                                      double corner_m, double corner_n,
                                      const FitConfig& config) {
  ExtrapolationReport report;
  report.corner_m = corner_m;
  report.corner_n = corner_n;
  std::vector<DenseMeasurement> fitted;
  std::vector<double> actual;
  for (const auto& d : data) {
    actual.push_back(d.error);
    if (d.m <= corner_m && d.n <= corner_n) {
      report.roles.push_back(PointRole::kFitted);
      fitted.push_back(d);
    } else if (d.m > corner_m && d.n > corner_n) {
      report.roles.push_back(PointRole::kPredicted);
    } else {
      report.roles.push_back(PointRole::kExcluded);
    }
  }
  count_roles(report);
  if (report.predicted_points == 0)
    throw IllPosedError("no configuration is larger than the corner in both m and n");

  FitReport fit = fit_dense(fitted, config);
  fill_predictions(report, fit, actual, [&](const ParamSet& p, std::size_t i) {
    return eval_dense_envelope(std::get<DenseParams>(p), data[i].m, data[i].n);
  });
  report.warnings = fit.warnings;
  report.fit.emplace(std::move(fit));
  return report;
}

std::vector<SweepEntry> extrapolation_sweep(std::span<const DenseMeasurement> data,
                                            const FitConfig& config) {
  std::set<double> ms_set, ns_set;
  for (const auto& d : data) {
    ms_set.insert(d.m);
    ns_set.insert(d.n);
  }
  const std::vector<double> ms(ms_set.begin(), ms_set.end());
  const std::vector<double> ns(ns_set.begin(), ns_set.end());
  std::vector<SweepEntry> out;
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ns.size(); ++j) {
      SweepEntry e;
      e.i = i;
      e.j = j;
      e.corner_m = ms[i];
      e.corner_n = ns[j];
      if (i < 1 || j < 1) {
        e.skipped = true;
        e.reason = "fewer than two distinct values on an axis below the corner";
      } else {
        try {
          e.report.emplace(extrapolate_dense(data, ms[i], ns[j], config));
        } catch (const IllPosedError& err) {
          e.skipped = true;
          e.reason = err.what();
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

ExtrapolationReport extrapolate_prune(
    std::span<const PruneMeasurement> data,
    const std::function<bool(double, double, double)>& in_subset, std::string subset_label,
    const FitConfig& config) {
  ExtrapolationReport report;
  report.subset = std::move(subset_label);
  std::vector<PruneMeasurement> fitted;
  std::set<double> fitted_n;
  double largest = 0.0;
  for (const auto& d : data) {
    if (in_subset(d.depth, d.width, d.n)) {
      fitted.push_back(d);
      fitted_n.insert(d.n);
      largest = std::max(largest, d.depth * d.width * d.width);
    }
  }
  std::vector<double> actual;
  for (const auto& d : data) {
    actual.push_back(d.error);
    if (in_subset(d.depth, d.width, d.n)) {
      report.roles.push_back(PointRole::kFitted);
    } else if (fitted_n.count(d.n) && d.depth * d.width * d.width > largest) {
      report.roles.push_back(PointRole::kPredicted);
    } else {
      report.roles.push_back(PointRole::kExcluded);
    }
  }
  count_roles(report);
  if (report.fitted_points == 0) throw IllPosedError("the subset selects no records");
  if (report.predicted_points == 0)
    throw IllPosedError("no network is larger than the fitted subset");

  FitReport fit = fit_prune_joint(fitted, config);
  fill_predictions(report, fit, actual, [&](const ParamSet& p, std::size_t i) {
    const auto& d = data[i];
    return eval_prune_joint(d.eps_np, d.depth, d.width, d.density, d.n,
                            std::get<PruneJointParams>(p));
  });
  report.warnings = fit.warnings;
  report.fit.emplace(std::move(fit));
  return report;
}

}  // namespace scalelaw
