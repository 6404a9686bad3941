#include "scalelaw/fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "scalelaw/errors.hpp"
#include "scalelaw/least_squares.hpp"
#include "scalelaw/parallel.hpp"
#include "scalelaw/rng.hpp"

namespace scalelaw {

namespace {

using ld = long double;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kFoldTag = 0xF01D;

// A parameterized residual model ready for multi-start minimization.
struct Model {
  lsq::Problem problem;
  std::vector<std::string> names;
  std::function<std::vector<double>(SplitMix64&)> sample;
  std::function<ParamSet(std::span<const double>)> decode;
};

InitRange range_for(const FitConfig& config, const std::string& name) {
  const auto it = config.init_ranges.find(name);
  const InitRange r = it != config.init_ranges.end() ? it->second
                                                     : default_init_range(name);
  if (!(r.lo > 0.0) || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
    std::ostringstream os;
    os << "init range for " << name << " must have positive finite endpoints";
    throw ParseError(os.str());
  }
  return r;
}

double log_draw(SplitMix64& rng, InitRange r) {
  return std::log(rng.log_uniform(r.lo, r.hi));
}

void validate_config(const FitConfig& config) {
  if (config.restarts < 1) throw ParseError("restarts must be at least 1");
  if (config.max_iterations < 1) throw ParseError("max_iterations must be at least 1");
  if (!(config.objective_tolerance > 0.0))
    throw ParseError("objective tolerance must be positive");
}

// ---------------------------------------------------------------------------
// Dense envelope residuals, evaluated in extended precision. Parameters are
// log(alpha), log(beta), log(b), log(c_inf), log(eta) and, when free,
// log(eps0).

struct DenseResiduals {
  std::vector<ld> log_m, log_n, y;
  bool free_eps0;
  ld fixed_eps0;

  bool operator()(std::span<const double> u, std::span<double> r,
                  std::span<double> jac) const {
    const ld alpha = std::exp(ld(u[0]));
    const ld beta = std::exp(ld(u[1]));
    const ld b = std::exp(ld(u[2]));
    const ld c = std::exp(ld(u[3]));
    const ld eta = std::exp(ld(u[4]));
    const ld eps0 = free_eps0 ? std::exp(ld(u[5])) : fixed_eps0;
    const std::size_t np = u.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
      const ld tn = std::exp(-alpha * log_n[i]);
      const ld tm = std::exp(-beta * log_m[i]);
      const ld core = tn + b * tm + c;
      if (!std::isfinite(static_cast<double>(core))) return false;
      const ld h = std::hypot(core, eta);
      const ld est = eps0 * core / h;
      r[i] = static_cast<double>(est / y[i] - 1);
      if (jac.empty()) continue;
      const ld h3 = h * h * h;
      const ld d_core = eps0 * eta * eta / h3 / y[i];
      double* row = &jac[i * np];
      row[0] = static_cast<double>(d_core * (-log_n[i] * tn) * alpha);
      row[1] = static_cast<double>(d_core * (-log_m[i] * b * tm) * beta);
      row[2] = static_cast<double>(d_core * tm * b);
      row[3] = static_cast<double>(d_core * c);
      row[4] = static_cast<double>(-eps0 * core * eta / h3 / y[i] * eta);
      if (free_eps0) row[5] = static_cast<double>(est / y[i]);
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Rational density residuals shared by single-curve and joint fits.
// Parameters: log(eps_up / eps_np_max - 1), log(gamma), log(p), then phi and
// psi when they are free.

struct PruneResiduals {
  std::vector<ld> log_l, log_w, d, eps_np, y;
  ld eps_np_max;
  bool free_phi;
  bool free_psi;

  bool operator()(std::span<const double> u, std::span<double> r,
                  std::span<double> jac) const {
    const ld lift = std::exp(ld(u[0]));
    const ld up = eps_np_max * (1 + lift);
    const ld gamma = std::exp(ld(u[1]));
    const ld p = std::exp(ld(u[2]));
    std::size_t k = 3;
    const ld phi = free_phi ? ld(u[k++]) : 0;
    const ld psi = free_psi ? ld(u[k++]) : 0;
    const std::size_t np = u.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
      const ld x = std::exp(phi * log_l[i] + psi * log_w[i]) * d[i];
      const ld ratio_log = std::log(up / eps_np[i]);
      const ld a = p * std::exp(ratio_log / gamma);
      if (!(x > 0) || !std::isfinite(static_cast<double>(x)) ||
          !std::isfinite(static_cast<double>(a)))
        return false;
      const ld s = std::max(x, std::max(a, p));
      const ld xs = x / s, as = a / s, ps = p / s;
      const ld qa = xs * xs + as * as;
      const ld qp = xs * xs + ps * ps;
      const ld log_est = std::log(eps_np[i]) + gamma / 2 * (std::log(qa) - std::log(qp));
      const ld est = std::exp(log_est);
      r[i] = static_cast<double>(est / y[i] - 1);
      if (jac.empty()) continue;
      const ld scale = est / y[i];
      const ld fa = as * as / qa;  // A^2 / (x^2 + A^2)
      const ld fp = ps * ps / qp;  // p^2 / (x^2 + p^2)
      double* row = &jac[i * np];
      row[0] = static_cast<double>(scale * fa / up * eps_np_max * lift);
      row[1] = static_cast<double>(
          scale * (ld(0.5) * (std::log(qa) - std::log(qp)) - fa * ratio_log / gamma) *
          gamma);
      row[2] = static_cast<double>(scale * gamma * (fa - fp));
      // d log(est) / d log(x) = gamma (x^2/(x^2+A^2) - x^2/(x^2+p^2)) = gamma (fp - fa)
      const ld dlx = gamma * (fp - fa);
      std::size_t col = 3;
      if (free_phi) row[col++] = static_cast<double>(scale * dlx * log_l[i]);
      if (free_psi) row[col++] = static_cast<double>(scale * dlx * log_w[i]);
    }
    return true;
  }
};

// ---------------------------------------------------------------------------

struct MultiStart {
  std::vector<double> best_u;
  double best_objective = kInf;
  std::size_t best_restart = 0;
  bool converged = false;
  std::vector<double> objectives;
  std::vector<std::optional<ParamSet>> params;
};

// Restarts are ranked by `score`, the objective recomputed from the decoded
// parameters with the public evaluators, so that the selected restart is the
// one whose reported objective is smallest.
MultiStart run_multistart(const Model& model, const FitConfig& config,
                          const std::function<double(const ParamSet&)>& score) {
  const auto restarts = static_cast<std::size_t>(config.restarts);
  std::vector<lsq::Result> results(restarts);
  const lsq::Options options{config.max_iterations, config.objective_tolerance};
  parallel_for(restarts, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(config.seed, {i}));
    results[i] = lsq::minimize(model.problem, model.sample(rng), options);
  });

  MultiStart out;
  out.objectives.reserve(restarts);
  for (std::size_t i = 0; i < restarts; ++i) {
    double f = kInf;
    std::optional<ParamSet> decoded;
    if (std::isfinite(results[i].objective)) {
      try {
        decoded.emplace(model.decode(results[i].u));
        f = score(*decoded);
      } catch (const DomainError&) {
        // the restart wandered outside the representable range
      }
      if (!std::isfinite(f)) f = kInf;
    }
    out.objectives.push_back(f);
    out.params.push_back(std::move(decoded));
    if (f < out.best_objective) {
      out.best_objective = f;
      out.best_restart = i;
    }
  }
  if (!std::isfinite(out.best_objective))
    throw IllPosedError(
        "no restart reached a finite objective: every restart ran to the edge of the "
        "parameter space, so these data do not identify the parameters");
  out.best_u = results[out.best_restart].u;
  out.converged = results[out.best_restart].converged;
  return out;
}

void add_identifiability_warnings(const Model& model, std::span<const double> u,
                                  std::vector<std::string>& warnings) {
  std::vector<double> r, jac;
  if (!lsq::evaluate_with_jacobian(model.problem, u, r, jac)) return;
  const std::size_t np = model.problem.num_params;
  std::vector<double> norms(np, 0.0);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t k = 0; k < np; ++k) norms[k] += jac[i * np + k] * jac[i * np + k];
  const double top = std::sqrt(*std::max_element(norms.begin(), norms.end()));
  for (std::size_t k = 0; k < np; ++k) {
    if (!(std::sqrt(norms[k]) >= 1e-8 * top) || top == 0.0) {
      warnings.push_back("degenerate fit: parameter " + model.names[k] +
                         " has almost no influence on the fitted errors and is "
                         "poorly identified by these data");
    }
  }
}

FitReport fit_model(const Model& model, const FitConfig& config,
                    const std::function<FitReport(const ParamSet&)>& evaluate) {
  MultiStart ms = run_multistart(
      model, config, [&](const ParamSet& p) { return evaluate(p).objective; });
  FitReport report = evaluate(model.decode(ms.best_u));
  report.restarts_summary = std::move(ms.objectives);
  report.restart_params = std::move(ms.params);
  report.best_restart = ms.best_restart;
  report.converged = ms.converged;
  if (!ms.converged)
    report.warnings.push_back(
        "best restart stopped at the iteration limit before converging");
  add_identifiability_warnings(model, ms.best_u, report.warnings);
  return report;
}

void finish_statistics(FitReport& report) {
  std::vector<double> deltas;
  deltas.reserve(report.per_point.size());
  double objective = 0.0;
  for (const auto& pt : report.per_point) {
    deltas.push_back(pt.delta);
    objective += pt.delta * pt.delta;
  }
  const Moments mo = moments(deltas);
  report.mu = mo.mean;
  report.sigma = mo.stddev;
  report.objective = objective;
}

// ---------------------------------------------------------------------------
// Dense

std::size_t distinct_dense(std::span<const DenseMeasurement> data) {
  std::set<std::pair<double, double>> keys;
  for (const auto& d : data) keys.insert({d.m, d.n});
  return keys.size();
}

void check_dense_data(std::span<const DenseMeasurement> data, const FitConfig& config) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    if (!(d.m > 0.0) || !(d.n > 0.0) || !(d.error > 0.0)) {
      std::ostringstream os;
      os << "record " << i << ": m, n and error must be positive";
      throw DomainError(os.str());
    }
  }
  const bool free_eps0 = config.eps0_mode == Eps0Mode::kFreeParameter;
  const std::size_t needed = free_eps0 ? 6 : 5;
  const std::size_t have = distinct_dense(data);
  if (have < needed) {
    std::ostringstream os;
    os << "dense fit needs at least " << needed << " distinct (m, n) points, got "
       << have;
    throw IllPosedError(os.str());
  }
  std::set<double> ms, ns;
  for (const auto& d : data) {
    ms.insert(d.m);
    ns.insert(d.n);
  }
  if (ms.size() < 2 || ns.size() < 2)
    throw IllPosedError("dense fit needs at least two distinct values of both m and n");
  if (!free_eps0 && !(config.fixed_eps0 > 0.0))
    throw ParseError("fixed eps0 must be positive");
}

Model dense_model(std::span<const DenseMeasurement> data, const FitConfig& config) {
  auto res = std::make_shared<DenseResiduals>();
  res->free_eps0 = config.eps0_mode == Eps0Mode::kFreeParameter;
  res->fixed_eps0 = config.fixed_eps0;
  for (const auto& d : data) {
    res->log_m.push_back(std::log(ld(d.m)));
    res->log_n.push_back(std::log(ld(d.n)));
    res->y.push_back(d.error);
  }
  Model model;
  model.names = {"alpha", "beta", "b", "c_inf", "eta"};
  if (res->free_eps0) model.names.push_back("eps0");
  model.problem.num_params = model.names.size();
  model.problem.num_residuals = data.size();
  model.problem.evaluate = [res](std::span<const double> u, std::span<double> r,
                                 std::span<double> j) { return (*res)(u, r, j); };

  std::vector<InitRange> ranges;
  for (const auto& name : model.names) ranges.push_back(range_for(config, name));
  model.sample = [ranges](SplitMix64& rng) {
    std::vector<double> u;
    for (const auto& r : ranges) u.push_back(log_draw(rng, r));
    return u;
  };
  const bool free_eps0 = res->free_eps0;
  const double fixed = config.fixed_eps0;
  const Eps0Mode mode = config.eps0_mode;
  model.decode = [free_eps0, fixed, mode](std::span<const double> u) -> ParamSet {
    return DenseParams(std::exp(u[0]), std::exp(u[1]), std::exp(u[2]),
                       std::exp(u[3]), std::exp(u[4]),
                       free_eps0 ? std::exp(u[5]) : fixed, mode);
  };
  return model;
}

// ---------------------------------------------------------------------------
// Pruning

struct PruneModelSpec {
  bool free_phi;
  bool free_psi;
  bool single;  // decode to PruneParams instead of PruneJointParams
};

void check_prune_records(std::span<const PruneMeasurement> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    if (!(d.density > 0.0 && d.density <= 1.0) || !(d.error > 0.0) ||
        !(d.eps_np > 0.0) || !(d.depth > 0.0) || !(d.width > 0.0) || !(d.n > 0.0)) {
      std::ostringstream os;
      os << "record " << i
         << ": density must lie in (0, 1] and depth, width, n, error, eps_np must be "
            "positive";
      throw DomainError(os.str());
    }
  }
}

Model prune_model(std::span<const PruneMeasurement> data, const FitConfig& config,
                  PruneModelSpec spec) {
  auto res = std::make_shared<PruneResiduals>();
  res->free_phi = spec.free_phi;
  res->free_psi = spec.free_psi;
  res->eps_np_max = 0;
  for (const auto& d : data) {
    res->log_l.push_back(std::log(ld(d.depth)));
    res->log_w.push_back(std::log(ld(d.width)));
    res->d.push_back(d.density);
    res->eps_np.push_back(d.eps_np);
    res->y.push_back(d.error);
    res->eps_np_max = std::max<ld>(res->eps_np_max, d.eps_np);
  }
  Model model;
  model.names = {"eps_up", "gamma", spec.single ? "p" : "p_prime"};
  if (spec.free_phi) model.names.push_back("phi");
  if (spec.free_psi) model.names.push_back("psi");
  model.problem.num_params = model.names.size();
  model.problem.num_residuals = data.size();
  model.problem.evaluate = [res](std::span<const double> u, std::span<double> r,
                                 std::span<double> j) { return (*res)(u, r, j); };

  const InitRange up = range_for(config, "eps_up");
  if (!(up.hi > 1.0))
    throw ParseError("init range for eps_up is a multiplier and must exceed 1");
  const InitRange lift{std::max(up.lo, 1.0 + 1e-6) - 1.0, up.hi - 1.0};
  std::vector<InitRange> ranges{lift, range_for(config, "gamma"),
                                range_for(config, spec.single ? "p" : "p_prime")};
  const bool free_phi = spec.free_phi, free_psi = spec.free_psi;
  const InitRange phi = range_for(config, "phi");
  const InitRange psi = range_for(config, "psi");
  model.sample = [ranges, free_phi, free_psi, phi, psi](SplitMix64& rng) {
    std::vector<double> u;
    for (const auto& r : ranges) u.push_back(log_draw(rng, r));
    if (free_phi) u.push_back(rng.log_uniform(phi.lo, phi.hi));
    if (free_psi) u.push_back(rng.log_uniform(psi.lo, psi.hi));
    return u;
  };
  const double top = static_cast<double>(res->eps_np_max);
  const bool single = spec.single;
  model.decode = [top, free_phi, free_psi, single](std::span<const double> u) -> ParamSet {
    const double eps_up = top * (1.0 + std::exp(u[0]));
    if (single) return PruneParams(eps_up, std::exp(u[1]), std::exp(u[2]));
    std::size_t k = 3;
    const double phi_v = free_phi ? u[k++] : 0.0;
    const double psi_v = free_psi ? u[k++] : 0.0;
    return PruneJointParams(eps_up, std::exp(u[1]), std::exp(u[2]), phi_v, psi_v);
  };
  return model;
}

FitReport evaluate_prune_single(const PruneParams& params,
                                std::span<const PruneMeasurement> data, double eps_np) {
  FitReport report{params};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double est = eval_prune_single(eps_np, data[i].density, params);
    report.per_point.push_back({i, data[i].error, est, divergence(est, data[i].error)});
  }
  finish_statistics(report);
  return report;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::size_t> seeded_permutation(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(derive_seed(seed, {kFoldTag}));
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

// Assigns each record to a fold; records sharing a configuration key share
// a fold.
template <typename Key>
std::vector<int> assign_folds(const std::vector<Key>& keys, int k, std::uint64_t seed) {
  std::vector<Key> distinct;
  std::map<Key, std::size_t> index;
  for (const auto& key : keys) {
    if (index.emplace(key, distinct.size()).second) distinct.push_back(key);
  }
  if (k < 2) throw IllPosedError("cross-validation needs at least 2 folds");
  if (distinct.size() < static_cast<std::size_t>(k)) {
    std::ostringstream os;
    os << "cross-validation with " << k << " folds needs at least " << k
       << " configurations, got " << distinct.size();
    throw IllPosedError(os.str());
  }
  const auto perm = seeded_permutation(distinct.size(), seed);
  std::vector<int> config_fold(distinct.size());
  for (std::size_t pos = 0; pos < perm.size(); ++pos)
    config_fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  std::vector<int> fold(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) fold[i] = config_fold[index.at(keys[i])];
  return fold;
}

template <typename Record, typename Fit, typename Predict>
FitReport cross_validate_impl(std::span<const Record> data, const std::vector<int>& fold,
                              int k, const FitConfig& config, Fit fit, Predict predict) {
  FitReport report = fit(data, config);
  std::vector<PointResult> held(data.size());
  std::vector<FoldSummary> folds;
  for (int f = 0; f < k; ++f) {
    std::vector<Record> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (fold[i] == f) {
        test.push_back(i);
      } else {
        train.push_back(data[i]);
      }
    }
    FitConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, {kFoldTag, static_cast<std::uint64_t>(f)});
    std::optional<FitReport> fitted;
    try {
      fitted.emplace(fit(std::span<const Record>(train), fold_config));
    } catch (const IllPosedError& e) {
      std::ostringstream os;
      os << "fold " << f << ": " << e.what();
      throw IllPosedError(os.str());
    }
    const FitReport& fr = *fitted;
    std::vector<double> deltas;
    for (std::size_t i : test) {
      const double est = predict(fr.params, data[i]);
      held[i] = {i, data[i].error, est, divergence(est, data[i].error)};
      deltas.push_back(held[i].delta);
    }
    const Moments mo = moments(deltas);
    folds.push_back({test.size(), mo.mean, mo.stddev});
    for (const auto& w : fr.warnings) {
      std::ostringstream os;
      os << "fold " << f << ": " << w;
      report.warnings.push_back(os.str());
    }
  }
  report.per_point = std::move(held);
  finish_statistics(report);
  std::vector<double> mus, sigmas;
  for (const auto& fs : folds) {
    mus.push_back(fs.mu);
    sigmas.push_back(fs.sigma);
  }
  report.fold_mu_std = moments(mus).stddev;
  report.fold_sigma_std = moments(sigmas).stddev;
  report.folds = std::move(folds);
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------

InitRange default_init_range(const std::string& name) {
  static const std::map<std::string, InitRange> defaults{
      {"alpha", {0.1, 2.0}}, {"beta", {0.1, 2.0}},   {"b", {1e-4, 10.0}},
      {"c_inf", {1e-12, 10.0}}, {"eta", {0.1, 100.0}}, {"eps0", {0.5, 20.0}},
      {"gamma", {0.5, 4.0}},  {"eps_up", {1.01, 10.0}}, {"p", {1e-4, 1e2}},
      {"p_prime", {1e-4, 1e2}}, {"phi", {0.1, 4.0}},    {"psi", {0.1, 4.0}},
  };
  const auto it = defaults.find(name);
  if (it == defaults.end()) throw ParseError("unknown parameter name: " + name);
  return it->second;
}

double divergence(double estimated, double actual) {
  if (!(actual > 0.0)) throw DomainError("divergence needs a positive actual error");
  return (estimated - actual) / actual;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

FitReport evaluate_fit(const DenseParams& params, std::span<const DenseMeasurement> data) {
  FitReport report{params};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double est = eval_dense_envelope(params, data[i].m, data[i].n);
    report.per_point.push_back({i, data[i].error, est, divergence(est, data[i].error)});
  }
  finish_statistics(report);
  return report;
}

FitReport evaluate_fit(const PruneJointParams& params,
                       std::span<const PruneMeasurement> data) {
  FitReport report{params};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    const double est = eval_prune_joint(d.eps_np, d.depth, d.width, d.density, d.n, params);
    report.per_point.push_back({i, d.error, est, divergence(est, d.error)});
  }
  finish_statistics(report);
  return report;
}

FitReport fit_dense(std::span<const DenseMeasurement> data, const FitConfig& config) {
  validate_config(config);
  check_dense_data(data, config);
  const Model model = dense_model(data, config);
  return fit_model(model, config, [&](const ParamSet& p) {
    return evaluate_fit(std::get<DenseParams>(p), data);
  });
}

FitReport fit_prune_single(std::span<const PruneMeasurement> curve, double eps_np,
                           const FitConfig& config) {
  validate_config(config);
  if (!(eps_np > 0.0)) throw DomainError("unpruned error must be positive");
  check_prune_records(curve);
  std::set<double> densities;
  for (const auto& c : curve) densities.insert(c.density);
  if (densities.size() < 4) {
    std::ostringstream os;
    os << "single-curve fit needs at least 4 distinct densities, got " << densities.size();
    throw IllPosedError(os.str());
  }
  std::vector<PruneMeasurement> anchored(curve.begin(), curve.end());
  for (auto& c : anchored) {
    c.eps_np = eps_np;
    c.depth = 1.0;
    c.width = 1.0;
  }
  const Model model = prune_model(anchored, config, {false, false, true});
  return fit_model(model, config, [&](const ParamSet& p) {
    return evaluate_prune_single(std::get<PruneParams>(p), curve, eps_np);
  });
}

FitReport fit_prune_joint(std::span<const PruneMeasurement> data, const FitConfig& config) {
  validate_config(config);
  check_prune_records(data);
  const std::size_t free = 3 + (config.fix_phi ? 0 : 1) + (config.fix_psi ? 0 : 1);
  std::set<std::tuple<double, double, double, double>> points;
  std::set<double> depths, widths;
  for (const auto& d : data) {
    points.insert({d.depth, d.width, d.density, d.n});
    depths.insert(d.depth);
    widths.insert(d.width);
  }
  if (points.size() < free) {
    std::ostringstream os;
    os << "joint fit with " << free << " free parameters needs at least " << free
       << " distinct (depth, width, density, n) points, got " << points.size();
    throw IllPosedError(os.str());
  }
  const Model model = prune_model(data, config, {!config.fix_phi, !config.fix_psi, false});
  FitReport report = fit_model(model, config, [&](const ParamSet& p) {
    return evaluate_fit(std::get<PruneJointParams>(p), data);
  });
  if (depths.size() < 2 && !config.fix_phi)
    report.warnings.insert(report.warnings.begin(),
                           "single depth in data but the depth exponent phi was not "
                           "omitted; phi is confounded with p_prime");
  if (widths.size() < 2 && !config.fix_psi)
    report.warnings.insert(report.warnings.begin(),
                           "single width in data but the width exponent psi was not "
                           "omitted; psi is confounded with p_prime");
  return report;
}

FitReport cross_validate(std::span<const DenseMeasurement> data, int k,
                         const FitConfig& config) {
  std::vector<std::pair<double, double>> keys;
  for (const auto& d : data) keys.push_back({d.m, d.n});
  const auto fold = assign_folds(keys, k, config.seed);
  return cross_validate_impl<DenseMeasurement>(
      data, fold, k, config,
      [](std::span<const DenseMeasurement> d, const FitConfig& c) { return fit_dense(d, c); },
      [](const ParamSet& p, const DenseMeasurement& d) {
        return eval_dense_envelope(std::get<DenseParams>(p), d.m, d.n);
      });
}

FitReport cross_validate(std::span<const PruneMeasurement> data, int k,
                         const FitConfig& config) {
  std::vector<std::tuple<double, double, double>> keys;
  for (const auto& d : data) keys.push_back({d.depth, d.width, d.n});
  const auto fold = assign_folds(keys, k, config.seed);
  return cross_validate_impl<PruneMeasurement>(
      data, fold, k, config,
      [](std::span<const PruneMeasurement> d, const FitConfig& c) {
        return fit_prune_joint(d, c);
      },
      [](const ParamSet& p, const PruneMeasurement& d) {
        return eval_prune_joint(d.eps_np, d.depth, d.width, d.density, d.n,
                                std::get<PruneJointParams>(p));
      });
}

namespace {

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

template <typename Record, typename KeyFn, typename Merge>
void average_impl(std::span<const Record> data, KeyFn key_of, Merge merge,
                  std::vector<Record>& out, std::vector<double>& spread,
                  std::vector<int>& count) {
  using Key = decltype(key_of(data[0]));
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const Record*>> groups;
  for (const auto& rec : data) {
    const auto [it, inserted] = index.emplace(key_of(rec), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&rec);
  }
  for (const auto& g : groups) {
    std::vector<double> errors;
    for (const Record* r : g) errors.push_back(r->error);
    Record avg = *g.front();
    avg.error = std::accumulate(errors.begin(), errors.end(), 0.0) /
                static_cast<double>(errors.size());
    avg.replicate.reset();
    merge(avg, g);
    out.push_back(avg);
    spread.push_back(sample_std(errors));
    count.push_back(static_cast<int>(g.size()));
  }
}

}  // namespace

AveragedDense average_replicates(std::span<const DenseMeasurement> data) {
  AveragedDense out;
  average_impl(
      data, [](const DenseMeasurement& d) { return std::make_pair(d.m, d.n); },
      [](DenseMeasurement&, const std::vector<const DenseMeasurement*>&) {}, out.data,
      out.spread, out.count);
  return out;
}

AveragedPrune average_replicates(std::span<const PruneMeasurement> data) {
  AveragedPrune out;
  average_impl(
      data,
      [](const PruneMeasurement& d) {
        return std::make_tuple(d.depth, d.width, d.density, d.n);
      },
      [](PruneMeasurement& avg, const std::vector<const PruneMeasurement*>& g) {
        double s = 0.0;
        for (const auto* r : g) s += r->eps_np;
        avg.eps_np = s / static_cast<double>(g.size());
      },
      out.data, out.spread, out.count);
  return out;
}

namespace detail {

namespace {

double column_mismatch(const Model& model, std::span<const double> u) {
  std::vector<double> r, ja, jn;
  if (!lsq::evaluate_with_jacobian(model.problem, u, r, ja) ||
      !lsq::numeric_jacobian(model.problem, u, jn))
    throw DomainError("parameters outside the model domain");
  const std::size_t p = model.problem.num_params;
  double worst = 0.0;
  for (std::size_t c = 0; c < p; ++c) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < model.problem.num_residuals; ++i) {
      diff += std::pow(ja[i * p + c] - jn[i * p + c], 2);
      norm += std::pow(ja[i * p + c], 2);
    }
    if (norm > 0.0) worst = std::max(worst, std::sqrt(diff / norm));
  }
  return worst;
}

}  // namespace

double jacobian_mismatch(std::span<const DenseMeasurement> data, const FitConfig& config,
                         const DenseParams& at) {
  const Model model = dense_model(data, config);
  std::vector<double> u{std::log(at.alpha), std::log(at.beta), std::log(at.b),
                        std::log(at.c_inf), std::log(at.eta)};
  if (config.eps0_mode == Eps0Mode::kFreeParameter) u.push_back(std::log(at.eps0));
  return column_mismatch(model, u);
}

double jacobian_mismatch(std::span<const PruneMeasurement> data, const FitConfig& config,
                         const PruneJointParams& at) {
  const Model model = prune_model(data, config, {!config.fix_phi, !config.fix_psi, false});
  double top = 0.0;
  for (const auto& d : data) top = std::max(top, d.eps_np);
  std::vector<double> u{std::log(at.eps_up / top - 1.0), std::log(at.gamma),
                        std::log(at.p_prime)};
  if (!config.fix_phi) u.push_back(at.phi);
  if (!config.fix_psi) u.push_back(at.psi);
  return column_mismatch(model, u);
}

}  // namespace detail

}  // namespace scalelaw
