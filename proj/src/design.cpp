#include "scalelaw/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "scalelaw/errors.hpp"

namespace scalelaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

double rel_residual(double got, double want) { return std::abs(got / want - 1.0); }

// Envelope value at (m, n) given the core in the power-law region check.
double core_at(const DenseParams& p, double m, double n) { return eval_dense_core(p, m, n); }

}  // namespace

std::string_view design_kind_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::kMaxModel: return "max_model";
    case DesignKind::kMaxData: return "max_data";
    case DesignKind::kOptimalPair: return "optimal_pair";
    case DesignKind::kContour: return "contour";
    case DesignKind::kPruneConfig: return "prune_config";
    case DesignKind::kPruneEnvelope: return "prune_envelope";
  }
  return "unknown";
}

double DesignAnswer::value(std::string_view name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw std::out_of_range("no design value named " + std::string(name));
}

DesignAnswer max_useful_model(const DenseParams& params, double n_lim, double threshold) {
  require_positive(n_lim, "n_lim");
  require_positive(threshold, "threshold T");
  if (!(params.beta > 0.0)) throw InfeasibleError("model exponent beta is zero");
  const double m_max = std::pow(params.b * threshold, 1.0 / params.beta) *
                       std::pow(n_lim, params.alpha / params.beta);
  const double t_back = std::pow(n_lim, -params.alpha) / (params.b * std::pow(m_max, -params.beta));
  const double core = core_at(params, m_max, n_lim);
  DesignAnswer a{DesignKind::kMaxModel};
  a.inputs = {{"n_lim", n_lim}, {"T", threshold}};
  a.values = {{"m", m_max}, {"n", n_lim}, {"core_over_eta", core / params.eta}};
  a.residuals = {{"threshold_relative", rel_residual(t_back, threshold)}};
  a.achieved_error = eval_dense_envelope(params, m_max, n_lim);
  a.formula = "m_max = (b T)^(1/beta) n_lim^(alpha/beta), T = n_lim^-alpha / (b m_max^-beta)";
  a.note = core / params.eta < kPowerRegionRatio
               ? "inside the power-law region (core << eta)"
               : "outside the power-law region (core / eta = " + fmt(core / params.eta) +
                     "); the threshold relation is a power-region approximation here";
  return a;
}

DesignAnswer max_useful_data(const DenseParams& params, double m_lim, double threshold) {
  require_positive(m_lim, "m_lim");
  require_positive(threshold, "threshold T");
  if (!(params.alpha > 0.0)) throw InfeasibleError("data exponent alpha is zero");
  const double n_max = std::pow(threshold / params.b, 1.0 / params.alpha) *
                       std::pow(m_lim, params.beta / params.alpha);
  const double t_back = params.b * std::pow(m_lim, -params.beta) / std::pow(n_max, -params.alpha);
  const double core = core_at(params, m_lim, n_max);
  DesignAnswer a{DesignKind::kMaxData};
  a.inputs = {{"m_lim", m_lim}, {"T", threshold}};
  a.values = {{"m", m_lim}, {"n", n_max}, {"core_over_eta", core / params.eta}};
  a.residuals = {{"threshold_relative", rel_residual(t_back, threshold)}};
  a.achieved_error = eval_dense_envelope(params, m_lim, n_max);
  a.formula = "n_max = (T / b)^(1/alpha) m_lim^(beta/alpha), T = b m_lim^-beta / n_max^-alpha";
  a.note = core / params.eta < kPowerRegionRatio
               ? "inside the power-law region (core << eta)"
               : "outside the power-law region (core / eta = " + fmt(core / params.eta) +
                     "); the threshold relation is a power-region approximation here";
  return a;
}

DesignAnswer optimal_compute_pair(const DenseParams& params, double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw InfeasibleError("contour level c must be positive, got " + fmt(c));
  if (!(params.alpha > 0.0) || !(params.beta > 0.0))
    throw InfeasibleError("both exponents must be positive for a compute-optimal pair");
  const double ratio = params.alpha / params.beta;
  const double n = std::pow((1.0 + ratio) / c, 1.0 / params.alpha);
  // b m^-beta = (alpha / beta) n^-alpha
  const double m = std::pow(ratio * std::pow(n, -params.alpha) / params.b, -1.0 / params.beta);
  const double kkt = params.b * params.beta / params.alpha * std::pow(n, params.alpha) /
                         std::pow(m, params.beta) -
                     1.0;
  const double on_contour = std::pow(n, -params.alpha) + params.b * std::pow(m, -params.beta);
  DesignAnswer a{DesignKind::kOptimalPair};
  a.inputs = {{"c", c}};
  a.values = {{"m", m}, {"n", n}, {"m_times_n", m * n}};
  a.residuals = {{"ratio_condition", std::abs(kkt)},
                 {"contour_relative", rel_residual(on_contour, c)}};
  a.achieved_error = eval_dense_envelope(params, m, n);
  a.formula =
      "minimize m n s.t. n^-alpha + b m^-beta = c: n = ((1 + alpha/beta) / c)^(1/alpha), "
      "b m^-beta = (alpha/beta) n^-alpha";
  a.note = "achieved_error is the full envelope at (m, n), which also includes c_inf";
  return a;
}

double core_for_error(const DenseParams& params, double error) {
  if (!(error > 0.0) || !(error < params.eps0))
    throw InfeasibleError("target error must lie strictly between 0 and eps0");
  return params.eta * error / std::sqrt((params.eps0 - error) * (params.eps0 + error));
}

ContourResult error_contour(const DenseParams& params, double target, double m_lo,
                            double m_hi, int count, ContourMethod method) {
  require_positive(m_lo, "m_lo");
  require_positive(m_hi, "m_hi");
  if (m_hi < m_lo) throw DomainError("m range must satisfy m_lo <= m_hi");
  if (count < 1) throw DomainError("contour needs at least one m value");
  const double floor = irreducible_error(params).exact;
  if (!(target > floor) || !(target < params.eps0)) {
    throw InfeasibleError("target " + fmt(target) + " must lie strictly between the "
                          "irreducible error " + fmt(floor) + " and eps0 " +
                          fmt(params.eps0));
  }
  if (!(params.alpha > 0.0)) throw InfeasibleError("data exponent alpha is zero");

  ContourResult out;
  out.target = target;
  const double core_target = core_for_error(params, target);
  const std::vector<double> ms = geometric_grid(m_lo, m_hi, count);
  for (double m : ms) {
    const double model_part = params.b * std::pow(m, -params.beta) + params.c_inf;
    const double room = core_target - model_part;  // required n^-alpha
    if (!(room > 0.0)) {
      out.model_limited.push_back(m);
      continue;
    }
    if (method == ContourMethod::kPowerRegion) {
      // eps ~ eps0 core / eta while core << eta.
      const double core_pr = target * params.eta / params.eps0;
      const double room_pr = core_pr - model_part;
      if (!(room_pr > 0.0)) {
        out.model_limited.push_back(m);
        continue;
      }
      const double n = std::pow(room_pr, -1.0 / params.alpha);
      out.points.push_back({m, n, eval_dense_envelope(params, m, n), 0,
                            core_pr / params.eta < kPowerRegionRatio});
      continue;
    }

    // Bisection on log n. The envelope decreases in n, so expand a bracket
    // geometrically from n = 1 until it straddles the target.
    auto f = [&](double log_n) { return eval_dense_envelope(params, m, std::exp(log_n)) - target; };
    double lo = -1.0, hi = 1.0;
    while (f(lo) <= 0.0 && lo > -700.0) lo = std::max(2.0 * lo, -700.0);
    while (f(hi) > 0.0 && hi < 700.0) hi = std::min(2.0 * hi, 700.0);
    if (f(lo) <= 0.0 || f(hi) > 0.0) {
      out.model_limited.push_back(m);  // root outside the representable range
      continue;
    }
    int it = 0;
    double best = 0.5 * (lo + hi);
    double best_abs = std::abs(f(best));
    while (it < 200 && best_abs > 1e-13 * target && hi - lo > 1e-15 * std::max(1.0, std::abs(lo))) {
      ++it;
      const double mid = 0.5 * (lo + hi);
      const double v = f(mid);
      if (std::abs(v) < best_abs) {
        best = mid;
        best_abs = std::abs(v);
      }
      if (v > 0.0) {
        lo = mid;  // error still above target: need more data
      } else {
        hi = mid;
      }
    }
    const double n = std::exp(best);
    const double core = eval_dense_core(params, m, n);
    out.points.push_back({m, n, eval_dense_envelope(params, m, n), it,
                          core / params.eta < kPowerRegionRatio});
  }
  std::ostringstream note;
  if (!out.model_limited.empty())
    note << out.model_limited.size()
         << " model sizes omitted: their large-data floor is not below the target. ";
  if (method == ContourMethod::kPowerRegion)
    note << "power-region approximation eps = eps0 core / eta; valid only where "
            "power_region_valid is set.";
  out.note = note.str();
  return out;
}

double invert_prune_for_mstar(double eps_np, double target, const PruneJointParams& params) {
  require_positive(eps_np, "eps_np");
  if (!(target > eps_np) || !(target < params.eps_up)) {
    throw InfeasibleError("target " + fmt(target) + " outside (eps_np, eps_up) = (" +
                          fmt(eps_np) + ", " + fmt(params.eps_up) + ")");
  }
  // With r = (target/eps_np)^(2/g) and A'^2 = p'^2 (eps_up/eps_np)^(2/g):
  // m*^2 = (A'^2 - r p'^2) / (r - 1) = p'^2 r expm1(2/g ln(eps_up/target)) / expm1(2/g ln(target/eps_np))
  const double k = 2.0 / params.gamma;
  const double up = std::expm1(k * std::log(params.eps_up / target));
  const double down = std::expm1(k * std::log(target / eps_np));
  const double r = std::exp(k * std::log(target / eps_np));
  const double mstar = params.p_prime * std::sqrt(r * up / down);
  if (!std::isfinite(mstar) || !(mstar > 0.0))
    throw InfeasibleError("target is too close to a plateau for a finite invariant");
  return mstar;
}

EpsNpProvider measured_eps_np(std::vector<double> depths, std::vector<double> widths,
                              std::vector<std::vector<double>> values) {
  if (depths.empty() || widths.empty() || values.size() != depths.size())
    throw DomainError("eps_np table shape does not match its axes");
  for (const auto& row : values)
    if (row.size() != widths.size()) throw DomainError("eps_np table shape does not match its axes");
  for (std::size_t i = 1; i < depths.size(); ++i)
    if (!(depths[i] > depths[i - 1])) throw DomainError("table depths must increase");
  for (std::size_t j = 1; j < widths.size(); ++j)
    if (!(widths[j] > widths[j - 1])) throw DomainError("table widths must increase");
  for (double d : depths) require_positive(d, "table depth");
  for (double w : widths) require_positive(w, "table width");
  for (const auto& row : values)
    for (double v : row) require_positive(v, "table error");

  auto locate = [](const std::vector<double>& axis, double x, std::size_t& i, double& t) {
    if (axis.size() == 1 || x <= axis.front()) {
      i = 0;
      t = 0.0;
      return;
    }
    if (x >= axis.back()) {
      i = axis.size() - 2;
      t = 1.0;
      return;
    }
    i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin()) - 1;
    t = (std::log(x) - std::log(axis[i])) / (std::log(axis[i + 1]) - std::log(axis[i]));
  };
  EpsNpProvider p;
  p.description = "measured table, log-log bilinear interpolation";
  p.eps_np = [depths, widths, values, locate](double l, double w) {
    std::size_t i, j;
    double tl, tw;
    locate(depths, l, i, tl);
    locate(widths, w, j, tw);
    const std::size_t i1 = std::min(i + 1, depths.size() - 1);
    const std::size_t j1 = std::min(j + 1, widths.size() - 1);
    const double v = (1 - tl) * (1 - tw) * std::log(values[i][j]) +
                     tl * (1 - tw) * std::log(values[i1][j]) +
                     (1 - tl) * tw * std::log(values[i][j1]) + tl * tw * std::log(values[i1][j1]);
    return std::exp(v);
  };
  return p;
}

EpsNpProvider modeled_eps_np(const DenseParams& dense,
                             std::function<double(double, double)> model_size, double n,
                             std::string description) {
  require_positive(n, "data size n");
  EpsNpProvider p;
  p.description = std::move(description);
  p.eps_np = [dense, model_size = std::move(model_size), n](double l, double w) {
    return eval_dense_envelope(dense, model_size(l, w), n);
  };
  return p;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  require_positive(lo, "grid lower bound");
  require_positive(hi, "grid upper bound");
  if (count < 1) throw DomainError("grid needs at least one point");
  std::vector<double> out;
  if (count == 1) return {lo};
  // Base-10 exponents keep decade points exact (10^5, not 99999.99999999996).
  const double a = std::log10(lo), step = (std::log10(hi) - a) / (count - 1);
  for (int k = 0; k < count; ++k)
    out.push_back(k == 0 ? lo : k == count - 1 ? hi : std::pow(10.0, a + step * k));
  return out;
}

double resnet_parameter_count(double depth, double width, double density) {
  return depth * width * width * density;
}

namespace {

struct Candidate {
  double depth = 0.0;
  double width = 0.0;
  double density = 0.0;
  double mstar = 0.0;
  double eps_np = 0.0;
  double cost = kInf;
};

Candidate evaluate_member(const EpsNpProvider& family, const PruneJointParams& params,
                          double eps_k, double l, double w) {
  Candidate c;
  c.depth = l;
  c.width = w;
  c.eps_np = family.eps_np(l, w);
  if (!(c.eps_np < eps_k) || !(eps_k < params.eps_up) || c.eps_np > params.eps_up) return c;
  try {
    c.mstar = invert_prune_for_mstar(c.eps_np, eps_k, params);
  } catch (const InfeasibleError&) {
    return c;
  }
  c.density = c.mstar / (std::pow(l, params.phi) * std::pow(w, params.psi));
  if (!(c.density > 0.0) || c.density > 1.0) return c;  // even unpruned misses eps_k
  c.cost = resnet_parameter_count(l, w, c.density);
  return c;
}

}  // namespace

DesignAnswer prune_min_params(const EpsNpProvider& family, const PruneJointParams& params,
                              double eps_k, const PruneSearchDomain& domain) {
  if (domain.depths.empty() || domain.widths.empty())
    throw DomainError("search domain needs at least one depth and one width");
  Candidate best;
  for (double l : domain.depths)
    for (double w : domain.widths) {
      const Candidate c = evaluate_member(family, params, eps_k, l, w);
      if (c.cost < best.cost) best = c;
    }
  if (!std::isfinite(best.cost))
    throw InfeasibleError("no family member in the search domain reaches error " + fmt(eps_k));

  if (domain.refine) {
    const auto [lmin, lmax] = std::minmax_element(domain.depths.begin(), domain.depths.end());
    const auto [wmin, wmax] = std::minmax_element(domain.widths.begin(), domain.widths.end());
    double step_l = domain.depths.size() > 1 ? std::log(*lmax / *lmin) / (domain.depths.size() - 1) : 0.0;
    double step_w = domain.widths.size() > 1 ? std::log(*wmax / *wmin) / (domain.widths.size() - 1) : 0.0;
    while (step_l > 1e-9 || step_w > 1e-9) {
      bool moved = false;
      for (int dl = -1; dl <= 1; ++dl)
        for (int dw = -1; dw <= 1; ++dw) {
          if (dl == 0 && dw == 0) continue;
          const double l = std::clamp(best.depth * std::exp(dl * step_l), *lmin, *lmax);
          const double w = std::clamp(best.width * std::exp(dw * step_w), *wmin, *wmax);
          const Candidate c = evaluate_member(family, params, eps_k, l, w);
          if (c.cost < best.cost * (1.0 - 1e-15)) {
            best = c;
            moved = true;
          }
        }
      if (!moved) {
        step_l *= 0.5;
        step_w *= 0.5;
      }
    }
  }

  DesignAnswer a{DesignKind::kPruneConfig};
  a.inputs = {{"eps_k", eps_k}};
  a.values = {{"depth", best.depth},         {"width", best.width},
              {"density", best.density},     {"m_star", best.mstar},
              {"parameter_count", best.cost}, {"eps_np", best.eps_np}};
  a.achieved_error =
      eval_prune_joint(best.eps_np, best.depth, best.width, best.density, 1.0, params);
  a.residuals = {{"target_relative", rel_residual(a.achieved_error, eps_k)}};
  a.formula = "minimize depth * width^2 * density s.t. joint law(eps_np(depth, width), "
              "m* = depth^phi width^psi density) = eps_k";
  a.note = "eps_np from " + family.description;
  return a;
}

std::vector<DesignAnswer> prune_min_param_envelope(const EpsNpProvider& family,
                                                   const PruneJointParams& params,
                                                   std::span<const double> eps_grid,
                                                   const PruneSearchDomain& domain) {
  std::vector<DesignAnswer> out;
  for (double eps_k : eps_grid) {
    try {
      DesignAnswer a = prune_min_params(family, params, eps_k, domain);
      a.kind = DesignKind::kPruneEnvelope;
      out.push_back(std::move(a));
    } catch (const InfeasibleError& e) {
      DesignAnswer a{DesignKind::kPruneEnvelope};
      a.inputs = {{"eps_k", eps_k}};
      a.feasible = false;
      a.achieved_error = std::numeric_limits<double>::quiet_NaN();
      a.note = e.what();
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace scalelaw
