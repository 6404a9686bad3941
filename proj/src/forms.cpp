#include "scalelaw/forms.hpp"

#include <algorithm>
#include <complex>
#include <sstream>

#include "scalelaw/errors.hpp"

namespace scalelaw {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

void require_scales(double m, double n) {
  require(m > 0.0 && std::isfinite(m), "model size must be positive and finite");
  require(n > 0.0 && std::isfinite(n), "data size must be positive and finite");
}

void require_density(double d) {
  require(d > 0.0 && d <= 1.0, "density must lie in (0, 1]");
}

void require_plateaus(double eps_np, double eps_up) {
  require(eps_np > 0.0, "unpruned error must be positive");
  if (eps_up < eps_np) {
    std::ostringstream os;
    os << "high-error plateau " << eps_up << " is below the unpruned error "
       << eps_np;
    throw DomainError(os.str());
  }
}

}  // namespace

double eps0_from_classes(int classes) {
  require(classes >= 2, "a classifier needs at least two classes");
  return static_cast<double>(classes - 1) / static_cast<double>(classes);
}

DenseParams::DenseParams(double alpha_, double beta_, double b_, double c_inf_,
                         double eta_, double eps0_, Eps0Mode mode)
    : alpha(alpha_), beta(beta_), b(b_), c_inf(c_inf_), eta(eta_), eps0(eps0_),
      eps0_mode(mode) {
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be >= 0");
  require(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
  require(b > 0.0 && std::isfinite(b), "b must be > 0");
  require(c_inf >= 0.0 && std::isfinite(c_inf), "c_inf must be >= 0");
  require(eta > 0.0 && std::isfinite(eta), "eta must be > 0");
  require(eps0 > 0.0 && std::isfinite(eps0), "eps0 must be > 0");
}

DenseParams DenseParams::with_classes(double alpha, double beta, double b,
                                      double c_inf, double eta, int classes) {
  return DenseParams(alpha, beta, b, c_inf, eta, eps0_from_classes(classes),
                     Eps0Mode::kFixedFromClasses);
}

PruneParams::PruneParams(double eps_up_, double gamma_, double p_)
    : eps_up(eps_up_), gamma(gamma_), p(p_) {
  require(eps_up > 0.0 && std::isfinite(eps_up), "eps_up must be > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be > 0");
  require(p > 0.0 && std::isfinite(p), "p must be > 0");
}

PruneJointParams::PruneJointParams(double eps_up_, double gamma_,
                                   double p_prime_, double phi_, double psi_)
    : eps_up(eps_up_), gamma(gamma_), p_prime(p_prime_), phi(phi_), psi(psi_) {
  require(eps_up > 0.0 && std::isfinite(eps_up), "eps_up must be > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be > 0");
  require(p_prime > 0.0 && std::isfinite(p_prime), "p_prime must be > 0");
  require(std::isfinite(phi) && std::isfinite(psi),
          "phi and psi must be finite");
}

// Both dense evaluations run in extended precision and round once, so that
// generated landscapes carry no more than half an ulp of evaluation error.
using ld = long double;

double eval_dense_core(const DenseParams& params, double m, double n) {
  require_scales(m, n);
  return static_cast<double>(detail::dense_core<ld>(
      params.alpha, params.beta, params.b, params.c_inf, m, n));
}

double eval_dense_envelope(const DenseParams& params, double m, double n) {
  require_scales(m, n);
  const ld core = detail::dense_core<ld>(params.alpha, params.beta, params.b,
                                         params.c_inf, m, n);
  if (std::isinf(core)) return params.eps0;
  return static_cast<double>(
      detail::dense_envelope_from_core<ld>(core, params.eta, params.eps0));
}

IrreducibleError irreducible_error(const DenseParams& params) {
  return {params.eps0 * params.c_inf / std::hypot(params.c_inf, params.eta),
          params.eps0 * params.c_inf / params.eta};
}

double eval_prune_single(double eps_np, double d, const PruneParams& params) {
  require_density(d);
  require_plateaus(eps_np, params.eps_up);
  return detail::rational_density(eps_np, d, params.eps_up, params.gamma,
                                  params.p);
}

double eval_prune_single_complex(double eps_np, double d,
                                 const PruneParams& params) {
  require_density(d);
  require_plateaus(eps_np, params.eps_up);
  const double a =
      params.p * std::pow(params.eps_up / eps_np, 1.0 / params.gamma);
  const std::complex<double> num(d, -a);
  const std::complex<double> den(d, -params.p);
  return eps_np * std::pow(std::abs(num / den), params.gamma);
}

double invariant_mstar(double l, double w, double d, double phi, double psi) {
  require(l > 0.0, "depth must be positive");
  require(w > 0.0, "width scale must be positive");
  require_density(d);
  return std::pow(l, phi) * std::pow(w, psi) * d;
}

double eval_prune_at_mstar(double eps_np, double mstar,
                           const PruneJointParams& params) {
  require(mstar > 0.0, "invariant must be positive");
  require_plateaus(eps_np, params.eps_up);
  return detail::rational_density(eps_np, mstar, params.eps_up, params.gamma,
                                  params.p_prime);
}

double eval_prune_joint(double eps_np, double l, double w, double d,
                        double /*n*/, const PruneJointParams& params) {
  return eval_prune_at_mstar(
      eps_np, invariant_mstar(l, w, d, params.phi, params.psi), params);
}

double eval_dense_adapted_density(double b_x, double beta_x, double eps_np,
                                  double d) {
  require(d > 0.0, "density must be positive");
  require(b_x > 0.0, "b_x must be positive");
  return b_x * std::pow(d, -beta_x) + eps_np - b_x;
}

double eval_prune_lower_transition(double eps_np, double d,
                                   const PruneParams& params) {
  require_density(d);
  require_plateaus(eps_np, params.eps_up);
  const double a =
      params.p * std::pow(params.eps_up / eps_np, 1.0 / params.gamma);
  const double ratio = a / d;
  return eps_np * std::pow(1.0 + ratio * ratio, params.gamma / 2.0);
}

CriteriaReport validate_criteria(const DenseParams& params,
                                 std::span<const double> m_scales,
                                 std::span<const double> n_scales) {
  if (m_scales.size() < 3 || n_scales.size() < 3)
    throw DomainError("criteria grid needs at least 3 scales per axis");
  for (double m : m_scales) require(m > 0.0, "grid scales must be positive");
  for (double n : n_scales) require(n > 0.0, "grid scales must be positive");

  std::vector<double> ms(m_scales.begin(), m_scales.end());
  std::vector<double> ns(n_scales.begin(), n_scales.end());
  std::sort(ms.begin(), ms.end());
  std::sort(ns.begin(), ns.end());

  CriteriaReport report;
  auto violate = [&report](bool& flag, std::string msg) {
    flag = false;
    report.violations.push_back(std::move(msg));
  };

  // C5: finite, bounded, monotone along both axes.
  for (std::size_t i = 0; i < ms.size(); ++i) {
    for (std::size_t j = 0; j < ns.size(); ++j) {
      const double e = eval_dense_envelope(params, ms[i], ns[j]);
      if (!std::isfinite(e) || e <= 0.0 || e > params.eps0) {
        std::ostringstream os;
        os << "value " << e << " outside (0, eps0] at m=" << ms[i]
           << " n=" << ns[j];
        violate(report.finite, os.str());
      }
      if (i > 0 && e > eval_dense_envelope(params, ms[i - 1], ns[j])) {
        std::ostringstream os;
        os << "error increases with m at m=" << ms[i] << " n=" << ns[j];
        violate(report.monotone, os.str());
      }
      if (j > 0 && e > eval_dense_envelope(params, ms[i], ns[j - 1])) {
        std::ostringstream os;
        os << "error increases with n at m=" << ms[i] << " n=" << ns[j];
        violate(report.monotone, os.str());
      }
    }
  }

  // C1: shrinking either axis below the grid drives the error to eps0. The
  // descent continues by decades until the value settles.
  constexpr double kLimitTol = 1e-3;
  auto approaches = [](auto&& value_at, double target, double tol) {
    for (int decade = 10; decade <= 300; decade += 10) {
      const double v = value_at(decade);
      if (!std::isfinite(v)) return false;
      if (std::abs(v - target) <= tol * target) return true;
    }
    return false;
  };
  for (double n : ns) {
    const bool ok = approaches(
        [&](int k) {
          return eval_dense_envelope(params, ms.front() * std::pow(10.0, -k), n);
        },
        params.eps0, kLimitTol);
    if (!ok) {
      std::ostringstream os;
      os << "no approach to eps0 as m -> 0 at n=" << n;
      violate(report.random_guess_limit, os.str());
    }
  }
  for (double m : ms) {
    const bool ok = approaches(
        [&](int k) {
          return eval_dense_envelope(params, m, ns.front() * std::pow(10.0, -k));
        },
        params.eps0, kLimitTol);
    if (!ok) {
      std::ostringstream os;
      os << "no approach to eps0 as n -> 0 at m=" << m;
      violate(report.random_guess_limit, os.str());
    }
  }

  // C4: growing both axes drives the error to the irreducible limit.
  const double floor = irreducible_error(params).exact;
  const double floor_tol = floor > 0.0 ? kLimitTol : kLimitTol * params.eps0;
  const bool reaches = [&] {
    for (int k = 10; k <= 300; k += 10) {
      const double scale = std::pow(10.0, k);
      const double v =
          eval_dense_envelope(params, ms.back() * scale, ns.back() * scale);
      if (!std::isfinite(v) || v < floor * (1.0 - 1e-12)) return false;
      const double gap = v - floor;
      if (floor > 0.0 ? gap <= floor_tol * floor : gap <= floor_tol) return true;
    }
    return false;
  }();
  if (!reaches) violate(report.irreducible_limit, "no approach to the irreducible error");

  return report;
}

}  // namespace scalelaw
