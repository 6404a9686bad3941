#pragma once

// Closed-form error landscapes: the dense (model size x data size) envelope
// law and the rational density law for iteratively pruned networks.
//
// All functions here are pure and thread-safe.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scalelaw {

enum class Eps0Mode { kFixedFromClasses, kFreeParameter };

// Random-guess error of a balanced classifier over `classes` labels.
double eps0_from_classes(int classes);

// Parameters of the dense envelope law. The data-term coefficient is fixed
// to 1 and therefore not stored.
struct DenseParams {
  double alpha;  // data exponent
  double beta;   // model exponent
  double b;      // model-term coefficient
  double c_inf;  // asymptotic core constant
  double eta;    // transition pole
  double eps0;   // random-guess error level
  Eps0Mode eps0_mode = Eps0Mode::kFreeParameter;

  // Throws DomainError unless alpha, beta, c_inf >= 0 and b, eta, eps0 > 0.
  DenseParams(double alpha, double beta, double b, double c_inf, double eta,
              double eps0, Eps0Mode mode = Eps0Mode::kFreeParameter);

  static DenseParams with_classes(double alpha, double beta, double b,
                                  double c_inf, double eta, int classes);
};

struct PruneParams {
  double eps_up;  // high-error plateau
  double gamma;   // power-law slope
  double p;       // transition density

  PruneParams(double eps_up, double gamma, double p);
};

struct PruneJointParams {
  double eps_up;
  double gamma;
  double p_prime;  // transition value of the invariant
  double phi;      // depth exponent
  double psi;      // width exponent

  PruneJointParams(double eps_up, double gamma, double p_prime, double phi,
                   double psi);
};

struct DenseMeasurement {
  double m;
  double n;
  double error;
  std::optional<int> replicate;
};

struct PruneMeasurement {
  double depth;
  double width;
  double density;
  double n;
  double error;
  double eps_np;  // error of the unpruned (density 1) member of this group
  std::optional<int> replicate;
};

// n^-alpha + b m^-beta + c_inf
double eval_dense_core(const DenseParams& params, double m, double n);

// eps0 * |core / (core - i eta)|
double eval_dense_envelope(const DenseParams& params, double m, double n);

struct IrreducibleError {
  double exact;        // eps0 c_inf / sqrt(c_inf^2 + eta^2)
  double first_order;  // eps0 c_inf / eta, valid when c_inf << eta
};
IrreducibleError irreducible_error(const DenseParams& params);

// Rational density law evaluated in real arithmetic.
double eval_prune_single(double eps_np, double d, const PruneParams& params);

// Same law evaluated as the gamma-th power of a complex modulus.
double eval_prune_single_complex(double eps_np, double d,
                                 const PruneParams& params);

// l^phi * w^psi * d
double invariant_mstar(double l, double w, double d, double phi, double psi);

// Joint density/depth/width law. `n` only enters through eps_np and is
// accepted for signature symmetry with the measurements.
double eval_prune_joint(double eps_np, double l, double w, double d, double n,
                        const PruneJointParams& params);

// Joint law evaluated directly at a given invariant value m*.
double eval_prune_at_mstar(double eps_np, double mstar,
                           const PruneJointParams& params);

// b_x d^-beta_x + eps_np - b_x: the dense-law shape pinned to eps_np at d = 1.
double eval_dense_adapted_density(double b_x, double beta_x, double eps_np,
                                  double d);

// The rational law with the upper transition dropped (d >> p regime).
double eval_prune_lower_transition(double eps_np, double d,
                                   const PruneParams& params);

struct CriteriaReport {
  bool random_guess_limit = true;  // approaches eps0 as m -> 0 or n -> 0
  bool irreducible_limit = true;   // approaches the exact irreducible error
  bool monotone = true;            // non-increasing along both grid axes
  bool finite = true;              // finite and inside (0, eps0] everywhere
  std::vector<std::string> violations;

  bool all_pass() const {
    return random_guess_limit && irreducible_limit && monotone && finite;
  }
};

// Numeric check of the qualitative criteria on a grid with at least three
// scales per axis. Never throws for valid grids; violations are reported.
CriteriaReport validate_criteria(const DenseParams& params,
                                 std::span<const double> m_scales,
                                 std::span<const double> n_scales);

namespace detail {

// Kernels shared with the fitter, which evaluates them in extended precision.

template <typename T>
T dense_core(T alpha, T beta, T b, T c_inf, T m, T n) {
  using std::pow;
  return pow(n, -alpha) + b * pow(m, -beta) + c_inf;
}

template <typename T>
T dense_envelope_from_core(T core, T eta, T eps0) {
  using std::hypot;
  return eps0 * core / hypot(core, eta);
}

// eps_np * ((x^2 + A^2) / (x^2 + p^2))^(gamma/2), A = p (eps_up/eps_np)^(1/gamma)
// Squares are taken after scaling by the largest magnitude so that neither
// tiny nor huge invariants overflow.
template <typename T>
T rational_density(T eps_np, T x, T eps_up, T gamma, T p) {
  using std::max;
  using std::pow;
  const T a = p * pow(eps_up / eps_np, T(1) / gamma);
  const T s = max(x, max(a, p));
  const T xs = x / s, as = a / s, ps = p / s;
  return eps_np * pow((xs * xs + as * as) / (xs * xs + ps * ps), gamma / T(2));
}

}  // namespace detail

}  // namespace scalelaw
