#include "scalelaw/least_squares.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scalelaw::lsq {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kInf = std::numeric_limits<double>::infinity();

bool evaluate_residuals(const Problem& problem, std::span<const double> u,
                        std::vector<double>& r) {
  r.assign(problem.num_residuals, 0.0);
  if (!problem.evaluate(u, r, {})) return false;
  return std::all_of(r.begin(), r.end(), [](double x) { return std::isfinite(x); });
}

double condition_of(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  if (!(hi > 0.0) || !(lo > 0.0)) return kInf;
  return hi / lo;
}

}  // namespace

double sum_of_squares(std::span<const double> residuals) {
  double s = 0.0;
  for (double r : residuals) s += r * r;
  return s;
}

bool numeric_jacobian(const Problem& problem, std::span<const double> u,
                      std::vector<double>& jacobian) {
  const std::size_t np = problem.num_params;
  const std::size_t nr = problem.num_residuals;
  std::vector<double> base;
  if (!evaluate_residuals(problem, u, base)) return false;
  jacobian.assign(nr * np, 0.0);
  std::vector<double> shifted(u.begin(), u.end());
  std::vector<double> r;
  for (std::size_t k = 0; k < np; ++k) {
    const double h = 1e-7 * std::max(1.0, std::abs(u[k]));
    shifted[k] = u[k] + h;
    const double step = shifted[k] - u[k];
    if (!evaluate_residuals(problem, shifted, r)) return false;
    for (std::size_t i = 0; i < nr; ++i) jacobian[i * np + k] = (r[i] - base[i]) / step;
    shifted[k] = u[k];
  }
  return true;
}

bool evaluate_with_jacobian(const Problem& problem, std::span<const double> u,
                            std::vector<double>& residuals,
                            std::vector<double>& jacobian) {
  if (!problem.analytic_jacobian) {
    return evaluate_residuals(problem, u, residuals) &&
           numeric_jacobian(problem, u, jacobian);
  }
  residuals.assign(problem.num_residuals, 0.0);
  jacobian.assign(problem.num_residuals * problem.num_params, 0.0);
  if (!problem.evaluate(u, residuals, jacobian)) return false;
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(residuals.begin(), residuals.end(), finite) &&
         std::all_of(jacobian.begin(), jacobian.end(), finite);
}

Result levenberg_marquardt(const Problem& problem, std::vector<double> u0,
                           const Options& options) {
  const std::size_t np = problem.num_params;
  Result result;
  result.u = std::move(u0);
  result.objective = kInf;
  result.condition = kInf;

  std::vector<double> r, jac;
  if (!evaluate_with_jacobian(problem, result.u, r, jac)) return result;
  double f = sum_of_squares(r);
  result.objective = f;

  std::vector<double> trial(np), r_trial;
  double lambda = 1e-3;
  Matrix a(np, np);
  Vector g(np);

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const RowMajorMap j(jac.data(), static_cast<Eigen::Index>(r.size()),
                        static_cast<Eigen::Index>(np));
    const Eigen::Map<const Vector> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    a.noalias() = j.transpose() * j;
    g.noalias() = j.transpose() * rv;

    if (f == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) {
      result.converged = true;
      break;
    }

    const double diag_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    double f_new = kInf;
    while (!accepted) {
      Matrix damped = a;
      for (std::size_t k = 0; k < np; ++k)
        damped(k, k) += lambda * std::max(a(k, k), diag_floor);
      Eigen::LDLT<Matrix> ldlt(damped);
      Vector step = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && step.allFinite()) {
        for (std::size_t k = 0; k < np; ++k) trial[k] = result.u[k] + step[k];
        if (evaluate_residuals(problem, trial, r_trial)) {
          f_new = sum_of_squares(r_trial);
          if (f_new < f) {
            accepted = true;
            break;
          }
        }
      }
      lambda *= 4.0;
      if (lambda > 1e20) break;
    }

    if (!accepted) {
      // No descent direction survives heavy damping: numerically stationary.
      result.converged = true;
      break;
    }

    const double decrease = f - f_new;
    result.u = trial;
    f = f_new;
    result.objective = f;
    lambda = std::max(lambda / 3.0, 1e-20);
    if (!evaluate_with_jacobian(problem, result.u, r, jac)) break;

    if (decrease <= options.objective_tolerance * (f + decrease)) {
      // Confirm with the undamped Gauss-Newton prediction so that a small
      // step caused by heavy damping is not mistaken for convergence.
      const RowMajorMap j2(jac.data(), static_cast<Eigen::Index>(r.size()),
                           static_cast<Eigen::Index>(np));
      const Eigen::Map<const Vector> rv2(r.data(), static_cast<Eigen::Index>(r.size()));
      Matrix a2 = j2.transpose() * j2;
      const Vector g2 = j2.transpose() * rv2;
      const double floor2 = 1e-12 * std::max(a2.diagonal().maxCoeff(), 1e-300);
      for (std::size_t k = 0; k < np; ++k) a2(k, k) += floor2;
      const double predicted = g2.dot(a2.ldlt().solve(g2));
      if (!(predicted > options.objective_tolerance * f)) {
        result.converged = true;
        break;
      }
    }
  }

  if (!jac.empty()) {
    const RowMajorMap j(jac.data(), static_cast<Eigen::Index>(r.size()),
                        static_cast<Eigen::Index>(np));
    result.condition = condition_of(j.transpose() * j);
  }
  return result;
}

Result nelder_mead(const Problem& problem, std::vector<double> u0,
                   const Options& options) {
  const std::size_t np = problem.num_params;
  std::vector<double> r;
  auto objective = [&](const std::vector<double>& u) {
    return evaluate_residuals(problem, u, r) ? sum_of_squares(r) : kInf;
  };

  // Adaptive coefficients for higher dimensions.
  const double dim = static_cast<double>(np);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / dim;
  const double contract = 0.75 - 0.5 / dim;
  const double shrink = 1.0 - 1.0 / dim;

  std::vector<std::vector<double>> simplex(np + 1, u0);
  std::vector<double> values(np + 1);
  for (std::size_t k = 0; k < np; ++k)
    simplex[k + 1][k] += std::abs(u0[k]) > 1e-3 ? 0.05 * std::abs(u0[k]) : 0.05;
  for (std::size_t k = 0; k <= np; ++k) values[k] = objective(simplex[k]);

  Result result;
  const int max_evals = options.max_iterations * static_cast<int>(np + 1) * 4;
  int evals = static_cast<int>(np + 1);
  std::vector<std::size_t> order(np + 1);
  std::vector<double> centroid(np), point(np), point2(np);
  int iterations = 0;
  bool converged = false;

  while (evals < max_evals) {
    ++iterations;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[np - 1];

    const double spread = values[worst] - values[best];
    double size = 0.0;
    for (std::size_t k = 0; k <= np; ++k)
      for (std::size_t d = 0; d < np; ++d)
        size = std::max(size, std::abs(simplex[k][d] - simplex[best][d]));
    if (std::isfinite(spread) &&
        spread <= options.objective_tolerance * std::max(values[best], 1e-300) &&
        size < 1e-10) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= np; ++k) {
      if (k == worst) continue;
      for (std::size_t d = 0; d < np; ++d) centroid[d] += simplex[k][d] / dim;
    }
    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t d = 0; d < np; ++d)
        out[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
    };

    along(reflect, point);
    const double fr = objective(point);
    ++evals;
    if (fr < values[best]) {
      along(expand, point2);
      const double fe = objective(point2);
      ++evals;
      if (fe < fr) {
        simplex[worst] = point2;
        values[worst] = fe;
      } else {
        simplex[worst] = point;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = point;
      values[worst] = fr;
    } else {
      const bool outside = fr < values[worst];
      along(outside ? contract : -contract, point2);
      const double fc = objective(point2);
      ++evals;
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = point2;
        values[worst] = fc;
      } else {
        for (std::size_t k = 0; k <= np; ++k) {
          if (k == best) continue;
          for (std::size_t d = 0; d < np; ++d)
            simplex[k][d] = simplex[best][d] + shrink * (simplex[k][d] - simplex[best][d]);
          values[k] = objective(simplex[k]);
          ++evals;
        }
      }
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  const auto best = static_cast<std::size_t>(best_it - values.begin());
  result.u = simplex[best];
  result.objective = values[best];
  result.iterations = iterations;
  result.converged = converged;
  result.simplex_used = true;
  std::vector<double> jac;
  if (evaluate_with_jacobian(problem, result.u, r, jac)) {
    const RowMajorMap j(jac.data(), static_cast<Eigen::Index>(r.size()),
                        static_cast<Eigen::Index>(np));
    result.condition = condition_of(j.transpose() * j);
  } else {
    result.condition = kInf;
  }
  return result;
}

Result minimize(const Problem& problem, std::vector<double> u0,
                const Options& options) {
  Result lm = levenberg_marquardt(problem, u0, options);
  const bool ill_conditioned = !(lm.condition < 1e12);
  if (lm.converged || !ill_conditioned) return lm;
  Result nm = nelder_mead(problem, std::isfinite(lm.objective) ? lm.u : u0, options);
  if (nm.objective < lm.objective) return nm;
  return lm;
}

}  // namespace scalelaw::lsq
