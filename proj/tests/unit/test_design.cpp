#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "scalelaw/design.hpp"
#include "scalelaw/errors.hpp"
#include "scalelaw/presets.hpp"
#include "scalelaw/rng.hpp"
#include "scalelaw/synthetic.hpp"

using namespace scalelaw;

namespace {

// tests/oracles/design_oracle.py
constexpr double kImageNetMmax = 861694435.1239175482715745;
constexpr double kImageNetNmax = 31054432.40564077502914636;
constexpr double kImageNetContourN = 0.3523005467965161297642661;
constexpr double kImageNetPairN = 7.278434477900218177641958;
constexpr double kImageNetPairM = 5.191320408633689758860874;

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

DenseParams imagenet() { return find_preset("ImageNet").params; }

DenseParams random_dense(SplitMix64& rng) {
  return DenseParams(rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5), rng.log_uniform(1e-2, 10),
                     rng.log_uniform(1e-3, 1), rng.log_uniform(1, 50), rng.uniform(0.5, 1));
}

double residual(const DesignAnswer& a, const char* name) {
  for (const auto& [k, v] : a.residuals)
    if (k == name) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

EpsNpProvider cifar_family() {
  return modeled_eps_np(find_preset("CIFAR10").params,
                        [](double l, double w) { return l * w * w / 20.0; }, 1.0, "CIFAR10 law");
}

}  // namespace

TEST_CASE("max useful model") {
  DenseParams unit(1, 1, 1, 0, 1, 1);
  CHECK(rel_close(max_useful_model(unit, 1000, 10).value("m"), 10000, 1e-14));

  const auto a = max_useful_model(imagenet(), 1.2e6, 10);
  CHECK(rel_close(a.value("m"), kImageNetMmax, 1e-12));
  CHECK(residual(a, "threshold_relative") < 1e-12);
  CHECK(rel_close(a.achieved_error, eval_dense_envelope(imagenet(), a.value("m"), 1.2e6), 1e-15));

  SplitMix64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const DenseParams p = random_dense(rng);
    const auto r = max_useful_model(p, rng.log_uniform(1, 1e8), rng.log_uniform(0.1, 100));
    REQUIRE(residual(r, "threshold_relative") < 1e-12);
  }
}

TEST_CASE("max useful data") {
  // T is the model term over the data term, so unit constants give n = T m.
  DenseParams unit(1, 1, 1, 0, 1, 1);
  CHECK(rel_close(max_useful_data(unit, 1000, 10).value("n"), 10000, 1e-14));

  const auto a = max_useful_data(imagenet(), 25.5e6, 10);
  CHECK(rel_close(a.value("n"), kImageNetNmax, 1e-12));
  CHECK(residual(a, "threshold_relative") < 1e-12);

  SplitMix64 rng(8);
  for (int k = 0; k < 1000; ++k) {
    const DenseParams p = random_dense(rng);
    const auto r = max_useful_data(p, rng.log_uniform(1, 1e8), rng.log_uniform(0.1, 100));
    REQUIRE(residual(r, "threshold_relative") < 1e-12);
  }
}

TEST_CASE("power region flag") {
  DenseParams p(0.5, 0.5, 1, 0, 100, 1);
  CHECK(max_useful_model(p, 1e8, 1).note.rfind("inside", 0) == 0);
  CHECK(max_useful_model(p, 1e-4, 1).note.rfind("outside", 0) == 0);
}

TEST_CASE("optimal compute pair") {
  DenseParams unit(1, 1, 1, 0, 1, 1);
  const auto u = optimal_compute_pair(unit, 1);
  CHECK(rel_close(u.value("n"), 2, 1e-14));
  CHECK(rel_close(u.value("m"), 2, 1e-14));

  const auto a = optimal_compute_pair(imagenet(), 0.5);
  CHECK(rel_close(a.value("n"), kImageNetPairN, 1e-12));
  CHECK(rel_close(a.value("m"), kImageNetPairM, 1e-12));

  CHECK_THROWS_AS(optimal_compute_pair(unit, 0), InfeasibleError);
  CHECK_THROWS_AS(optimal_compute_pair(unit, -1), InfeasibleError);

  SplitMix64 rng(9);
  for (int k = 0; k < 500; ++k) {
    const DenseParams p = random_dense(rng);
    const double c = rng.log_uniform(1e-3, 10);
    const auto r = optimal_compute_pair(p, c);
    REQUIRE(residual(r, "ratio_condition") < 1e-12);
    REQUIRE(residual(r, "contour_relative") < 1e-12);
    // Move along the contour by +-1% in n: m n must grow.
    const double n0 = r.value("n"), m0 = r.value("m");
    for (double f : {0.99, 1.01}) {
      const double n = n0 * f;
      const double model_part = c - std::pow(n, -p.alpha);
      if (!(model_part > 0)) continue;
      const double m = std::pow(model_part / p.b, -1.0 / p.beta);
      REQUIRE(m * n > m0 * n0);
    }
  }
}

TEST_CASE("core for error inverts the envelope") {
  const auto p = imagenet();
  for (double e : {0.2, 0.3, 0.5, 0.9}) {
    const double core = core_for_error(p, e);
    CHECK(rel_close(p.eps0 * core / std::hypot(core, p.eta), e, 1e-14));
  }
  CHECK_THROWS_AS(core_for_error(p, p.eps0), InfeasibleError);
}

TEST_CASE("error contour") {
  const auto p = imagenet();
  const auto c = error_contour(p, 0.30, 1e3, 1e9, 13);
  REQUIRE(c.points.size() == 13);
  for (const auto& q : c.points) {
    CHECK(rel_close(q.error, 0.30, 1e-9));
    CHECK(q.iterations <= 200);
  }
  CHECK(rel_close(c.points[6].n, kImageNetContourN, 1e-9));
  for (std::size_t k = 1; k < c.points.size(); ++k) CHECK(c.points[k].n <= c.points[k - 1].n);

  CHECK_THROWS_AS(error_contour(p, p.eps0, 1, 10, 3), InfeasibleError);
  CHECK_THROWS_AS(error_contour(p, irreducible_error(p).exact, 1, 10, 3), InfeasibleError);

  // Just above the floor: huge sizes, still on target.
  const double target = irreducible_error(p).exact * (1 + 1e-6);
  const auto near = error_contour(p, target, 1e12, 1e30, 7);
  REQUIRE(!near.points.empty());
  for (const auto& q : near.points) {
    CHECK(q.n > 1e6);
    CHECK(rel_close(q.error, target, 1e-9));
  }
}

TEST_CASE("error contour omits model-limited sizes") {
  DenseParams p(0.5, 0.5, 1, 0.01, 1, 1);
  // The n -> infinity floor at m is the envelope of b m^-beta + c_inf.
  const double target = 0.2;
  const auto c = error_contour(p, target, 1e-2, 1e4, 13);
  CHECK(!c.model_limited.empty());
  CHECK(c.points.size() + c.model_limited.size() == 13);
  for (double m : c.model_limited) {
    const double core = p.b * std::pow(m, -p.beta) + p.c_inf;
    CHECK(p.eps0 * core / std::hypot(core, p.eta) >= target);
  }
  for (const auto& q : c.points) CHECK(rel_close(q.error, target, 1e-9));
  CHECK(c.note.find("omitted") != std::string::npos);
}

TEST_CASE("power-region contour") {
  DenseParams p(0.5, 0.5, 1, 0, 100, 1);
  const auto fast = error_contour(p, 0.005, 1e4, 1e8, 5, ContourMethod::kPowerRegion);
  const auto slow = error_contour(p, 0.005, 1e4, 1e8, 5);
  REQUIRE(fast.points.size() == slow.points.size());
  for (std::size_t k = 0; k < fast.points.size(); ++k) {
    CHECK(fast.points[k].power_region_valid);
    CHECK(rel_close(fast.points[k].n, slow.points[k].n, 1e-3));
  }
}

TEST_CASE("invert prune for m*") {
  const PruneJointParams p = cifar_like_prune_truth();
  SplitMix64 rng(11);
  for (int k = 0; k < 10000; ++k) {
    const double eps_np = rng.uniform(0.03, 0.5);
    const double target = rng.uniform(eps_np * (1 + 1e-6), p.eps_up * (1 - 1e-6));
    const double ms = invert_prune_for_mstar(eps_np, target, p);
    REQUIRE(rel_close(eval_prune_at_mstar(eps_np, ms, p), target, 1e-12));
  }
  CHECK_THROWS_AS(invert_prune_for_mstar(0.1, 0.1, p), InfeasibleError);
  CHECK_THROWS_AS(invert_prune_for_mstar(0.1, 0.9, p), InfeasibleError);
  CHECK_THROWS_AS(invert_prune_for_mstar(0.1, 0.05, p), InfeasibleError);
  // Plateau limits.
  CHECK(invert_prune_for_mstar(0.1, 0.1 * (1 + 1e-12), p) > 1e3);
  CHECK(invert_prune_for_mstar(0.1, 0.9 * (1 - 1e-12), p) < 1e-7);
}

TEST_CASE("measured eps_np table") {
  const auto t = measured_eps_np({10, 100}, {1, 4}, {{0.4, 0.1}, {0.2, 0.05}});
  CHECK(rel_close(t.eps_np(10, 1), 0.4, 1e-15));
  CHECK(rel_close(t.eps_np(100, 4), 0.05, 1e-15));
  CHECK(rel_close(t.eps_np(std::sqrt(1000.0), 1), std::sqrt(0.08), 1e-14));
  CHECK(rel_close(t.eps_np(1, 0.5), 0.4, 1e-15));  // clamped
  CHECK_THROWS_AS(measured_eps_np({10, 5}, {1}, {{0.1}, {0.2}}), DomainError);
}

TEST_CASE("prune min params: single member reduces to the density solution") {
  const PruneJointParams p = cifar_like_prune_truth();
  const auto fam = cifar_family();
  PruneSearchDomain dom{{20}, {1}, true};
  const double eps_np = fam.eps_np(20, 1);
  const double target = 0.2;
  const auto a = prune_min_params(fam, p, target, dom);
  const double d = invert_prune_for_mstar(eps_np, target, p) /
                   (std::pow(20.0, p.phi) * std::pow(1.0, p.psi));
  CHECK(rel_close(a.value("density"), d, 1e-14));
  CHECK(rel_close(a.achieved_error, target, 1e-9));
  CHECK_THROWS_AS(prune_min_params(fam, p, eps_np * 0.99, dom), InfeasibleError);
}

TEST_CASE("prune min params matches a brute-force lattice") {
  const PruneJointParams p = cifar_like_prune_truth();
  const auto fam = cifar_family();
  PruneSearchDomain dom{geometric_grid(8, 98, 7), geometric_grid(1.0 / 16, 4, 7), true};
  for (double eps_k : {0.25, 0.12, 0.08}) {
    const auto a = prune_min_params(fam, p, eps_k, dom);
    CHECK(rel_close(a.achieved_error, eps_k, 1e-9));
    CHECK(a.value("density") < 1.0);
    // Lattice over (l, w, d); the optimum must be no worse than the best
    // lattice point and within one lattice step of it.
    const int nl = 60, nw = 60, nd = 600;
    const double step_d = std::pow(1e-4, 1.0 / nd);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= nl; ++i)
      for (int j = 0; j <= nw; ++j) {
        const double l = 8 * std::pow(98.0 / 8, double(i) / nl);
        const double w = std::pow(64.0, double(j) / nw) / 16;
        const double enp = fam.eps_np(l, w);
        for (int k = 0; k <= nd; ++k) {
          const double d = std::pow(step_d, k);
          if (eval_prune_joint(enp, l, w, d, 1, p) > eps_k) break;
          best = std::min(best, l * w * w * d);
        }
      }
    const double cost = a.value("parameter_count");
    CHECK(cost <= best * (1 + 1e-9));
    CHECK(cost >= best / (1.0 / step_d) / 1.1);
  }
}

TEST_CASE("min-parameter envelope") {
  const PruneJointParams p = cifar_like_prune_truth();
  const auto fam = cifar_family();
  PruneSearchDomain dom{geometric_grid(8, 98, 7), geometric_grid(1.0 / 16, 4, 7), true};
  std::vector<double> levels;
  for (double e = 0.06; e < 0.5; e *= 1.15) levels.push_back(e);
  levels.push_back(0.01);  // below every member
  const auto env = prune_min_param_envelope(fam, p, levels, dom);
  REQUIRE(env.size() == levels.size());
  CHECK(!env.back().feasible);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < env.size(); ++k) {
    REQUIRE(env[k].feasible);
    CHECK(env[k].kind == DesignKind::kPruneEnvelope);
    CHECK(env[k].value("density") < 1.0);
    CHECK(env[k].value("parameter_count") <= prev * (1 + 1e-9));
    prev = env[k].value("parameter_count");
  }
}
