#include "scalelaw/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "scalelaw/errors.hpp"
#include "scalelaw/presets.hpp"
#include "scalelaw/rng.hpp"

namespace scalelaw {

namespace {

constexpr std::uint64_t kDenseTag = 1;
constexpr std::uint64_t kPruneTag = 2;
constexpr std::uint64_t kDipTag = 3;
constexpr std::uint64_t kStabilityTag = 4;
constexpr int kStabilityRetries = 20;

void check_noise(const NoiseModel& noise) {
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    throw DomainError("noise sigma must be >= 0");
  if (!(noise.dip_depth >= 0.0 && noise.dip_depth <= 0.05))
    throw DomainError("dip depth must lie in [0, 0.05]");
}

double lognormal_factor(const NoiseModel& noise, std::uint64_t stream) {
  if (noise.kind == NoiseKind::kNone || noise.sigma == 0.0) return 1.0;
  SplitMix64 rng(stream);
  return std::exp(noise.sigma * rng.normal());
}

// Indices into `sorted_desc` (densities, densest first) that receive a dip:
// the densest quarter of the pruned (d < 1) densities, rounded up.
std::size_t dipped_count(std::span<const double> densities) {
  const auto pruned = static_cast<std::size_t>(
      std::count_if(densities.begin(), densities.end(), [](double d) { return d < 1.0; }));
  return (pruned + 3) / 4;
}

}  // namespace

std::vector<DenseMeasurement> generate_dense_grid(const DenseParams& truth,
                                                  std::span<const double> m_scales,
                                                  std::span<const double> n_scales,
                                                  const NoiseModel& noise, int replicates,
                                                  GenerationStats* stats) {
  check_noise(noise);
  if (replicates < 1) throw DomainError("replicates must be at least 1");
  std::vector<DenseMeasurement> out;
  out.reserve(m_scales.size() * n_scales.size() * static_cast<std::size_t>(replicates));
  for (std::size_t i = 0; i < m_scales.size(); ++i) {
    for (std::size_t j = 0; j < n_scales.size(); ++j) {
      const double clean = eval_dense_envelope(truth, m_scales[i], n_scales[j]);
      for (int r = 0; r < replicates; ++r) {
        const auto stream = derive_seed(
            noise.seed, {kDenseTag, i, j, static_cast<std::uint64_t>(r)});
        double e = clean * lognormal_factor(noise, stream);
        if (e > truth.eps0) {
          e = truth.eps0;
          if (stats) ++stats->clamped;
        }
        out.push_back({m_scales[i], n_scales[j], e,
                       replicates > 1 ? std::optional<int>(r) : std::nullopt});
      }
    }
  }
  return out;
}

std::vector<PruneMeasurement> generate_prune_family(const PruneJointParams& truth,
                                                    const EpsNpRule& eps_np_rule,
                                                    std::span<const PruneConfig> configs,
                                                    std::span<const double> densities,
                                                    const NoiseModel& noise,
                                                    int replicates) {
  check_noise(noise);
  if (replicates < 1) throw DomainError("replicates must be at least 1");

  // Rank of each density within the ladder, densest first, for dip placement.
  std::vector<std::size_t> order(densities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return densities[a] > densities[b]; });
  std::vector<bool> dipped(densities.size(), false);
  if (noise.kind == NoiseKind::kDip) {
    std::size_t left = dipped_count(densities);
    for (std::size_t k : order) {
      if (left == 0) break;
      if (densities[k] < 1.0) {
        dipped[k] = true;
        --left;
      }
    }
  }

  std::vector<PruneMeasurement> out;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& cfg = configs[c];
    const double eps_np = eps_np_rule(cfg.depth, cfg.width, cfg.n);
    for (std::size_t k = 0; k < densities.size(); ++k) {
      const double clean =
          eval_prune_joint(eps_np, cfg.depth, cfg.width, densities[k], cfg.n, truth);
      for (int r = 0; r < replicates; ++r) {
        const auto rr = static_cast<std::uint64_t>(r);
        double e = clean * lognormal_factor(noise, derive_seed(noise.seed, {kPruneTag, c, k, rr}));
        if (dipped[k] && noise.dip_depth > 0.0) {
          SplitMix64 rng(derive_seed(noise.seed, {kDipTag, c, k, rr}));
          e *= 1.0 - rng.uniform(0.0, noise.dip_depth);
        }
        out.push_back({cfg.depth, cfg.width, densities[k], cfg.n, e, eps_np,
                       replicates > 1 ? std::optional<int>(r) : std::nullopt});
      }
    }
  }
  return out;
}

std::vector<double> imp_ladder(int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(std::pow(0.8, i));
  return out;
}

std::vector<double> geometric_scales(double base, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(std::pow(base, -k));
  return out;
}

void attach_measured_eps_np(std::vector<PruneMeasurement>& records) {
  using Key = std::tuple<double, double, double>;
  std::map<Key, std::pair<double, int>> unpruned;
  for (const auto& r : records) {
    if (r.density == 1.0) {
      auto& acc = unpruned[{r.depth, r.width, r.n}];
      acc.first += r.error;
      acc.second += 1;
    }
  }
  for (auto& r : records) {
    const auto it = unpruned.find({r.depth, r.width, r.n});
    if (it == unpruned.end()) {
      std::ostringstream os;
      os << "group (depth=" << r.depth << ", width_scale=" << r.width << ", n=" << r.n
         << ") has no density-1 record to anchor its unpruned error";
      throw DomainError(os.str());
    }
    r.eps_np = it->second.first / it->second.second;
  }
}

std::vector<PruneConfig> cifar_like_configs() {
  std::vector<PruneConfig> out;
  for (double l : {8.0, 14.0, 20.0, 26.0, 50.0, 98.0})
    for (int k = -4; k <= 2; ++k)
      for (double n : {1.0, 0.5, 0.25, 0.125}) out.push_back({l, std::ldexp(1.0, k), n});
  return out;
}

PruneJointParams cifar_like_prune_truth() { return {0.9, 1.2, 0.003, 0.8, 1.6}; }

EpsNpRule dense_eps_np_rule(const DenseParams& dense,
                            std::function<double(double, double)> model_size) {
  return [dense, model_size = std::move(model_size)](double l, double w, double n) {
    return eval_dense_envelope(dense, model_size(l, w), n);
  };
}

EpsNpRule cifar_like_eps_np_rule() {
  return dense_eps_np_rule(find_preset("CIFAR10").params,
                           [](double l, double w) { return l * w * w / 20.0; });
}

StabilityPoint stability_experiment(std::span<const PruneMeasurement> data,
                                    std::size_t sample_size, SampleMode mode, int repeats,
                                    const FitConfig& config) {
  if (repeats < 2) throw DomainError("stability experiment needs at least 2 repeats");

  // Units: single records, or groups of records sharing (depth, width, n).
  std::vector<std::vector<std::size_t>> units;
  if (mode == SampleMode::kNetworks) {
    for (std::size_t i = 0; i < data.size(); ++i) units.push_back({i});
  } else {
    std::map<std::tuple<double, double, double>, std::size_t> index;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto [it, inserted] =
          index.emplace(std::make_tuple(data[i].depth, data[i].width, data[i].n), units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  }
  if (sample_size < 1 || sample_size > units.size()) {
    std::ostringstream os;
    os << "sample size " << sample_size << " outside [1, " << units.size() << "]";
    throw DomainError(os.str());
  }

  StabilityPoint point;
  point.sample_size = sample_size;
  point.repeats = repeats;
  for (int rep = 0; rep < repeats; ++rep) {
    bool done = false;
    for (int attempt = 0; attempt < kStabilityRetries && !done; ++attempt) {
      SplitMix64 rng(derive_seed(config.seed, {kStabilityTag, sample_size,
                                               static_cast<std::uint64_t>(rep),
                                               static_cast<std::uint64_t>(attempt)}));
      std::vector<std::size_t> pick(units.size());
      std::iota(pick.begin(), pick.end(), 0);
      for (std::size_t i = 0; i < sample_size; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(units.size() - i));
        std::swap(pick[i], pick[j]);
      }
      pick.resize(sample_size);
      std::sort(pick.begin(), pick.end());
      std::vector<PruneMeasurement> sample;
      for (std::size_t u : pick)
        for (std::size_t i : units[u]) sample.push_back(data[i]);
      try {
        const FitReport fit = fit_prune_joint(sample, config);
        const FitReport full =
            evaluate_fit(std::get<PruneJointParams>(fit.params), data);
        point.mus.push_back(full.mu);
        point.sigmas.push_back(full.sigma);
        done = true;
      } catch (const IllPosedError&) {
        // draw again
      }
    }
    if (!done) ++point.failed;
  }
  const Moments mu = moments(point.mus);
  const Moments sg = moments(point.sigmas);
  point.mu_mean = mu.mean;
  point.mu_std = mu.stddev;
  point.sigma_mean = sg.mean;
  point.sigma_std = sg.stddev;
  return point;
}

}  // namespace scalelaw
