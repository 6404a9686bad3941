#pragma once

// Seeded synthetic landscapes and pruning families generated from known
// parameters, plus the resampling stability experiment. Generation is a pure
// function of (truth, grid, noise model); every random draw comes from a
// SplitMix64 stream keyed by the noise seed and the record's grid position
// (see rng.hpp).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scalelaw/fit.hpp"
#include "scalelaw/forms.hpp"

namespace scalelaw {

enum class NoiseKind { kNone, kLognormal, kDip };

// kLognormal multiplies each error by exp(sigma * z), z standard normal.
// kDip multiplies the errors at the densest quarter of each curve's pruned
// densities by (1 - u), u uniform in [0, dip_depth]; a positive sigma adds
// lognormal noise on top.
struct NoiseModel {
  NoiseKind kind = NoiseKind::kNone;
  double sigma = 0.0;
  double dip_depth = 0.0;
  std::uint64_t seed = 0;
};

struct GenerationStats {
  std::size_t clamped = 0;  // dense records limited to eps0
};

// Records in m-major order, replicates innermost. The replicate index is set
// when replicates > 1.
std::vector<DenseMeasurement> generate_dense_grid(const DenseParams& truth,
                                                  std::span<const double> m_scales,
                                                  std::span<const double> n_scales,
                                                  const NoiseModel& noise, int replicates,
                                                  GenerationStats* stats = nullptr);

struct PruneConfig {
  double depth;
  double width;
  double n;
};

// Unpruned error of a configuration.
using EpsNpRule = std::function<double(double depth, double width, double n)>;

// Errors are the joint law at every density (including d = 1) times the
// noise. The eps_np field carries the rule's (noise-free) unpruned error.
std::vector<PruneMeasurement> generate_prune_family(const PruneJointParams& truth,
                                                    const EpsNpRule& eps_np_rule,
                                                    std::span<const PruneConfig> configs,
                                                    std::span<const double> densities,
                                                    const NoiseModel& noise,
                                                    int replicates);

// d_i = 0.8^i for i in [0, count).
std::vector<double> imp_ladder(int count);

// Geometric scales base^-k for k in [0, count).
std::vector<double> geometric_scales(double base, int count);

// Replaces each record's eps_np with the mean error of the density-1 records
// of its (depth, width, n) group. Throws DomainError naming the first group
// without a density-1 record.
void attach_measured_eps_np(std::vector<PruneMeasurement>& records);

// A CIFAR-like pruning family: ResNet depths {8, 14, 20, 26, 50, 98}, width
// factors 2^-4 .. 2^2 and data fractions {1, 1/2, 1/4, 1/8} (168
// configurations). Unpruned errors come from the CIFAR10 dense preset with
// model fraction m = depth * width^2 / 20.
std::vector<PruneConfig> cifar_like_configs();
PruneJointParams cifar_like_prune_truth();
EpsNpRule cifar_like_eps_np_rule();

// Maps a dense law to an unpruned-error rule through a parameter-count rule
// (depth, width) -> model size.
EpsNpRule dense_eps_np_rule(const DenseParams& dense,
                            std::function<double(double depth, double width)> model_size);

enum class SampleMode { kNetworks, kConfigurations };

struct StabilityPoint {
  std::size_t sample_size = 0;
  int repeats = 0;
  int failed = 0;  // repeats that stayed ill-posed after the retry budget
  std::vector<double> mus;
  std::vector<double> sigmas;
  double mu_mean = 0.0;
  double mu_std = 0.0;
  double sigma_mean = 0.0;
  double sigma_std = 0.0;
};

// Draws `sample_size` units (single records, or whole (depth, width, n)
// groups) without replacement, fits the joint law to them and measures mu
// and sigma against the full data; repeated `repeats` times. Every repeat
// fits with config.seed, so only the sample varies between repeats.
StabilityPoint stability_experiment(std::span<const PruneMeasurement> data,
                                    std::size_t sample_size, SampleMode mode, int repeats,
                                    const FitConfig& config);

}  // namespace scalelaw
