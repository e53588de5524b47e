#pragma once

// Seeded Monte Carlo for x+ = A x + B w under Gaussian noise strategies.
//
// Random numbers come from a counter-based SplitMix64 generator: draw i of a
// stream with seed s is mix64(s + (i + 1) * 0x9E3779B97F4A7C15). Uniforms use
// the top 53 bits, ((x >> 11) + 0.5) * 2^-53, and normals use the Box-Muller
// transform on consecutive uniform pairs. Samples are split into a fixed
// number of shards with derived seeds, so results do not depend on the
// number of threads.

#include <cstdint>
#include <optional>
#include <vector>

#include "entropy_bridge/bridge.hpp"

namespace entropy_bridge {

std::uint64_t mix64(std::uint64_t z);

/// Seed of shard `shard` of a stream with seed `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t shard);

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on (0, 1).
  double next_uniform();
  double next_normal();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<double> normal_stream(std::uint64_t seed, std::size_t count);

/// Two-component initial law with equal weights
/// N(alpha +- offset * direction, Sigma - offset^2 direction direction^T),
/// matching the moments of the Gaussian initial law.
struct InitialMixture {
  double offset = 0.0;
  Vector direction;
};

struct SimConfig {
  long long samples = 100000;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency, capped by ENTROPY_BRIDGE_THREADS.
  int threads = 0;
  /// Fixed partition of the sample index space.
  int shards = 64;
};

struct MomentReport {
  long long samples = 0;
  Vector mean;
  Vector mean_se;
  Matrix cov;
  /// Normal-theory standard errors of the covariance entries.
  Matrix cov_se;
  Vector initial_mean;
  Matrix initial_cov;
  /// Sample mean of the log density ratio of the noise word against N(0, I).
  double supply = 0.0;
  double supply_se = 0.0;
};

/// Threads to use when the caller asks for `requested` (0 = automatic).
int resolve_threads(int requested);

/// Draws X_0 from `initial` (or the mixture), the noise word from `strategy`,
/// and reports the moments of X_t and the empirical supply.
MomentReport simulate(const LinearSystem& sys, const NoiseStrategy& strategy,
                      const GaussianDist& initial, const SimConfig& config,
                      const std::optional<InitialMixture>& mixture =
                          std::nullopt);

}  // namespace entropy_bridge
