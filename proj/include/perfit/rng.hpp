#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace perfit::rng {

// Generator identity stamped into configs and reports. Bump the version if
// any draw path below changes; seeds are only portable within one version.
inline constexpr const char* kAlgorithmName = "splitmix64-mt19937_64-boxmuller";
inline constexpr int kAlgorithmVersion = 1;

// Seed streams for derive_seed. Keeps independent parts of a run on
// independent substreams so partial reruns reproduce exactly.
inline constexpr std::uint64_t kStreamBank = 1;
inline constexpr std::uint64_t kStreamHuman = 2;
inline constexpr std::uint64_t kStreamAgent = 3;
inline constexpr std::uint64_t kStreamMix = 4;
inline constexpr std::uint64_t kStreamRun = 5;

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic (master, stream, index) -> seed expansion.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// mt19937_64 with fixed, platform-independent draw mappings. std::*_distribution
// is not bit-specified across standard libraries, so the mappings live here.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1), 53-bit mantissa
  double uniform01();

  // one draw consumes exactly two engine words (Box-Muller, no caching)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  double lognormal(double meanlog, double sdlog);

  bool bernoulli(double p) { return uniform01() < p; }

  // unbiased integer in [0, n), rejection sampled
  std::uint64_t below(std::uint64_t n);

private:
  std::mt19937_64 engine_;
};

// k distinct indices from [0, n), ascending. Partial Fisher-Yates then sort.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace perfit::rng
