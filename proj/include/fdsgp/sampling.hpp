#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdsgp/dataset.hpp"
#include "fdsgp/inducing.hpp"

namespace fdsgp {

enum class SamplerKind { kSimpleRandom, kSystematic, kCluster, kWeightedRandom };

/// Short names "rs", "ss", "cs", "wrs".
std::string to_string(SamplerKind kind);
/// Accepts the short names and "simple-random", "systematic", "cluster", "weighted-random".
SamplerKind parse_sampler_kind(const std::string& name);

inline constexpr int kDefaultClusterIterations = 100;

struct SamplerSpec {
  SamplerKind kind = SamplerKind::kSimpleRandom;
  std::uint64_t seed = 0;
  int max_iters = kDefaultClusterIterations;  // cluster only
  int bins = kDefaultWeightBins;              // weighted only, when the data carries no weights
};

/// Reservoir sampling: each index is kept with probability size / n.
InducingSet reservoir_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed);

/// Systematic sampling with stride N / size and a random start in (0, stride].
InducingSet systematic_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed);

/// 0-based indices ceil(start + stride * i) - 1 for i = 0..size-1, stride = n / size.
/// `start` must lie in (0, stride].
std::vector<std::size_t> systematic_indices(std::size_t n, std::size_t size, double start);

/// k-means with k = size on standardized (density, speed), returning the member of each
/// cluster nearest its final centroid.
InducingSet cluster_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed,
                           int max_iters = kDefaultClusterIterations);

/// Sequential draws without replacement, each proportional to the remaining weights, after
/// sorting by ascending density. Empty `weights` uses the dataset's weights if present and
/// compute_weights(data, bins) otherwise.
InducingSet weighted_random_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed,
                                   std::span<const double> weights = {}, int bins = kDefaultWeightBins);

/// Dispatches on spec.kind. Throws std::invalid_argument unless 1 <= size <= n.
InducingSet draw_inducing(const DensitySpeedDataset& data, std::size_t size, const SamplerSpec& spec);

/// One 0-based index per line under the header "index".
void write_indices_csv(std::ostream& out, const InducingSet& inducing);

}  // namespace fdsgp
