#include "fdsgp/sampling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "fdsgp/errors.hpp"

namespace fdsgp {

namespace {

void check_size(const DensitySpeedDataset& data, std::size_t size) {
  if (size < 1 || size > data.size()) {
    throw std::invalid_argument("sample size " + std::to_string(size) + " outside [1, " +
                                std::to_string(data.size()) + "]");
  }
}

InducingSet make_set(const DensitySpeedDataset& data, std::vector<std::size_t> indices, SamplerKind kind,
                     std::uint64_t seed) {
  std::sort(indices.begin(), indices.end());
  InducingSet set;
  for (std::size_t i : indices) set.inputs.push_back(data[i].density);
  set.indices = std::move(indices);
  set.provenance = to_string(kind) + " seed=" + std::to_string(seed);
  return set;
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kSimpleRandom:
      return "rs";
    case SamplerKind::kSystematic:
      return "ss";
    case SamplerKind::kCluster:
      return "cs";
    case SamplerKind::kWeightedRandom:
      return "wrs";
  }
  throw std::logic_error("unhandled sampler kind");
}

SamplerKind parse_sampler_kind(const std::string& name) {
  std::string key;
  for (char c : name) key.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "rs" || key == "simple-random" || key == "reservoir") return SamplerKind::kSimpleRandom;
  if (key == "ss" || key == "systematic") return SamplerKind::kSystematic;
  if (key == "cs" || key == "cluster") return SamplerKind::kCluster;
  if (key == "wrs" || key == "weighted-random" || key == "weighted") return SamplerKind::kWeightedRandom;
  throw NotFoundError("unknown sampler '" + name + "' (expected rs, ss, cs or wrs)");
}

InducingSet reservoir_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed) {
  check_size(data, size);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> reservoir(size);
  std::iota(reservoir.begin(), reservoir.end(), std::size_t{0});
  // 1-based i and j as in the textbook algorithm; j is drawn from [1, i] inclusive.
  for (std::size_t i = size + 1; i <= data.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(1, i);
    const std::size_t j = pick(rng);
    if (j <= size) reservoir[j - 1] = i - 1;
  }
  return make_set(data, std::move(reservoir), SamplerKind::kSimpleRandom, seed);
}

std::vector<std::size_t> systematic_indices(std::size_t n, std::size_t size, double start) {
  if (size < 1 || size > n) throw std::invalid_argument("systematic sample size outside [1, n]");
  const double stride = static_cast<double>(n) / static_cast<double>(size);
  if (!(start > 0.0 && start <= stride)) throw std::invalid_argument("systematic start must lie in (0, stride]");
  std::vector<std::size_t> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double pos = std::ceil(start + stride * static_cast<double>(i));
    const auto one_based = std::clamp<std::size_t>(static_cast<std::size_t>(pos), 1, n);
    out.push_back(one_based - 1);
  }
  return out;
}

InducingSet systematic_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed) {
  check_size(data, size);
  std::mt19937_64 rng(seed);
  const double stride = static_cast<double>(data.size()) / static_cast<double>(size);
  // uniform_real_distribution draws from [0, stride); reflecting gives (0, stride].
  const double start = stride - std::uniform_real_distribution<double>(0.0, stride)(rng);
  return make_set(data, systematic_indices(data.size(), size, start), SamplerKind::kSystematic, seed);
}

InducingSet cluster_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed, int max_iters) {
  check_size(data, size);
  if (max_iters < 1) throw std::invalid_argument("cluster sampling needs max_iters >= 1");
  const std::size_t n = data.size();
  const std::size_t k = size;

  // Standardized features.
  std::vector<double> rho = data.densities(), v = data.speeds();
  for (auto* col : {&rho, &v}) {
    const double mean = std::accumulate(col->begin(), col->end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : *col) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    for (double& x : *col) x = (x - mean) / (sd > 0.0 ? sd : 1.0);
  }
  auto dist2 = [&](std::size_t i, double cx, double cy) {
    const double dx = rho[i] - cx, dy = v[i] - cy;
    return dx * dx + dy * dy;
  };

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<double> cx(k), cy(k);
  for (std::size_t c = 0; c < k; ++c) {
    cx[c] = rho[order[c]];
    cy[c] = v[order[c]];
  }

  std::vector<std::size_t> assign(n, k), previous;
  std::vector<std::size_t> counts(k);
  for (int iter = 0; iter < max_iters; ++iter) {
    previous = assign;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = dist2(i, cx[c], cy[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t a : assign) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) continue;
        const double d = dist2(i, cx[assign[i]], cy[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
    }
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[assign[i]] += rho[i];
      sy[assign[i]] += v[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
      cx[c] = sx[c] / static_cast<double>(counts[c]);
      cy[c] = sy[c] / static_cast<double>(counts[c]);
    }
    if (assign == previous) break;
  }

  std::vector<std::size_t> nearest(k, n);
  std::vector<double> nearest_d(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = assign[i];
    const double d = dist2(i, cx[c], cy[c]);
    if (d < nearest_d[c]) {
      nearest_d[c] = d;
      nearest[c] = i;
    }
  }
  return make_set(data, std::move(nearest), SamplerKind::kCluster, seed);
}

InducingSet weighted_random_sample(const DensitySpeedDataset& data, std::size_t size, std::uint64_t seed,
                                   std::span<const double> weights, int bins) {
  check_size(data, size);
  const std::size_t n = data.size();
  std::vector<double> w;
  if (!weights.empty()) {
    w.assign(weights.begin(), weights.end());
  } else if (data.weights()) {
    w = *data.weights();
  } else {
    w = compute_weights(data, bins);
  }
  if (w.size() != n) throw std::invalid_argument("weights length does not match the dataset");
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("weights must be positive and finite");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].density < data[b].density; });
  std::vector<double> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = w[order[i]];

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(size);
  for (std::size_t draw = 0; draw < size; ++draw) {
    const double total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i] <= 0.0) continue;
      pick = i;  // the last positive slot absorbs rounding at the top end
      acc += remaining[i];
      if (u < acc) break;
    }
    chosen.push_back(order[pick]);
    remaining[pick] = 0.0;
  }
  return make_set(data, std::move(chosen), SamplerKind::kWeightedRandom, seed);
}

InducingSet draw_inducing(const DensitySpeedDataset& data, std::size_t size, const SamplerSpec& spec) {
  switch (spec.kind) {
    case SamplerKind::kSimpleRandom:
      return reservoir_sample(data, size, spec.seed);
    case SamplerKind::kSystematic:
      return systematic_sample(data, size, spec.seed);
    case SamplerKind::kCluster:
      return cluster_sample(data, size, spec.seed, spec.max_iters);
    case SamplerKind::kWeightedRandom:
      return weighted_random_sample(data, size, spec.seed, {}, spec.bins);
  }
  throw std::logic_error("unhandled sampler kind");
}

void write_indices_csv(std::ostream& out, const InducingSet& inducing) {
  out << "index\n";
  for (std::size_t i : inducing.indices) out << i << '\n';
}

}  // namespace fdsgp
