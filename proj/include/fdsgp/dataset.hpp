#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fdsgp {

/// One loop-detector observation: density in veh/mi, speed in mph.
struct DensitySpeedPair {
  double density = 0.0;
  double speed = 0.0;
};

/// Immutable, ordered set of density-speed observations with optional
/// per-pair positive weights. Construction validates every invariant, so a
/// live object is always finite, non-negative, and weight-consistent.
class DensitySpeedDataset {
 public:
  DensitySpeedDataset() = default;
  explicit DensitySpeedDataset(std::vector<DensitySpeedPair> pairs,
                               std::optional<std::vector<double>> weights = std::nullopt,
                               std::string source_label = {});

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<DensitySpeedPair>& pairs() const { return pairs_; }
  const DensitySpeedPair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::optional<std::vector<double>>& weights() const { return weights_; }
  const std::string& source_label() const { return source_label_; }

  std::vector<double> densities() const;
  std::vector<double> speeds() const;

  /// Rows at `indices`, in the given order, carrying weights along.
  DensitySpeedDataset subset(std::span<const std::size_t> indices) const;
  DensitySpeedDataset with_weights(std::vector<double> weights) const;

 private:
  std::vector<DensitySpeedPair> pairs_;
  std::optional<std::vector<double>> weights_;
  std::string source_label_;
};

struct CsvColumns {
  std::string density = "density";
  std::string speed = "speed";
};

/// Reads a header-led CSV. Rows keep file order. Any malformed, missing,
/// negative, or non-finite value aborts the load with a DataError naming
/// every offending line (1-based, header is line 1).
DensitySpeedDataset load_csv(const std::string& path, const CsvColumns& columns = {});
DensitySpeedDataset parse_csv(std::istream& in, const CsvColumns& columns = {},
                              const std::string& label = {});
void write_csv(std::ostream& out, const DensitySpeedDataset& data, const CsvColumns& columns = {});

inline constexpr int kDefaultWeightBins = 50;

/// Bin-inverse weights: `bins` equal-width density bins over [min, max];
/// w_i = (mean occupied-bin count) / (count of i's bin), then rescaled to
/// mean exactly 1. Over-populated density ranges are down-weighted.
std::vector<double> compute_weights(const DensitySpeedDataset& data, int bins = kDefaultWeightBins);
void write_weights_csv(std::ostream& out, std::span<const double> weights);

/// Seeded shuffle; train gets floor(n * train_fraction) rows. Both parts keep
/// the original row order.
std::pair<DensitySpeedDataset, DensitySpeedDataset> train_test_split(
    const DensitySpeedDataset& data, std::uint64_t seed, double train_fraction);

}  // namespace fdsgp
