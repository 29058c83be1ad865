#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>

#include "fdsgp/dataset.hpp"
#include "fdsgp/gpr.hpp"

namespace fdsgp {

/// Root mean squared error in mph. Throws std::invalid_argument on empty or mismatched input.
double rmse(std::span<const double> observed, std::span<const double> estimated);

struct MapeResult {
  double percent = 0.0;
  std::size_t excluded = 0;  // rows with zero observed speed
};

/// Mean absolute percentage error over rows with non-zero observed speed.
/// Throws DataError when every row is excluded.
MapeResult mape(std::span<const double> observed, std::span<const double> estimated);

/// Two-sided standard normal quantile for a central interval, e.g. 1.96 for 0.95.
double central_z(double level);

/// Fraction of observations with |v - mean| <= z(level) sqrt(predictive_variance).
/// The posterior must have been queried at the observed densities, in order.
double pwci(const GPPosterior& posterior, const DensitySpeedDataset& observed, double level = 0.95);

struct MetricReport {
  double rmse = 0.0;
  double mape = 0.0;  // percent
  double pwci = 0.0;  // fraction
  std::size_t n_points = 0;
  std::size_t mape_excluded = 0;
};

MetricReport evaluate_metrics(const GPPosterior& posterior, const DensitySpeedDataset& observed, double level = 0.95);

inline constexpr double kZ90 = 1.645;
inline constexpr double kZ95 = 1.960;
inline constexpr double kZ99 = 2.576;

/// query_density, mean, variance, predictive_variance, ci90_lo, ci90_hi, ci95_lo, ci95_hi, ci99_lo, ci99_hi.
/// Bands use the predictive variance.
void write_posterior_csv(std::ostream& out, const GPPosterior& posterior);

/// density, speed, probability_density: the Gaussian predictive density of y_* on a speed grid
/// at every query density.
void write_surface_csv(std::ostream& out, const GPPosterior& posterior, std::span<const double> speed_grid);

}  // namespace fdsgp
