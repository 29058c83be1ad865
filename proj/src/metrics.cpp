#include "fdsgp/metrics.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "fdsgp/errors.hpp"
#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

namespace {

void check_pair(std::span<const double> observed, std::span<const double> estimated) {
  if (observed.size() != estimated.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(observed.size()) + " observed vs " +
                                std::to_string(estimated.size()) + " estimated");
  }
  if (observed.empty()) throw std::invalid_argument("metrics need at least one point");
}

}  // namespace

double rmse(std::span<const double> observed, std::span<const double> estimated) {
  check_pair(observed, estimated);
  double ss = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) ss += (observed[i] - estimated[i]) * (observed[i] - estimated[i]);
  return std::sqrt(ss / static_cast<double>(observed.size()));
}

MapeResult mape(std::span<const double> observed, std::span<const double> estimated) {
  check_pair(observed, estimated);
  MapeResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == 0.0) {
      ++r.excluded;
      continue;
    }
    sum += std::abs((observed[i] - estimated[i]) / observed[i]);
  }
  const std::size_t used = observed.size() - r.excluded;
  if (used == 0) throw DataError("MAPE undefined: every observed speed is zero");
  r.percent = 100.0 * sum / static_cast<double>(used);
  return r;
}

double central_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
}

double pwci(const GPPosterior& posterior, const DensitySpeedDataset& observed, double level) {
  if (posterior.size() != observed.size()) {
    throw std::invalid_argument("posterior has " + std::to_string(posterior.size()) + " points, data has " +
                                std::to_string(observed.size()));
  }
  if (observed.empty()) throw std::invalid_argument("coverage needs at least one point");
  const double z = central_z(level);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (std::abs(observed[i].speed - posterior.mean[i]) <= z * std::sqrt(posterior.predictive_variance[i])) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(observed.size());
}

MetricReport evaluate_metrics(const GPPosterior& posterior, const DensitySpeedDataset& observed, double level) {
  const auto speeds = observed.speeds();
  MetricReport report;
  report.rmse = rmse(speeds, posterior.mean);
  const MapeResult m = mape(speeds, posterior.mean);
  report.mape = m.percent;
  report.mape_excluded = m.excluded;
  report.pwci = pwci(posterior, observed, level);
  report.n_points = observed.size();
  return report;
}

void write_posterior_csv(std::ostream& out, const GPPosterior& posterior) {
  out << "query_density,mean,variance,predictive_variance,ci90_lo,ci90_hi,ci95_lo,ci95_hi,ci99_lo,ci99_hi\n";
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const double m = posterior.mean[i];
    const double sd = std::sqrt(posterior.predictive_variance[i]);
    out << format_double(posterior.query_densities[i]) << ',' << format_double(m) << ','
        << format_double(posterior.variance[i]) << ',' << format_double(posterior.predictive_variance[i]);
    for (double z : {kZ90, kZ95, kZ99}) out << ',' << format_double(m - z * sd) << ',' << format_double(m + z * sd);
    out << '\n';
  }
}

void write_surface_csv(std::ostream& out, const GPPosterior& posterior, std::span<const double> speed_grid) {
  out << "density,speed,probability_density\n";
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const double var = posterior.predictive_variance[i];
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
    for (double v : speed_grid) {
      const double d = v - posterior.mean[i];
      out << format_double(posterior.query_densities[i]) << ',' << format_double(v) << ','
          << format_double(norm * std::exp(-0.5 * d * d / var)) << '\n';
    }
  }
}

}  // namespace fdsgp
