#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fdsgp/dataset.hpp"
#include "fdsgp/fd_models.hpp"
#include "fdsgp/kernels.hpp"

namespace fdsgp {

struct GPConfig {
  KernelParams kernel;
  double noise_variance = 1.0;  // sigma_eps^2
  std::optional<FDModel> mean_function;  // zero mean when empty

  void validate() const;
  /// m(x) at each density; zeros without a mean function.
  Eigen::VectorXd prior_mean(std::span<const double> densities) const;
};

/// Latent and predictive moments at a list of query densities.
struct GPPosterior {
  std::vector<double> query_densities;
  std::vector<double> mean;
  std::vector<double> variance;             // latent f_*
  std::vector<double> predictive_variance;  // y_* = f_* + noise

  std::size_t size() const { return mean.size(); }
};

/// Exact GP posterior at `queries`: O(n^3) in the training size.
GPPosterior gp_fit_predict(const GPConfig& config, const DensitySpeedDataset& train, std::span<const double> queries);
/// Same on raw (density, target) vectors; targets may be negative, e.g. residuals about a curve.
GPPosterior gp_fit_predict(const GPConfig& config, std::span<const double> densities, std::span<const double> targets,
                           std::span<const double> queries);

/// log N(y | m(x), K_nn + sigma_eps^2 I), via Cholesky.
double log_marginal_likelihood(const GPConfig& config, const DensitySpeedDataset& train);

/// Search box for the log-transformed hyperparameters (mph and veh/mi).
struct HyperparameterBounds {
  double sigma_min = 1e-3, sigma_max = 1e3;
  double noise_sigma_min = 1e-3, noise_sigma_max = 1e2;
  double length_min = 1e-2, length_max = 1e3;
};

struct HyperparameterSearch {
  int budget = 200;  // objective evaluations, shared by all starts
  int starts = 5;
  std::uint64_t seed = 0;
  HyperparameterBounds bounds;
};

/// Maximizes `objective` over (log sigma, [log lambda], log sigma_eps) with
/// multi-start Nelder-Mead. The input config is always evaluated first, so
/// the result is never worse than it; a budget of 1 returns it unchanged.
/// Configurations on which the objective throws NumericalError are rejected.
GPConfig maximize_hyperparameters(const GPConfig& config, const std::function<double(const GPConfig&)>& objective,
                                  const HyperparameterSearch& search);

/// Type-II maximum likelihood for the exact GP.
GPConfig optimize_hyperparameters(const GPConfig& config, const DensitySpeedDataset& train, int budget,
                                  std::uint64_t seed = 0);

/// Data-scaled starting point: sigma = sd of residuals about the mean
/// function, sigma_eps = sigma / 4, lambda = density range / 10.
GPConfig default_gp_config(KernelKind kind, const DensitySpeedDataset& train,
                           std::optional<FDModel> mean_function = std::nullopt);

}  // namespace fdsgp
