#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>

#include "fdsgp/dataset.hpp"
#include "fdsgp/gpr.hpp"
#include "fdsgp/inducing.hpp"
#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

inline constexpr std::size_t kDefaultInducingCount = 288;

/// Optimal q(f_m) = N(mu, sigma). With a mean function, mu is mu_* and sigma is Sigma_*.
struct VariationalPosterior {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  /// Lower Cholesky factor of I + sigma_eps^-2 L^-1 K_mn K_nm L^-T with K_mm = L L^T.
  /// Not serialized; empty on a loaded fit.
  Eigen::MatrixXd woodbury_factor;
};

struct SparseFit {
  GPConfig config;
  InducingSet inducing;
  VariationalPosterior variational;
  double bound = 0.0;  // collapsed evidence lower bound F_V

  KeyValueDocument to_document() const;
  static SparseFit from_document(const KeyValueDocument& doc);
};

void save_sparse_fit(const SparseFit& fit, const std::string& path);
SparseFit load_sparse_fit(const std::string& path);

/// The two parts of the collapsed bound: F_V = log_likelihood - trace / (2 sigma_eps^2).
struct BoundTerms {
  double log_likelihood = 0.0;  // log N(y - m(x) | 0, sigma_eps^2 I + Q_nn)
  double trace = 0.0;           // Tr(K_nn - Q_nn)
  double noise_variance = 1.0;

  double value() const { return log_likelihood - trace / (2.0 * noise_variance); }
};

/// Fits the optimal variational distribution for fixed hyperparameters and inducing inputs.
/// Throws std::invalid_argument if m > n, m == 0, or an inducing input lies outside the
/// training density range; NumericalError if a factorization fails.
SparseFit sgpr_fit(const GPConfig& config, const DensitySpeedDataset& train, const InducingSet& inducing);
/// Same on raw (density, target) vectors; targets may be negative, e.g. residuals about a curve.
SparseFit sgpr_fit(const GPConfig& config, std::span<const double> densities, std::span<const double> targets,
                   const InducingSet& inducing);

/// Latent and predictive moments of q(f_*) at the query densities.
GPPosterior sgpr_predict(const SparseFit& fit, std::span<const double> queries);

double collapsed_bound(const GPConfig& config, const DensitySpeedDataset& train, const InducingSet& inducing);
BoundTerms collapsed_bound_terms(const GPConfig& config, const DensitySpeedDataset& train,
                                 const InducingSet& inducing);

/// Maximizes the collapsed bound over the kernel and noise hyperparameters; inducing inputs stay fixed.
GPConfig optimize_sgpr_hyperparameters(const GPConfig& config, const DensitySpeedDataset& train,
                                       const InducingSet& inducing, int budget, std::uint64_t seed = 0);

/// Serializes kernel, noise and mean function under `prefix`.
void write_gp_config(KeyValueDocument& doc, const GPConfig& config, const std::string& prefix = {});
GPConfig read_gp_config(const KeyValueDocument& doc, const std::string& prefix = {});

}  // namespace fdsgp
