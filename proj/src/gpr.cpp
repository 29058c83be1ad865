#include "fdsgp/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "fdsgp/errors.hpp"
#include "fdsgp/optimize.hpp"

namespace fdsgp {

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd encode(const GPConfig& c) {
  const bool with_length = uses_length_scale(c.kernel.kind);
  Eigen::VectorXd x(with_length ? 3 : 2);
  x[0] = std::log(c.kernel.signal_sigma);
  if (with_length) x[1] = std::log(c.kernel.length_scale);
  x[x.size() - 1] = 0.5 * std::log(c.noise_variance);
  return x;
}

GPConfig decode(const GPConfig& base, const Eigen::VectorXd& x) {
  GPConfig c = base;
  c.kernel.signal_sigma = std::exp(x[0]);
  if (x.size() == 3) c.kernel.length_scale = std::exp(x[1]);
  c.noise_variance = std::exp(2.0 * x[x.size() - 1]);
  return c;
}

optim::Box log_box(const GPConfig& c, const HyperparameterBounds& b) {
  const bool with_length = uses_length_scale(c.kernel.kind);
  const Eigen::Index dim = with_length ? 3 : 2;
  optim::Box box{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
  box.lower[0] = std::log(b.sigma_min);
  box.upper[0] = std::log(b.sigma_max);
  if (with_length) {
    box.lower[1] = std::log(b.length_min);
    box.upper[1] = std::log(b.length_max);
  }
  box.lower[dim - 1] = std::log(b.noise_sigma_min);
  box.upper[dim - 1] = std::log(b.noise_sigma_max);
  return box;
}

}  // namespace

void GPConfig::validate() const {
  kernel.validate();
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("noise_variance must be > 0");
  }
}

Eigen::VectorXd GPConfig::prior_mean(std::span<const double> densities) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(densities.size()));
  if (mean_function) {
    for (std::size_t i = 0; i < densities.size(); ++i) m[static_cast<Eigen::Index>(i)] = mean_function->evaluate(densities[i]);
  }
  return m;
}

GPPosterior gp_fit_predict(const GPConfig& config, const DensitySpeedDataset& train, std::span<const double> queries) {
  return gp_fit_predict(config, train.densities(), train.speeds(), queries);
}

GPPosterior gp_fit_predict(const GPConfig& config, std::span<const double> x, std::span<const double> y,
                           std::span<const double> queries) {
  config.validate();
  if (x.empty()) throw DataError("exact GP needs at least one training point");
  if (x.size() != y.size()) throw std::invalid_argument("densities and targets differ in length");
  const Eigen::VectorXd residual =
      Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) - config.prior_mean(x);

  Eigen::MatrixXd k_nn = gram(config.kernel, x, x);
  k_nn.diagonal().array() += config.noise_variance;
  const Cholesky chol(k_nn);
  const Eigen::VectorXd alpha = chol.solve(residual);

  const Eigen::MatrixXd k_nq = gram(config.kernel, x, queries);
  const Eigen::VectorXd mean = config.prior_mean(queries) + k_nq.transpose() * alpha;
  const Eigen::MatrixXd v = chol.solve_lower(k_nq);
  const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();

  GPPosterior post;
  post.query_densities.assign(queries.begin(), queries.end());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double var = std::max(0.0, kernel_eval(config.kernel, queries[i], queries[i]) - reduction[ii]);
    post.mean.push_back(mean[ii]);
    post.variance.push_back(var);
    post.predictive_variance.push_back(var + config.noise_variance);
  }
  return post;
}

double log_marginal_likelihood(const GPConfig& config, const DensitySpeedDataset& train) {
  config.validate();
  if (train.empty()) throw DataError("log marginal likelihood needs at least one training point");
  const auto x = train.densities();
  const Eigen::VectorXd residual = to_vector(train.speeds()) - config.prior_mean(x);
  Eigen::MatrixXd k_nn = gram(config.kernel, x, x);
  k_nn.diagonal().array() += config.noise_variance;
  const Cholesky chol(k_nn);
  const Eigen::VectorXd z = chol.solve_lower(residual);
  const double n = static_cast<double>(x.size());
  return -0.5 * z.squaredNorm() - 0.5 * chol.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

GPConfig maximize_hyperparameters(const GPConfig& config, const std::function<double(const GPConfig&)>& objective,
                                  const HyperparameterSearch& search) {
  config.validate();
  if (search.budget < 1) throw std::invalid_argument("hyperparameter budget must be >= 1");

  const optim::Box box = log_box(config, search.bounds);
  int remaining = search.budget;
  auto loss = [&](const Eigen::VectorXd& x) {
    try {
      const double v = objective(decode(config, x));
      return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  GPConfig best_config = config;
  double best = loss(encode(config));
  --remaining;

  std::mt19937_64 rng(search.seed);
  std::normal_distribution<double> perturb(0.0, 1.0);
  const int starts = std::max(1, search.starts);
  for (int s = 0; s < starts && remaining > 1; ++s) {
    Eigen::VectorXd x0 = encode(config);
    if (s > 0) {
      for (Eigen::Index j = 0; j < x0.size(); ++j) x0[j] += perturb(rng);
    }
    x0 = box.clamp(x0);
    optim::NelderMeadOptions nm;
    nm.max_evaluations = remaining / (starts - s);
    nm.initial_step = Eigen::VectorXd::Constant(x0.size(), 0.5);
    nm.x_tolerance = 1e-6;
    nm.f_tolerance = 1e-10;
    if (nm.max_evaluations < 2) continue;
    const auto run = optim::nelder_mead(loss, x0, box, nm);
    remaining -= run.evaluations;
    if (run.value < best) {
      best = run.value;
      best_config = decode(config, run.x);
    }
  }
  return best_config;
}

GPConfig optimize_hyperparameters(const GPConfig& config, const DensitySpeedDataset& train, int budget,
                                  std::uint64_t seed) {
  HyperparameterSearch search;
  search.budget = budget;
  search.seed = seed;
  return maximize_hyperparameters(
      config, [&](const GPConfig& c) { return log_marginal_likelihood(c, train); }, search);
}

GPConfig default_gp_config(KernelKind kind, const DensitySpeedDataset& train, std::optional<FDModel> mean_function) {
  if (train.empty()) throw DataError("cannot scale hyperparameters from an empty dataset");
  GPConfig c;
  c.kernel.kind = kind;
  c.mean_function = std::move(mean_function);
  const auto x = train.densities();
  const Eigen::VectorXd r = to_vector(train.speeds()) - c.prior_mean(x);
  const double mean = r.mean();
  const double sd = r.size() > 1 ? std::sqrt((r.array() - mean).square().sum() / static_cast<double>(r.size() - 1)) : 1.0;
  const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  // A zero-mean GP has to explain the level of the data, not just its spread.
  const double sigma = std::clamp(c.mean_function ? std::max(sd, 1e-2) : std::max(rms, 1e-2), 1e-3, 1e3);
  c.kernel.signal_sigma = sigma;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  c.kernel.length_scale = std::clamp((*hi - *lo) / 10.0, 1e-2, 1e3);
  const double noise_sigma = std::clamp(std::max(sd, 1e-2) / 4.0, 1e-3, 1e2);
  c.noise_variance = noise_sigma * noise_sigma;
  return c;
}

}  // namespace fdsgp
