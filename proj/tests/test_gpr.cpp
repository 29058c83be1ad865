#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "fdsgp/errors.hpp"
#include "fdsgp/gpr.hpp"
#include "test_support.hpp"

namespace fdsgp {
namespace {

GPConfig exp_config(double sigma, double noise_var) {
  GPConfig c;
  c.kernel = {KernelKind::kExponential, sigma, 1.0};
  c.noise_variance = noise_var;
  return c;
}

TEST(GpFitPredict, InterpolatesWithTinyNoise) {
  const auto data = testing::traffic_data(15, 1);
  const GPConfig c = exp_config(30.0, 1e-12);
  const std::vector<double> q{data[4].density, data[9].density};
  const auto post = gp_fit_predict(c, data, q);
  EXPECT_NEAR(post.mean[0], data[4].speed, 1e-4);
  EXPECT_NEAR(post.mean[1], data[9].speed, 1e-4);
}

TEST(GpFitPredict, RevertsToPriorFarAway) {
  const auto data = testing::traffic_data(30, 2);
  GPConfig c = exp_config(5.0, 1.0);
  c.mean_function = FDModel(find_model("greenshields"), {60.0, 150.0});
  const std::vector<double> q{500.0};
  const auto post = gp_fit_predict(c, data, q);
  EXPECT_NEAR(post.mean[0], c.mean_function->evaluate(500.0), 1e-6);
  EXPECT_NEAR(post.variance[0], 25.0, 1e-6);
  EXPECT_NEAR(post.predictive_variance[0], 26.0, 1e-6);
}

TEST(GpFitPredict, TwoPointHandOracle) {
  const DensitySpeedDataset data({{1.0, 40.0}, {3.0, 30.0}});
  const GPConfig c = exp_config(2.0, 0.3);
  const double k12 = 4.0 * std::exp(-1.0);
  Eigen::Matrix2d k;
  k << 4.3, k12, k12, 4.3;
  const double det = k(0, 0) * k(1, 1) - k(0, 1) * k(1, 0);
  Eigen::Matrix2d kinv;
  kinv << k(1, 1) / det, -k(0, 1) / det, -k(1, 0) / det, k(0, 0) / det;
  const double q = 2.2;
  const Eigen::Vector2d ks(4.0 * std::exp(-std::abs(q - 1.0) / 2.0), 4.0 * std::exp(-std::abs(q - 3.0) / 2.0));
  const Eigen::Vector2d y(40.0, 30.0);
  const std::vector<double> queries{q};
  const auto post = gp_fit_predict(c, data, queries);
  EXPECT_NEAR(post.mean[0], ks.dot(kinv * y), 1e-10);
  EXPECT_NEAR(post.variance[0], 4.0 - ks.dot(kinv * ks), 1e-10);
}

TEST(GpFitPredict, VarianceBoundedByPrior) {
  for (auto kind : {KernelKind::kExponential, KernelKind::kRbf, KernelKind::kMatern32}) {
    const auto data = testing::traffic_data(80, 3);
    GPConfig c = exp_config(4.0, 2.0);
    c.kernel.kind = kind;
    c.kernel.length_scale = 7.0;
    std::vector<double> q;
    for (double x = 0.0; x <= 110.0; x += 0.7) q.push_back(x);
    const auto post = gp_fit_predict(c, data, q);
    ASSERT_EQ(post.size(), q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_GE(post.variance[i], 0.0);
      EXPECT_LE(post.variance[i], 16.0 + 1e-10);
      EXPECT_DOUBLE_EQ(post.predictive_variance[i], post.variance[i] + 2.0);
    }
  }
}

TEST(GpFitPredict, ResidualTrickIdentity) {
  const auto data = testing::traffic_data(60, 4);
  GPConfig with_mean = exp_config(6.0, 4.0);
  with_mean.mean_function = FDModel(find_model("underwood"), {70.0, 90.0});
  const std::vector<double> x = data.densities();
  std::vector<double> resid;
  for (const auto& p : data.pairs()) resid.push_back(p.speed - with_mean.mean_function->evaluate(p.density));
  const GPConfig zero = exp_config(6.0, 4.0);
  const std::vector<double> q{0.0, 12.5, 40.0, 77.7, 130.0};
  const auto a = gp_fit_predict(with_mean, data, q);
  const auto b = gp_fit_predict(zero, x, resid, q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(a.mean[i], b.mean[i] + with_mean.mean_function->evaluate(q[i]), 1e-10);
    EXPECT_NEAR(a.variance[i], b.variance[i], 1e-10);
  }
}

TEST(GpFitPredict, EmptyTrainingSet) {
  const std::vector<double> q{1.0};
  EXPECT_THROW(gp_fit_predict(exp_config(1, 1), DensitySpeedDataset{}, q), DataError);
}

TEST(LogMarginalLikelihood, ScalarOracle) {
  const DensitySpeedDataset data({{7.0, 3.0}});
  const GPConfig c = exp_config(1.5, 0.4);
  const double s = 1.5 * 1.5 + 0.4;
  const double expected = -0.5 * std::log(2.0 * std::numbers::pi * s) - 9.0 / (2.0 * s);
  EXPECT_NEAR(log_marginal_likelihood(c, data), expected, 1e-12);
}

TEST(LogMarginalLikelihood, DenseOracleFivePoints) {
  const auto data = testing::traffic_data(5, 6);
  GPConfig c = exp_config(3.0, 0.7);
  c.mean_function = FDModel(find_model("greenshields"), {65.0, 130.0});
  Eigen::MatrixXd cov = testing::exponential_cov(data.densities(), 3.0);
  cov.diagonal().array() += 0.7;
  Eigen::VectorXd mean(5);
  for (int i = 0; i < 5; ++i) mean[i] = c.mean_function->evaluate(data[i].density);
  EXPECT_NEAR(log_marginal_likelihood(c, data), testing::dense_log_normal(testing::as_vector(data.speeds()), mean, cov),
              1e-8);
}

// Appending a duplicate x_d changes the LML by log N(y_d | conditional mean, conditional variance),
// which the dense oracle confirms. Whether the per-point average rises depends on how well the
// duplicate is predicted, so both signs occur.
TEST(LogMarginalLikelihood, DuplicatePointChainRule) {
  const auto base = testing::traffic_data(20, 7);
  auto pairs = base.pairs();
  pairs.push_back(pairs[5]);
  const DensitySpeedDataset dup(pairs);
  for (double noise : {4.0, 0.05}) {
    const GPConfig c = exp_config(20.0, noise);
    Eigen::MatrixXd cov = testing::exponential_cov(dup.densities(), 20.0);
    cov.diagonal().array() += noise;
    const double dense = testing::dense_log_normal(testing::as_vector(dup.speeds()), Eigen::VectorXd::Zero(21), cov);
    EXPECT_NEAR(log_marginal_likelihood(c, dup), dense, 1e-7);
    const std::vector<double> q{pairs[5].density};
    const auto post = gp_fit_predict(c, base, q);
    const double var = post.predictive_variance[0];
    const double cond = -0.5 * std::log(2.0 * std::numbers::pi * var) -
                        0.5 * (pairs[5].speed - post.mean[0]) * (pairs[5].speed - post.mean[0]) / var;
    EXPECT_NEAR(log_marginal_likelihood(c, dup) - log_marginal_likelihood(c, base), cond, 1e-7);
  }
}

TEST(LogMarginalLikelihood, FiniteDifferenceConsistency) {
  const auto data = testing::traffic_data(40, 8);
  const double log_noise_sd = std::log(1.7);
  auto lml = [&](double t) { return log_marginal_likelihood(exp_config(10.0, std::exp(2.0 * t)), data); };
  const double coarse = (lml(log_noise_sd + 1e-4) - lml(log_noise_sd - 1e-4)) / 2e-4;
  const double fine = (lml(log_noise_sd + 1e-5) - lml(log_noise_sd - 1e-5)) / 2e-5;
  EXPECT_LE(std::abs(coarse - fine), 1e-4 * std::abs(fine));
}

TEST(OptimizeHyperparameters, BudgetOneReturnsInput) {
  const auto data = testing::traffic_data(30, 9);
  const GPConfig c = exp_config(3.0, 2.0);
  const auto out = optimize_hyperparameters(c, data, 1, 0);
  EXPECT_EQ(out.kernel.signal_sigma, c.kernel.signal_sigma);
  EXPECT_EQ(out.noise_variance, c.noise_variance);
  EXPECT_THROW(optimize_hyperparameters(c, data, 0, 0), std::invalid_argument);
}

TEST(OptimizeHyperparameters, NeverWorseThanInput) {
  const auto data = testing::traffic_data(60, 10);
  for (auto kind : {KernelKind::kExponential, KernelKind::kRbf}) {
    GPConfig c = exp_config(3.0, 2.0);
    c.kernel.kind = kind;
    for (int budget : {2, 10, 150}) {
      const auto out = optimize_hyperparameters(c, data, budget, 3);
      EXPECT_GE(log_marginal_likelihood(out, data), log_marginal_likelihood(c, data));
    }
  }
}

TEST(OptimizeHyperparameters, RecoversGeneratorWithinThirtyPercent) {
  const auto data = testing::gp_draw(100, 2.0, 0.5, 0.0, 50.0, 2024);
  GPConfig start = exp_config(1.0, 1.0);
  start.mean_function = FDModel(find_model("jayakrishnan"), {50.0, 50.0, 100.0});  // constant 50
  const auto out = optimize_hyperparameters(start, data, 400, 1);
  EXPECT_NEAR(out.kernel.signal_sigma, 2.0, 0.6);
  EXPECT_NEAR(std::sqrt(out.noise_variance), 0.5, 0.15);
}

TEST(DefaultGpConfig, InsideBounds) {
  const auto data = testing::traffic_data(50, 11);
  const auto c = default_gp_config(KernelKind::kRbf, data);
  EXPECT_NO_THROW(c.validate());
  EXPECT_GT(c.kernel.length_scale, 1.0);
  EXPECT_FALSE(c.mean_function.has_value());
}

}  // namespace
}  // namespace fdsgp
