#include "fdsgp/sgpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "fdsgp/errors.hpp"

namespace fdsgp {

namespace {

constexpr const char* kFormat = "fdsgp-sparse-fit-1";

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_inputs(const GPConfig& config, std::span<const double> x, std::span<const double> y,
                  const InducingSet& inducing) {
  config.validate();
  if (x.empty()) throw DataError("sparse GP needs at least one training point");
  if (x.size() != y.size()) throw std::invalid_argument("densities and targets differ in length");
  if (inducing.size() == 0) throw std::invalid_argument("inducing set is empty");
  if (inducing.size() > x.size()) {
    throw std::invalid_argument("inducing set has " + std::to_string(inducing.size()) + " points but only " +
                                std::to_string(x.size()) + " training pairs");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (double u : inducing.inputs) {
    if (!(u >= *lo && u <= *hi)) {
      throw std::invalid_argument("inducing input " + format_double(u) + " outside the training density range [" +
                                  format_double(*lo) + ", " + format_double(*hi) + "]");
    }
  }
}

// Shared m x m quantities. With K_mm = L L^T and A = L^-1 K_mn / sigma_eps,
// Sigma = (K_mm + sigma_eps^-2 K_mn K_nm)^-1 = L^-T B^-1 L^-1 where B = I + A A^T.
struct Woodbury {
  Eigen::MatrixXd k_mn;
  Cholesky kmm;
  Eigen::MatrixXd a;
  Cholesky b;
  Eigen::VectorXd residual;  // y - m(x)
  double noise_sd;

  Woodbury(const GPConfig& config, std::span<const double> x, std::span<const double> y,
           const InducingSet& inducing)
      : k_mn(gram(config.kernel, inducing.inputs, x)),
        kmm(gram(config.kernel, inducing.inputs, inducing.inputs)),
        a(kmm.solve_lower(k_mn) / std::sqrt(config.noise_variance)),
        b(Eigen::MatrixXd::Identity(a.rows(), a.rows()) + a * a.transpose()),
        residual(to_vector(y) - config.prior_mean(x)),
        noise_sd(std::sqrt(config.noise_variance)) {}

  // K_mm Sigma K_mm = L B^-1 L^T
  Eigen::MatrixXd inducing_covariance() const {
    const Eigen::MatrixXd l = kmm.lower();
    const Eigen::MatrixXd half = b.solve_lower(Eigen::MatrixXd(l.transpose()));
    Eigen::MatrixXd s = half.transpose() * half;
    return 0.5 * (s + s.transpose());
  }
};

BoundTerms bound_terms(const GPConfig& config, std::span<const double> x, const Woodbury& w) {
  const double n = static_cast<double>(x.size());
  const double s2 = config.noise_variance;
  const Eigen::VectorXd c = w.b.solve_lower(Eigen::VectorXd(w.a * w.residual));
  BoundTerms t;
  t.noise_variance = s2;
  t.log_likelihood = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * (n * std::log(s2) + w.b.log_det()) -
                     0.5 * (w.residual.squaredNorm() - c.squaredNorm()) / s2;
  double diag = 0.0;
  for (double xi : x) diag += kernel_eval(config.kernel, xi, xi);
  t.trace = diag - s2 * w.a.squaredNorm();
  return t;
}

}  // namespace

SparseFit sgpr_fit(const GPConfig& config, const DensitySpeedDataset& train, const InducingSet& inducing) {
  return sgpr_fit(config, train.densities(), train.speeds(), inducing);
}

SparseFit sgpr_fit(const GPConfig& config, std::span<const double> x, std::span<const double> y,
                   const InducingSet& inducing) {
  check_inputs(config, x, y, inducing);
  const Woodbury w(config, x, y, inducing);
  const double s2 = config.noise_variance;

  SparseFit fit;
  fit.config = config;
  fit.inducing = inducing;
  fit.variational.sigma = w.inducing_covariance();
  fit.variational.woodbury_factor = w.b.lower();
  if (config.mean_function) {
    // mu_* = m(x_m) + Sigma_* sigma_eps^-2 K_mm^-1 K_mn (y - m(x)), Sigma_* = K_mm Sigma K_mm
    const Eigen::VectorXd projected = w.kmm.solve(Eigen::VectorXd(w.k_mn * w.residual));
    fit.variational.mu = config.prior_mean(inducing.inputs) + fit.variational.sigma * projected / s2;
  } else {
    // mu_m = sigma_eps^-2 K_mm Sigma K_mn y = L B^-1 A y / sigma_eps
    const Eigen::VectorXd inner = w.b.solve(Eigen::VectorXd(w.a * w.residual));
    fit.variational.mu = w.kmm.lower() * inner / w.noise_sd;
  }
  fit.bound = bound_terms(config, x, w).value();
  return fit;
}

GPPosterior sgpr_predict(const SparseFit& fit, std::span<const double> queries) {
  const GPConfig& config = fit.config;
  const auto& xm = fit.inducing.inputs;
  const Cholesky kmm(gram(config.kernel, xm, xm));
  const Eigen::MatrixXd k_mq = gram(config.kernel, xm, queries);
  const Eigen::MatrixXd v = kmm.solve_lower(k_mq);

  // mean = m(x_*) + K_*m K_mm^-1 (mu - m(x_m))
  const Eigen::VectorXd coeff = kmm.solve(Eigen::VectorXd(fit.variational.mu - config.prior_mean(xm)));
  const Eigen::VectorXd mean = config.prior_mean(queries) + k_mq.transpose() * coeff;

  // L^-1 S L^-T, so that K_*m K_mm^-1 S K_mm^-1 K_m* = V^T C V with V = L^-1 K_m*
  const Eigen::MatrixXd half = kmm.solve_lower(fit.variational.sigma);
  const Eigen::MatrixXd c = kmm.solve_lower(Eigen::MatrixXd(half.transpose()));
  const Eigen::VectorXd explained = (v.array() * (c * v).array()).colwise().sum().transpose();
  const Eigen::VectorXd nystrom = v.colwise().squaredNorm().transpose();

  GPPosterior post;
  post.query_densities.assign(queries.begin(), queries.end());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double prior = kernel_eval(config.kernel, queries[i], queries[i]);
    const double var = std::max(0.0, prior - nystrom[ii] + explained[ii]);
    post.mean.push_back(mean[ii]);
    post.variance.push_back(var);
    post.predictive_variance.push_back(var + config.noise_variance);
  }
  return post;
}

BoundTerms collapsed_bound_terms(const GPConfig& config, const DensitySpeedDataset& train,
                                 const InducingSet& inducing) {
  check_inputs(config, train.densities(), train.speeds(), inducing);
  const Woodbury w(config, train.densities(), train.speeds(), inducing);
  return bound_terms(config, train.densities(), w);
}

double collapsed_bound(const GPConfig& config, const DensitySpeedDataset& train, const InducingSet& inducing) {
  return collapsed_bound_terms(config, train, inducing).value();
}

GPConfig optimize_sgpr_hyperparameters(const GPConfig& config, const DensitySpeedDataset& train,
                                       const InducingSet& inducing, int budget, std::uint64_t seed) {
  check_inputs(config, train.densities(), train.speeds(), inducing);
  HyperparameterSearch search;
  search.budget = budget;
  search.seed = seed;
  return maximize_hyperparameters(
      config, [&](const GPConfig& c) { return collapsed_bound(c, train, inducing); }, search);
}

void write_gp_config(KeyValueDocument& doc, const GPConfig& config, const std::string& prefix) {
  doc.set(prefix + "kernel", to_string(config.kernel.kind));
  doc.set(prefix + "signal_sigma", config.kernel.signal_sigma);
  doc.set(prefix + "length_scale", config.kernel.length_scale);
  doc.set(prefix + "rq_alpha", config.kernel.rq_alpha);
  doc.set(prefix + "noise_variance", config.noise_variance);
  if (config.mean_function) {
    const KeyValueDocument mean_doc = config.mean_function->to_document(prefix + "mean.");
    for (const auto& [key, value] : mean_doc.entries()) doc.set(key, value);
  } else {
    doc.set(prefix + "mean.model", std::string("none"));
  }
}

GPConfig read_gp_config(const KeyValueDocument& doc, const std::string& prefix) {
  GPConfig c;
  c.kernel.kind = parse_kernel_kind(doc.get(prefix + "kernel"));
  c.kernel.signal_sigma = doc.get_double(prefix + "signal_sigma");
  c.kernel.length_scale = doc.get_double(prefix + "length_scale");
  c.kernel.rq_alpha = doc.get_double(prefix + "rq_alpha");
  c.noise_variance = doc.get_double(prefix + "noise_variance");
  if (doc.get(prefix + "mean.model") != "none") c.mean_function = FDModel::from_document(doc, prefix + "mean.");
  c.validate();
  return c;
}

KeyValueDocument SparseFit::to_document() const {
  KeyValueDocument doc;
  doc.set("format", std::string(kFormat));
  write_gp_config(doc, config);
  doc.set("inducing.provenance", inducing.provenance);
  doc.set("inducing.inputs", std::span<const double>(inducing.inputs));
  doc.set("mu", std::span<const double>(variational.mu.data(), static_cast<std::size_t>(variational.mu.size())));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = variational.sigma;
  doc.set("sigma", std::span<const double>(row_major.data(), static_cast<std::size_t>(row_major.size())));
  doc.set("bound", bound);
  return doc;
}

SparseFit SparseFit::from_document(const KeyValueDocument& doc) {
  if (doc.get("format") != kFormat) throw DataError("unsupported sparse fit format '" + doc.get("format") + "'");
  SparseFit fit;
  fit.config = read_gp_config(doc);
  fit.inducing.provenance = doc.get("inducing.provenance");
  fit.inducing.inputs = doc.get_doubles("inducing.inputs");
  const auto m = static_cast<Eigen::Index>(fit.inducing.inputs.size());
  const auto mu = doc.get_doubles("mu");
  const auto sigma = doc.get_doubles("sigma");
  if (m == 0 || static_cast<Eigen::Index>(mu.size()) != m || static_cast<Eigen::Index>(sigma.size()) != m * m) {
    throw DataError("sparse fit document has inconsistent sizes (m=" + std::to_string(m) + ", mu=" +
                    std::to_string(mu.size()) + ", sigma=" + std::to_string(sigma.size()) + ")");
  }
  fit.variational.mu = to_vector(mu);
  fit.variational.sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      sigma.data(), m, m);
  fit.bound = doc.get_double("bound");
  return fit;
}

void save_sparse_fit(const SparseFit& fit, const std::string& path) { fit.to_document().write_file(path); }

SparseFit load_sparse_fit(const std::string& path) { return SparseFit::from_document(KeyValueDocument::read_file(path)); }

}  // namespace fdsgp
