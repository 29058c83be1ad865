#include "fdsgp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "fdsgp/errors.hpp"
#include "fdsgp/optimize.hpp"

namespace fdsgp {

namespace {

double fd_step(double theta) { return std::max(1e-6, 1e-6 * std::abs(theta)); }

std::vector<double> resolve_weights(const DensitySpeedDataset& data, std::span<const double> weights) {
  if (weights.empty()) return std::vector<double>(data.size(), 1.0);
  if (weights.size() != data.size()) throw std::invalid_argument("weight vector length does not match dataset");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and positive");
  }
  return {weights.begin(), weights.end()};
}

std::vector<double> gradient(const FDModelSpec& spec, const DensitySpeedDataset& data, std::span<const double> w,
                             std::span<const double> params) {
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> g(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double h = fd_step(params[j]);
    theta[j] = params[j] + h;
    const double up = weighted_sse(spec, data, w, theta);
    theta[j] = params[j] - h;
    const double down = weighted_sse(spec, data, w, theta);
    theta[j] = params[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

struct LocalRun {
  Eigen::VectorXd theta;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

class Problem {
 public:
  Problem(const FDModelSpec& spec, const DensitySpeedDataset& data, std::vector<double> weights)
      : spec_(spec), rho_(data.densities()), v_(data.speeds()), sqrt_w_(weights.size()), data_(data),
        weights_(std::move(weights)) {
    for (std::size_t i = 0; i < weights_.size(); ++i) sqrt_w_[i] = std::sqrt(weights_[i]);
    box_.lower.resize(static_cast<Eigen::Index>(spec.arity()));
    box_.upper.resize(static_cast<Eigen::Index>(spec.arity()));
    for (std::size_t j = 0; j < spec.arity(); ++j) {
      box_.lower[static_cast<Eigen::Index>(j)] = spec.params[j].lower;
      box_.upper[static_cast<Eigen::Index>(j)] = spec.params[j].upper;
    }
  }

  const optim::Box& box() const { return box_; }

  double objective(const Eigen::VectorXd& theta) const {
    const double v = weighted_sse(spec_, data_, weights_, std::span<const double>(theta.data(), theta.size()));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  double projected_gradient_norm(const Eigen::VectorXd& theta) const {
    return projected_first_order_residual(spec_, data_, weights_, std::span<const double>(theta.data(), theta.size()));
  }

  // Weighted residuals e_i = sqrt(w_i) (v_i - f_i) and Jacobian of the weighted model values.
  void linearize(const Eigen::VectorXd& theta, Eigen::VectorXd& e, Eigen::MatrixXd& jac) const {
    const auto n = static_cast<Eigen::Index>(rho_.size());
    const Eigen::Index p = theta.size();
    e.resize(n);
    jac.resize(n, p);
    std::vector<double> t(theta.data(), theta.data() + p);
    for (Eigen::Index i = 0; i < n; ++i) {
      e[i] = sqrt_w_[static_cast<std::size_t>(i)] * (v_[static_cast<std::size_t>(i)] - spec_.speed(rho_[static_cast<std::size_t>(i)], t));
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      const double h = fd_step(theta[j]);
      std::vector<double> up = t, down = t;
      up[static_cast<std::size_t>(j)] += h;
      down[static_cast<std::size_t>(j)] -= h;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = rho_[static_cast<std::size_t>(i)];
        jac(i, j) = sqrt_w_[static_cast<std::size_t>(i)] * (spec_.speed(r, up) - spec_.speed(r, down)) / (2.0 * h);
      }
    }
  }

  LocalRun gauss_newton(LocalRun run, const CalibrationOptions& opt) const {
    double damping = 1e-3;
    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    bool relinearize = true;
    Eigen::MatrixXd jtj;
    Eigen::VectorXd jte;
    while (run.iterations < opt.max_iterations) {
      if (relinearize) {
        linearize(run.theta, e, jac);
        if (!e.allFinite() || !jac.allFinite()) break;
        jtj = jac.transpose() * jac;
        jte = jac.transpose() * e;
        relinearize = false;
        // Stops early only far below the convergence tolerance; otherwise the loop ends on a
        // negligible step or once no damped step improves the objective.
        if (projected_gradient_norm(run.theta) <= 1e-6 * opt.gradient_tolerance * (1.0 + run.objective)) break;
      }
      ++run.iterations;
      Eigen::MatrixXd lhs = jtj;
      for (Eigen::Index j = 0; j < lhs.rows(); ++j) lhs(j, j) += damping * std::max(jtj(j, j), 1e-12);
      const Eigen::VectorXd step = lhs.ldlt().solve(jte);
      const Eigen::VectorXd candidate = box_.clamp(run.theta + step);
      const double value = objective(candidate);
      if (value < run.objective) {
        const double moved = (candidate - run.theta).norm();
        run.theta = candidate;
        run.objective = value;
        run.trace.push_back(value);
        damping = std::max(damping / 3.0, 1e-12);
        relinearize = true;
        if (moved <= opt.step_tolerance * (1.0 + run.theta.norm())) {
          break;
        }
      } else {
        damping *= 4.0;
        if (damping > 1e12) break;
        run.trace.push_back(run.objective);
      }
    }
    return run;
  }

 private:
  const FDModelSpec& spec_;
  std::vector<double> rho_;
  std::vector<double> v_;
  std::vector<double> sqrt_w_;
  const DensitySpeedDataset& data_;
  std::vector<double> weights_;
  optim::Box box_;
};

}  // namespace

KeyValueDocument CalibrationResult::to_document() const {
  KeyValueDocument doc = model.to_document();
  doc.set("objective", objective);
  doc.set("gradient_norm", gradient_norm);
  doc.set("iterations", static_cast<long long>(iterations));
  doc.set("converged", std::string(converged ? "true" : "false"));
  return doc;
}

double weighted_sse(const FDModelSpec& spec, const DensitySpeedDataset& data, std::span<const double> weights,
                    std::span<const double> params) {
  double sum = 0.0;
  const bool unit = weights.empty();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data[i].speed - spec.speed(data[i].density, params);
    sum += (unit ? 1.0 : weights[i]) * r * r;
  }
  return sum;
}

double first_order_residual(const FDModelSpec& spec, const DensitySpeedDataset& data,
                            std::span<const double> weights, std::span<const double> params) {
  const auto g = gradient(spec, data, weights, params);
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

double projected_first_order_residual(const FDModelSpec& spec, const DensitySpeedDataset& data,
                                      std::span<const double> weights, std::span<const double> params) {
  const auto g = gradient(spec, data, weights, params);
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const bool at_lower = params[j] <= spec.params[j].lower && g[j] > 0.0;
    const bool at_upper = params[j] >= spec.params[j].upper && g[j] < 0.0;
    if (!at_lower && !at_upper) s += g[j] * g[j];
  }
  return std::sqrt(s);
}

std::vector<double> default_initial_params(const FDModelSpec& spec, const DensitySpeedDataset& data) {
  if (data.empty()) throw DataError("cannot initialize from an empty dataset");
  auto speeds = data.speeds();
  std::sort(speeds.begin(), speeds.end());
  auto percentile = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(speeds.size()))) ;
    return speeds[std::min(speeds.size() - 1, idx == 0 ? 0 : idx - 1)];
  };
  double max_density = 0.0;
  std::size_t max_flow_at = 0;
  double max_flow = -1.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    max_density = std::max(max_density, data[i].density);
    const double q = data[i].density * data[i].speed;
    if (q > max_flow) {
      max_flow = q;
      max_flow_at = i;
    }
  }

  std::vector<double> init;
  for (const auto& p : spec.params) {
    double v = p.default_value;
    switch (p.role) {
      case ParamRole::kFreeFlowSpeed: v = percentile(0.99); break;
      case ParamRole::kJamDensity: v = 1.5 * max_density; break;
      case ParamRole::kCriticalDensity: v = data[max_flow_at].density > 0.0 ? data[max_flow_at].density : v; break;
      case ParamRole::kCriticalSpeed: v = data[max_flow_at].speed > 0.0 ? data[max_flow_at].speed : v; break;
      case ParamRole::kMinimumSpeed: v = percentile(0.01); break;
      case ParamRole::kShape: break;
    }
    init.push_back(std::clamp(v, p.lower, p.upper));
  }
  return init;
}

CalibrationResult wls_fit(const FDModelSpec& spec, const DensitySpeedDataset& data, std::span<const double> weights,
                          const std::optional<std::vector<double>>& init, std::uint64_t seed,
                          const CalibrationOptions& options) {
  if (data.empty()) throw DataError("cannot calibrate against an empty dataset");
  const auto w = resolve_weights(data, weights);
  if (spec.arity() > 1) {
    const double first = data[0].density;
    const bool all_same =
        std::all_of(data.pairs().begin(), data.pairs().end(), [&](const auto& p) { return p.density == first; });
    if (all_same) {
      throw DataError("ill-posed calibration: all densities are identical but " + spec.name + " has " +
                      std::to_string(spec.arity()) + " parameters");
    }
  }
  if (init && !spec.within_bounds(*init)) throw std::invalid_argument("initial parameters outside bounds");

  const Problem problem(spec, data, w);
  const auto p = static_cast<Eigen::Index>(spec.arity());
  const std::vector<double> base = init ? *init : default_initial_params(spec, data);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  LocalRun best;
  const int starts = std::max(1, options.starts);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd x0(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& ps = spec.params[static_cast<std::size_t>(j)];
      double v = base[static_cast<std::size_t>(j)];
      if (s > 0) {
        v = v > 0.0 ? v * std::exp(jitter(rng)) : ps.lower + unit(rng) * std::min(ps.upper - ps.lower, 10.0);
      }
      x0[j] = std::clamp(v, ps.lower, ps.upper);
    }

    LocalRun run;
    optim::NelderMeadOptions nm;
    nm.max_evaluations = options.simplex_evaluations_per_parameter * static_cast<int>(p);
    const auto simplex =
        optim::nelder_mead([&](const Eigen::VectorXd& x) { return problem.objective(x); }, x0, problem.box(), nm);
    run.theta = simplex.x;
    run.objective = simplex.value;
    run.iterations = simplex.iterations;
    run.trace = simplex.trace;
    if (!std::isfinite(run.objective)) continue;
    run = problem.gauss_newton(std::move(run), options);
    if (run.objective < best.objective) best = std::move(run);
  }
  if (!std::isfinite(best.objective)) {
    throw NumericalError("calibration of " + spec.name + " found no finite objective value");
  }

  std::vector<double> theta(best.theta.data(), best.theta.data() + p);
  // Projection guards against rounding past a bound.
  for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = std::clamp(theta[j], spec.params[j].lower, spec.params[j].upper);
  CalibrationResult result{FDModel(spec, theta), best.objective, 0.0, best.iterations, false, std::move(best.trace)};
  result.gradient_norm = projected_first_order_residual(spec, data, w, theta);
  result.converged = result.gradient_norm <= options.gradient_tolerance * (1.0 + result.objective);
  return result;
}

}  // namespace fdsgp
