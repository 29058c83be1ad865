#include "fdsgp/kernels.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "fdsgp/errors.hpp"

namespace fdsgp {

namespace {

std::atomic<std::uint64_t> g_factorizations{0};
std::atomic<std::uint64_t> g_solves{0};

void count_solve() { g_solves.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kExponential: return "exponential";
    case KernelKind::kRbf: return "rbf";
    case KernelKind::kMatern32: return "matern32";
    case KernelKind::kMatern52: return "matern52";
    case KernelKind::kRationalQuadratic: return "rational-quadratic";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  std::string key;
  for (char c : name) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "exp" || key == "exponential") return KernelKind::kExponential;
  if (key == "rbf" || key == "se" || key == "squared-exponential") return KernelKind::kRbf;
  if (key == "matern32" || key == "matern-32") return KernelKind::kMatern32;
  if (key == "matern52" || key == "matern-52") return KernelKind::kMatern52;
  if (key == "rq" || key == "rational-quadratic" || key == "rational_quadratic") return KernelKind::kRationalQuadratic;
  throw NotFoundError("unknown kernel '" + name + "' (expected exp, rbf, matern32, matern52, rq)");
}

bool uses_length_scale(KernelKind kind) { return kind != KernelKind::kExponential; }

void KernelParams::validate() const {
  if (!(signal_sigma > 0.0) || !std::isfinite(signal_sigma)) throw std::invalid_argument("signal_sigma must be > 0");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw std::invalid_argument("length_scale must be > 0");
  if (!(rq_alpha > 0.0)) throw std::invalid_argument("rq_alpha must be > 0");
}

double kernel_eval(const KernelParams& params, double x, double x_prime) {
  const double s2 = params.signal_sigma * params.signal_sigma;
  const double d = std::abs(x - x_prime);
  const double l = params.length_scale;
  switch (params.kind) {
    case KernelKind::kExponential: return s2 * std::exp(-d / 2.0);
    case KernelKind::kRbf: return s2 * std::exp(-d * d / (2.0 * l * l));
    case KernelKind::kMatern32: {
      const double r = std::sqrt(3.0) * d / l;
      return s2 * (1.0 + r) * std::exp(-r);
    }
    case KernelKind::kMatern52: {
      const double r = std::sqrt(5.0) * d / l;
      return s2 * (1.0 + r + r * r / 3.0) * std::exp(-r);
    }
    case KernelKind::kRationalQuadratic:
      return s2 * std::pow(1.0 + d * d / (2.0 * params.rq_alpha * l * l), -params.rq_alpha);
  }
  return 0.0;
}

Eigen::MatrixXd gram(const KernelParams& params, std::span<const double> xs, std::span<const double> ys) {
  const auto rows = static_cast<Eigen::Index>(xs.size());
  const auto cols = static_cast<Eigen::Index>(ys.size());
  Eigen::MatrixXd k(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      k(i, j) = kernel_eval(params, xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

Cholesky::Cholesky(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("Cholesky needs a square matrix");
  g_factorizations.fetch_add(1, std::memory_order_relaxed);
  const Eigen::Index n = matrix.rows();
  if (n == 0) {
    llt_.compute(matrix);
    return;
  }
  const double mean_diag = matrix.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  const double pivot_floor = 1e-12 * scale;

  double jitter = 0.0;
  for (int rung = 0; rung <= 7; ++rung) {
    jitter = rung == 0 ? 0.0 : 1e-8 * std::pow(10.0, rung - 1) * scale;
    Eigen::MatrixXd m = matrix;
    m.diagonal().array() += jitter;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      const Eigen::VectorXd pivots = llt_.matrixLLT().diagonal();
      if ((pivots.array().square() >= pivot_floor).all() && pivots.allFinite()) {
        jitter_ = jitter;
        return;
      }
    }
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation to " + std::to_string(jitter) +
                       " (ill-conditioned kernel matrix or hyperparameters)");
}

Eigen::MatrixXd Cholesky::solve(const Eigen::MatrixXd& rhs) const {
  count_solve();
  return llt_.solve(rhs);
}

Eigen::VectorXd Cholesky::solve(const Eigen::VectorXd& rhs) const {
  count_solve();
  return llt_.solve(rhs);
}

Eigen::MatrixXd Cholesky::solve_lower(const Eigen::MatrixXd& rhs) const {
  count_solve();
  return llt_.matrixL().solve(rhs);
}

Eigen::VectorXd Cholesky::solve_lower(const Eigen::VectorXd& rhs) const {
  count_solve();
  return llt_.matrixL().solve(rhs);
}

Eigen::MatrixXd Cholesky::solve_upper(const Eigen::MatrixXd& rhs) const {
  count_solve();
  return llt_.matrixU().solve(rhs);
}

Eigen::VectorXd Cholesky::solve_upper(const Eigen::VectorXd& rhs) const {
  count_solve();
  return llt_.matrixU().solve(rhs);
}

double Cholesky::log_det() const { return 2.0 * llt_.matrixLLT().diagonal().array().log().sum(); }

Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& gram_matrix, const Eigen::MatrixXd& rhs) {
  return Cholesky(gram_matrix).solve(rhs);
}

SolveCounters solve_counters() { return {g_factorizations.load(), g_solves.load()}; }

void reset_solve_counters() {
  g_factorizations.store(0);
  g_solves.store(0);
}

}  // namespace fdsgp
