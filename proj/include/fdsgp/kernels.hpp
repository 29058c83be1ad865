#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace fdsgp {

enum class KernelKind { kExponential, kRbf, kMatern32, kMatern52, kRationalQuadratic };

std::string to_string(KernelKind kind);
/// Accepts the long names ("exponential", "rational-quadratic", ...) and the
/// CLI short forms ("exp", "rq", ...). Throws NotFoundError.
KernelKind parse_kernel_kind(const std::string& name);
/// True for every kind except the exponential kernel, whose decay is fixed.
bool uses_length_scale(KernelKind kind);

struct KernelParams {
  KernelKind kind = KernelKind::kExponential;
  double signal_sigma = 1.0;  // sigma; k(x, x) = sigma^2
  double length_scale = 1.0;  // lambda; ignored by the exponential kernel
  double rq_alpha = 1.0;      // rational-quadratic shape, held fixed

  /// Throws std::invalid_argument unless sigma > 0 and lambda > 0.
  void validate() const;
};

/// k(x, x'). The exponential kernel is sigma^2 exp(-|x - x'| / 2) with no
/// length scale; the others follow their usual 1-D closed forms in lambda.
double kernel_eval(const KernelParams& params, double x, double x_prime);

/// Entry (i, j) = kernel_eval(xs[i], ys[j]).
Eigen::MatrixXd gram(const KernelParams& params, std::span<const double> xs, std::span<const double> ys);

/// Cholesky factor of a symmetric PSD matrix with escalating diagonal jitter.
///
/// The plain matrix is tried first; a factor is rejected if any squared pivot
/// falls below 1e-12 * mean(diag). Jitter then runs 1e-8, 1e-7, ..., 1e-2 times
/// mean(diag); failure past that throws NumericalError.
class Cholesky {
 public:
  explicit Cholesky(const Eigen::MatrixXd& matrix);

  Eigen::Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }

  /// K^-1 rhs.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// L^-1 rhs, with K = L L^T.
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& rhs) const;
  /// L^-T rhs.
  Eigen::MatrixXd solve_upper(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve_upper(const Eigen::VectorXd& rhs) const;
  /// log det K (including any jitter).
  double log_det() const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// K^-1 rhs via Cholesky; never forms an explicit inverse.
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& gram_matrix, const Eigen::MatrixXd& rhs);

/// Process-wide counters for linear-algebra audit tests.
struct SolveCounters {
  std::uint64_t factorizations = 0;
  std::uint64_t solves = 0;
};
SolveCounters solve_counters();
void reset_solve_counters();

}  // namespace fdsgp
