#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace fdsgp::optim {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct NelderMeadOptions {
  int max_evaluations = 1000;
  double x_tolerance = 1e-10;
  double f_tolerance = 1e-12;
  /// Initial simplex edge per coordinate; defaults to 10% of |x0| (or 0.1).
  Eigen::VectorXd initial_step;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  /// Best vertex value after each iteration; never increases.
  std::vector<double> trace;
};

/// Minimizes `f` over the box. Trial points are projected onto the box. The
/// objective may return +inf to reject a point.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Box& box, const NelderMeadOptions& options = {});

}  // namespace fdsgp::optim
