#include "fdsgp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fdsgp::optim {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Box& box, const NelderMeadOptions& options) {
  const Eigen::Index dim = x0.size();
  NelderMeadResult result;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  simplex.push_back(box.clamp(x0));
  values.push_back(eval(simplex[0]));
  result.x = simplex[0];
  result.value = values[0];
  if (dim == 0 || options.max_evaluations <= 1) {
    result.evaluations = evals;
    return result;
  }

  for (Eigen::Index j = 0; j < dim; ++j) {
    double step = options.initial_step.size() == dim ? options.initial_step[j]
                                                     : (x0[j] != 0.0 ? 0.1 * std::abs(x0[j]) : 0.1);
    Eigen::VectorXd v = simplex[0];
    v[j] += step;
    if (v[j] > box.upper[j]) v[j] = simplex[0][j] - step;
    v = box.clamp(v);
    if (v[j] == simplex[0][j]) v[j] = 0.5 * (box.lower[j] + box.upper[j]);
    simplex.push_back(v);
    values.push_back(eval(v));
  }

  std::vector<std::size_t> order(simplex.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex.swap(s2);
    values.swap(v2);
  };

  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  sort_simplex();
  const auto n = static_cast<std::size_t>(dim);
  while (evals < options.max_evaluations) {
    ++result.iterations;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd& worst = simplex[n];
    const Eigen::VectorXd xr = box.clamp(centroid + kReflect * (centroid - worst));
    const double fr = eval(xr);
    if (fr < values[0]) {
      const Eigen::VectorXd xe = box.clamp(centroid + kExpand * (xr - centroid));
      const double fe = evals < options.max_evaluations ? eval(xe) : std::numeric_limits<double>::infinity();
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const Eigen::VectorXd xc =
          outside ? box.clamp(centroid + kContract * (xr - centroid)) : box.clamp(centroid + kContract * (worst - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : values[n])) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n && evals < options.max_evaluations; ++i) {
          simplex[i] = box.clamp(simplex[0] + kShrink * (simplex[i] - simplex[0]));
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
    result.trace.push_back(values[0]);

    double spread_x = 0.0;
    for (std::size_t i = 1; i <= n; ++i) spread_x = std::max(spread_x, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    const double spread_f = std::abs(values[n] - values[0]);
    if (spread_x <= options.x_tolerance * (1.0 + simplex[0].cwiseAbs().maxCoeff()) &&
        spread_f <= options.f_tolerance * (1.0 + std::abs(values[0]))) {
      break;
    }
  }
  result.x = simplex[0];
  result.value = values[0];
  result.evaluations = evals;
  return result;
}

}  // namespace fdsgp::optim
