#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fdsgp/dataset.hpp"
#include "fdsgp/fd_models.hpp"
#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

struct CalibrationOptions {
  int starts = 8;
  int max_iterations = 5000;
  /// Converged when the projected gradient norm <= gradient_tolerance * (1 + objective).
  double gradient_tolerance = 1e-6;
  double step_tolerance = 1e-10;
  /// Simplex evaluations spent per start before Gauss-Newton refinement.
  int simplex_evaluations_per_parameter = 150;
};

struct CalibrationResult {
  FDModel model;
  double objective = 0.0;      // sum_i w_i (v_i - f(rho_i))^2
  double gradient_norm = 0.0;  // projected onto the feasible box
  int iterations = 0;
  bool converged = false;
  /// Objective after each iteration of the winning start; non-increasing.
  std::vector<double> objective_trace;

  KeyValueDocument to_document() const;
};

/// Weighted sum of squared speed residuals.
double weighted_sse(const FDModelSpec& spec, const DensitySpeedDataset& data, std::span<const double> weights,
                    std::span<const double> params);

/// Norm of the central-difference gradient of weighted_sse at `params`
/// (step max(1e-6, 1e-6 |theta_j|)).
double first_order_residual(const FDModelSpec& spec, const DensitySpeedDataset& data,
                            std::span<const double> weights, std::span<const double> params);

/// As first_order_residual, but components pushing against an active bound are dropped.
double projected_first_order_residual(const FDModelSpec& spec, const DensitySpeedDataset& data,
                                      std::span<const double> weights, std::span<const double> params);

/// Data-driven starting point: v_f from the 99th speed percentile, rho_j from
/// 1.5 x max density, rho_critical/v_critical at the max-flow observation, shape
/// parameters from their defaults. Clamped into the bounds.
std::vector<double> default_initial_params(const FDModelSpec& spec, const DensitySpeedDataset& data);

/// Weighted least-squares calibration of `spec` against `data`.
///
/// Multi-start (seeded) bounded simplex search followed by damped Gauss-Newton
/// with central-difference Jacobians. `init`, when given, replaces the default
/// data-driven start. Throws DataError when all densities coincide and the
/// family has more than one parameter.
CalibrationResult wls_fit(const FDModelSpec& spec, const DensitySpeedDataset& data, std::span<const double> weights,
                          const std::optional<std::vector<double>>& init = std::nullopt, std::uint64_t seed = 0,
                          const CalibrationOptions& options = {});

}  // namespace fdsgp
