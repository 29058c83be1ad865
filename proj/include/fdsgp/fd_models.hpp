#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

/// Densities below this are clamped before formulas with log(rho) or 1/rho.
inline constexpr double kDensityGuardFloor = 1e-6;

/// How a parameter is seeded from data before calibration.
enum class ParamRole {
  kFreeFlowSpeed,
  kCriticalSpeed,
  kMinimumSpeed,
  kJamDensity,
  kCriticalDensity,
  kShape,
};

struct ParamSpec {
  std::string name;
  double lower;
  double upper;
  ParamRole role;
  double default_value;  // used for shape-like roles and as a fallback
};

using SpeedFormula = std::function<double(double density, std::span<const double> params)>;

/// A single-regime speed-density family v = f(rho; theta).
struct FDModelSpec {
  std::string name;          // registry key, e.g. "greenshields"
  std::string display_name;  // e.g. "Greenshields"
  std::vector<ParamSpec> params;
  SpeedFormula formula;  // raw formula, no bound checks
  bool guarded = false;  // clamps density to kDensityGuardFloor
  std::string note;      // informational flag, empty when none
  /// Representative parameters inside the bounds; used as a default prior
  /// when no calibration is available and in tests.
  std::vector<double> typical_params;

  std::size_t arity() const { return params.size(); }
  std::vector<std::string> param_names() const;
  std::optional<std::size_t> param_index(const std::string& name) const;
  bool within_bounds(std::span<const double> values) const;
  /// Formula with the density guard applied; no bound check.
  double speed(double density, std::span<const double> values) const;
};

/// All single-regime families, in the order of the reference table.
const std::vector<FDModelSpec>& registry();

/// Case-insensitive lookup; '-' and ' ' are treated as '_'. Throws NotFoundError.
const FDModelSpec& find_model(const std::string& name);
std::vector<std::string> registry_names();

/// A calibrated (or hand-set) instance of a registry family.
class FDModel {
 public:
  /// Throws std::invalid_argument if params have the wrong arity or leave the bounds.
  FDModel(const FDModelSpec& spec, std::vector<double> params);

  const FDModelSpec& spec() const { return *spec_; }
  const std::vector<double>& params() const { return params_; }
  double param(const std::string& name) const;

  /// Speed in mph. Throws std::invalid_argument on negative density.
  double evaluate(double density) const;
  /// Flow q = rho * v in veh/h.
  double evaluate_flow(double density) const;

  KeyValueDocument to_document(const std::string& prefix = {}) const;
  static FDModel from_document(const KeyValueDocument& doc, const std::string& prefix = {});

 private:
  const FDModelSpec* spec_;
  std::vector<double> params_;
};

double evaluate(const FDModel& model, double density);
double evaluate_flow(const FDModel& model, double density);

/// Piecewise fixed-constant model. Piece i covers (breakpoints[i-1], breakpoints[i]];
/// the first piece starts at 0 and the last extends to infinity.
struct MultiRegimeModel {
  std::string name;
  std::vector<double> breakpoints;
  std::vector<std::function<double(double)>> pieces;
};

const std::vector<MultiRegimeModel>& multi_regime_models();
const MultiRegimeModel& find_multi_regime(const std::string& name);
double multi_regime_evaluate(const MultiRegimeModel& model, double density);

}  // namespace fdsgp
