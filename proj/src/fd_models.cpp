#include "fdsgp/fd_models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "fdsgp/errors.hpp"

namespace fdsgp {

namespace {

using P = std::span<const double>;

ParamSpec free_flow_speed() { return {"v_f", 1.0, 200.0, ParamRole::kFreeFlowSpeed, 60.0}; }
ParamSpec critical_speed() { return {"v_critical", 0.01, 200.0, ParamRole::kCriticalSpeed, 30.0}; }
ParamSpec jam_density() { return {"rho_j", 1.0, 5000.0, ParamRole::kJamDensity, 150.0}; }
ParamSpec critical_density() { return {"rho_critical", 0.1, 5000.0, ParamRole::kCriticalDensity, 30.0}; }
ParamSpec shape(const char* name, double lo, double hi, double init) {
  return {name, lo, hi, ParamRole::kShape, init};
}

std::vector<FDModelSpec> build_registry() {
  std::vector<FDModelSpec> r;

  r.push_back({"greenshields", "Greenshields", {free_flow_speed(), jam_density()},
               [](double rho, P p) { return p[0] * (1.0 - rho / p[1]); }, false, "", {52.12, 76.68}});

  r.push_back({"greenberg", "Greenberg", {critical_speed(), jam_density()},
               [](double rho, P p) { return p[0] * std::log(p[1] / rho); }, true, "", {22.06, 92.49}});

  r.push_back({"underwood", "Underwood", {free_flow_speed(), critical_density()},
               [](double rho, P p) { return p[0] * std::exp(-rho / p[1]); }, false, "", {80.51, 92.49}});

  r.push_back({"newell", "Newell", {free_flow_speed(), jam_density(), shape("lambda", 1.0, 1e6, 1000.0)},
               [](double rho, P p) {
                 return p[0] * (1.0 - std::exp(-(p[2] / p[0]) * (1.0 / rho - 1.0 / p[1])));
               },
               true, "", {69.69, 25.0, 1209.02}});

  r.push_back({"drake", "Drake", {free_flow_speed(), critical_density()},
               [](double rho, P p) {
                 const double x = rho / p[1];
                 return p[0] * std::exp(-x * x);
               },
               false, "", {80.50, 50.01}});

  r.push_back({"pipes", "Pipes", {free_flow_speed(), jam_density(), shape("n", 0.01, 20.0, 1.0)},
               [](double rho, P p) { return p[0] * std::pow(std::max(0.0, 1.0 - rho / p[1]), p[2]); },
               false, "", {76.05, 51.0, 1.22}});

  r.push_back({"drew", "Drew",
               {free_flow_speed(), jam_density(), shape("m1", 0.01, 20.0, 1.0), shape("m2", 0.01, 20.0, 1.0)},
               [](double rho, P p) {
                 const double inner = std::max(0.0, 1.0 - std::pow(rho / p[1], p[2]));
                 return p[0] * std::pow(inner, p[3]);
               },
               false, "", {70.0, 120.0, 1.5, 1.5}});

  r.push_back({"papageorgiou", "Papageorgiou", {free_flow_speed(), jam_density(), shape("alpha", 0.01, 20.0, 1.0)},
               [](double rho, P p) { return p[0] * std::exp(-std::pow(rho / p[1], p[2]) / p[2]); }, false, "",
               {79.49, 24.83, 1.02}});

  // The 372e-8 sits inside the logistic denominator, exactly as tabulated.
  r.push_back({"kerner_konhauser", "Kerner-Konhauser", {free_flow_speed(), critical_density()},
               [](double rho, P p) {
                 return p[0] / (1.0 + std::exp((rho / p[1] - 0.25) / 0.06) - 372e-8);
               },
               false, "", {60.17, 106.27}});

  r.push_back({"del_castillo", "Del Castillo-Benitez",
               {free_flow_speed(), jam_density(), shape("v_j", 0.01, 200.0, 10.0)},
               [](double rho, P p) { return p[0] * (1.0 - std::exp((p[2] / p[0]) * (1.0 - p[1] / rho))); }, true,
               "", {69.69, 108.41, 11.15}});

  r.push_back({"jayakrishnan", "Jayakrishnan",
               {free_flow_speed(), {"v_min", 0.0, 200.0, ParamRole::kMinimumSpeed, 5.0}, jam_density()},
               [](double rho, P p) { return p[1] + (p[0] - p[1]) * (1.0 - rho / p[2]); }, false, "",
               {52.1198, 35.0052, 25.1779}});

  r.push_back({"ardekani", "Ardekani-Ghandehari",
               {critical_speed(), jam_density(), shape("rho_min", 0.0, 1000.0, 1.0)},
               [](double rho, P p) { return p[0] * std::log((p[1] + p[2]) / (rho + p[2])); }, true, "",
               {40.41, 56.84, 0.01}});

  r.push_back({"macnicholas", "MacNicholas",
               {free_flow_speed(), jam_density(), shape("n", 0.01, 20.0, 1.0), shape("m", 0.0, 1e6, 1.0)},
               [](double rho, P p) {
                 const double jn = std::pow(p[1], p[2]);
                 const double rn = std::pow(rho, p[2]);
                 return p[0] * (jn - rn) / (jn + p[3] * rn);
               },
               false, "non-physical calibration possible (jam density may lose physical meaning)",
               {70.0, 150.0, 2.0, 1.0}});

  r.push_back({"wang", "Wang",
               {free_flow_speed(), critical_speed(), critical_density(), shape("theta1", 0.01, 1000.0, 1.0),
                shape("theta2", 0.01, 100.0, 1.0)},
               [](double rho, P p) {
                 return p[1] + (p[0] - p[1]) / std::pow(1.0 + std::exp((rho - p[2]) / p[3]), p[4]);
               },
               false, "", {65.23, 6.02, 9.73, 1.53, 0.10}});

  r.push_back({"cheng", "Cheng", {free_flow_speed(), critical_density(), shape("m", 1.0, 8.53, 1.0)},
               [](double rho, P p) { return p[0] / std::pow(1.0 + std::pow(rho / p[1], p[2]), 2.0 / p[2]); },
               false, "", {68.70, 20.02, 2.21}});
  return r;
}

std::string normalize_key(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == ' ') {
      key += '_';
    } else {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (key == "kerner") return "kerner_konhauser";
  if (key == "del_castillo_benitez") return "del_castillo";
  if (key == "ardekani_ghandehari") return "ardekani";
  return key;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

std::vector<std::string> FDModelSpec::param_names() const {
  std::vector<std::string> out;
  for (const auto& p : params) out.push_back(p.name);
  return out;
}

std::optional<std::size_t> FDModelSpec::param_index(const std::string& pname) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == pname) return i;
  }
  return std::nullopt;
}

bool FDModelSpec::within_bounds(std::span<const double> values) const {
  if (values.size() != params.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= params[i].lower && values[i] <= params[i].upper)) return false;
  }
  return true;
}

double FDModelSpec::speed(double density, std::span<const double> values) const {
  return formula(guarded ? std::max(density, kDensityGuardFloor) : density, values);
}

const std::vector<FDModelSpec>& registry() {
  static const std::vector<FDModelSpec> specs = build_registry();
  return specs;
}

std::vector<std::string> registry_names() {
  std::vector<std::string> out;
  for (const auto& s : registry()) out.push_back(s.name);
  return out;
}

const FDModelSpec& find_model(const std::string& name) {
  const std::string key = normalize_key(name);
  for (const auto& s : registry()) {
    if (s.name == key) return s;
  }
  throw NotFoundError("unknown model '" + name + "'; known models: " + join_names(registry_names()));
}

FDModel::FDModel(const FDModelSpec& spec, std::vector<double> params) : spec_(&spec), params_(std::move(params)) {
  if (params_.size() != spec.arity()) {
    throw std::invalid_argument(spec.name + " expects " + std::to_string(spec.arity()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& ps = spec.params[i];
    if (!(params_[i] >= ps.lower && params_[i] <= ps.upper)) {
      throw std::invalid_argument(spec.name + ": parameter " + ps.name + " = " + format_double(params_[i]) +
                                  " outside [" + format_double(ps.lower) + ", " + format_double(ps.upper) + "]");
    }
  }
}

double FDModel::param(const std::string& pname) const {
  const auto idx = spec_->param_index(pname);
  if (!idx) throw NotFoundError(spec_->name + " has no parameter '" + pname + "'");
  return params_[*idx];
}

double FDModel::evaluate(double density) const {
  if (density < 0.0) throw std::invalid_argument("density must be >= 0");
  return spec_->speed(density, params_);
}

double FDModel::evaluate_flow(double density) const { return density * evaluate(density); }

KeyValueDocument FDModel::to_document(const std::string& prefix) const {
  KeyValueDocument doc;
  doc.set(prefix + "model", spec_->name);
  for (std::size_t i = 0; i < params_.size(); ++i) doc.set(prefix + spec_->params[i].name, params_[i]);
  return doc;
}

FDModel FDModel::from_document(const KeyValueDocument& doc, const std::string& prefix) {
  const FDModelSpec& spec = find_model(doc.get(prefix + "model"));
  std::vector<double> values;
  for (const auto& p : spec.params) values.push_back(doc.get_double(prefix + p.name));
  return FDModel(spec, std::move(values));
}

double evaluate(const FDModel& model, double density) { return model.evaluate(density); }
double evaluate_flow(const FDModel& model, double density) { return model.evaluate_flow(density); }

const std::vector<MultiRegimeModel>& multi_regime_models() {
  static const std::vector<MultiRegimeModel> models = {
      {"edie",
       {50.0},
       {[](double rho) { return 54.9 * std::exp(-rho / 163.9); },
        [](double rho) { return 26.8 * std::log(162.5 / rho); }}},
      {"two_regime", {65.0}, {[](double rho) { return 60.9 - 0.515 * rho; }, [](double rho) { return 40.0 - 0.265 * rho; }}},
      {"modified_greenberg",
       {35.0},
       {[](double) { return 48.0; }, [](double rho) { return 32.0 * std::log(145.5 / rho); }}},
      {"three_regime",
       {40.0, 65.0},
       {[](double rho) { return 50.0 - 0.098 * rho; }, [](double rho) { return 81.4 - 0.913 * rho; },
        [](double rho) { return 40.0 - 0.265 * rho; }}},
  };
  return models;
}

const MultiRegimeModel& find_multi_regime(const std::string& name) {
  const std::string key = normalize_key(name);
  for (const auto& m : multi_regime_models()) {
    if (m.name == key) return m;
  }
  throw NotFoundError("unknown multi-regime model '" + name + "'");
}

double multi_regime_evaluate(const MultiRegimeModel& model, double density) {
  if (density < 0.0) throw std::invalid_argument("density must be >= 0");
  const auto it = std::lower_bound(model.breakpoints.begin(), model.breakpoints.end(), density);
  return model.pieces[static_cast<std::size_t>(it - model.breakpoints.begin())](density);
}

}  // namespace fdsgp
