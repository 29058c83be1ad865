#include "fdsgp/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fdsgp/errors.hpp"
#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& context) {
  try {
    return parse_double(trim(text));
  } catch (const DataError&) {
    throw std::invalid_argument("bad number '" + text + "' in " + context);
  }
}

std::string params_string(const FDModel& model) {
  std::ostringstream s;
  const auto& spec = model.spec();
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    if (i > 0) s << ';';
    s << spec.params[i].name << '=' << format_double(model.params()[i]);
  }
  return s.str();
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::vector<double> parse_grid_spec(const std::string& spec) {
  const std::string s = trim(spec);
  if (s.empty()) throw std::invalid_argument("empty grid spec");
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("range spec must be start:stop:step, got '" + spec + "'");
    const double start = parse_number(parts[0], "range spec");
    const double stop = parse_number(parts[1], "range spec");
    const double step = parse_number(parts[2], "range spec");
    if (!(step > 0.0) || stop < start) {
      throw std::invalid_argument("range spec needs step > 0 and stop >= start, got '" + spec + "'");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
    return out;
  }
  for (const auto& item : split_list(s)) out.push_back(parse_number(item, "list '" + spec + "'"));
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& spec) {
  std::vector<std::size_t> out;
  for (double v : parse_grid_spec(spec)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument("sizes must be positive integers: '" + spec + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::string> split_list(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("empty list '" + spec + "'");
  return out;
}

std::string resolve_data_path(const std::string& path) {
  if (!path.empty()) return path;
  if (const char* env = std::getenv("FD_SGPR_DATA"); env != nullptr && *env != '\0') return env;
  throw std::invalid_argument("no data file: pass --data or set FD_SGPR_DATA");
}

CalibrationResult calibrate_prior(const std::string& name, const DensitySpeedDataset& data, bool weighted,
                                  std::uint64_t seed) {
  const FDModelSpec& spec = find_model(name);
  const std::vector<double> weights = weighted ? compute_weights(data) : std::vector<double>{};
  return wls_fit(spec, data, weights, std::nullopt, seed);
}

std::optional<FDModel> resolve_prior(const std::string& prior, const DensitySpeedDataset& data, std::uint64_t seed) {
  if (prior.empty() || prior == "none") return std::nullopt;
  if (std::filesystem::is_regular_file(prior)) return FDModel::from_document(KeyValueDocument::read_file(prior));
  return calibrate_prior(prior, data, true, seed).model;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationResult>& results) {
  out << "model,parameters,objective,gradient_norm,iterations,converged\n";
  for (const auto& r : results) {
    out << r.model.spec().name << ',' << params_string(r.model) << ',' << format_double(r.objective) << ','
        << format_double(r.gradient_norm) << ',' << r.iterations << ',' << (r.converged ? "true" : "false") << '\n';
  }
}

std::vector<CalibrationResult> cmd_calibrate(const DensitySpeedDataset& data, const CalibrateOptions& options,
                                             std::ostream& out) {
  std::vector<std::string> names;
  if (options.model == "all") {
    names = registry_names();
  } else {
    names.push_back(find_model(options.model).name);
  }
  const std::vector<double> weights = options.weighted ? compute_weights(data) : std::vector<double>{};
  std::vector<CalibrationResult> results;
  out << std::left << std::setw(18) << "model" << std::setw(14) << "objective" << std::setw(11) << "converged"
      << "parameters\n";
  for (const auto& name : names) {
    try {
      results.push_back(wls_fit(find_model(name), data, weights, std::nullopt, options.seed));
    } catch (const std::exception& e) {
      if (names.size() == 1) throw;
      out << std::setw(18) << name << "failed: " << e.what() << '\n';
      continue;
    }
    const auto& r = results.back();
    std::ostringstream obj;
    obj << std::setprecision(6) << r.objective;
    out << std::setw(18) << name << std::setw(14) << obj.str() << std::setw(11) << (r.converged ? "yes" : "no");
    const auto& spec = r.model.spec();
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
      out << (i ? "  " : "") << spec.params[i].name << '=' << std::setprecision(6) << r.model.params()[i];
    }
    if (!spec.note.empty()) out << "  (" << spec.note << ')';
    out << '\n';
  }
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    std::ofstream csv(std::filesystem::path(options.out_dir) / "calibration.csv");
    write_calibration_csv(csv, results);
    for (const auto& r : results) {
      r.to_document().write_file((std::filesystem::path(options.out_dir) / (r.model.spec().name + ".fdm")).string());
    }
  }
  return results;
}

GpFitResult cmd_fit_gp(const DensitySpeedDataset& data, const FitOptions& options, const std::vector<double>& queries,
                       std::ostream& log) {
  if (data.size() > kExactGpWarnSize) {
    log << "warning: exact GP on " << data.size() << " points is O(n^3); consider fit-sgpr\n";
  }
  GpFitResult result;
  const GPConfig start = default_gp_config(options.kernel, data, resolve_prior(options.prior, data, options.seed));
  result.config = optimize_hyperparameters(start, data, options.budget, options.seed);
  result.log_marginal_likelihood = log_marginal_likelihood(result.config, data);
  result.train_metrics = evaluate_metrics(gp_fit_predict(result.config, data, data.densities()), data);
  result.posterior = gp_fit_predict(result.config, data, queries);
  return result;
}

SgprFitResult cmd_fit_sgpr(const DensitySpeedDataset& data, const FitOptions& options, std::ostream& log) {
  SamplerSpec sampler = options.sampler;
  sampler.seed = options.seed;
  const InducingSet inducing = draw_inducing(data, options.inducing_size, sampler);
  const GPConfig start = default_gp_config(options.kernel, data, resolve_prior(options.prior, data, options.seed));
  const GPConfig config = optimize_sgpr_hyperparameters(start, data, inducing, options.budget, options.seed);
  SgprFitResult result{sgpr_fit(config, data, inducing), {}};
  result.train_metrics = evaluate_metrics(sgpr_predict(result.fit, data.densities()), data);
  log << "inducing " << inducing.provenance << " m=" << inducing.size() << " bound=" << format_double(result.fit.bound)
      << '\n';
  return result;
}

GPPosterior cmd_predict(const SparseFit& fit, const PredictOptions& options, std::ostream& out,
                        std::ostream* surface) {
  for (double q : options.queries) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw std::invalid_argument("query densities must be finite and >= 0");
  }
  GPPosterior post = sgpr_predict(fit, options.queries);
  write_posterior_csv(out, post);
  if (surface != nullptr && !options.speed_grid.empty()) write_surface_csv(*surface, post, options.speed_grid);
  return post;
}

MetricReport cmd_evaluate(const SparseFit& fit, const DensitySpeedDataset& data, double level) {
  return evaluate_metrics(sgpr_predict(fit, data.densities()), data, level);
}

void write_metric_report(std::ostream& out, const MetricReport& report) {
  KeyValueDocument doc;
  doc.set("rmse", report.rmse);
  doc.set("mape", report.mape);
  doc.set("pwci", report.pwci);
  doc.set("n_points", static_cast<long long>(report.n_points));
  doc.set("mape_excluded", static_cast<long long>(report.mape_excluded));
  doc.write(out);
}

InducingSet cmd_sample(const DensitySpeedDataset& data, std::size_t size, const SamplerSpec& spec, std::ostream& out) {
  InducingSet set = draw_inducing(data, size, spec);
  write_indices_csv(out, set);
  return set;
}

HyperMode parse_hyper_mode(const std::string& name) {
  if (name == "per-cell") return HyperMode::kPerCell;
  if (name == "shared") return HyperMode::kShared;
  throw std::invalid_argument("hyper mode must be per-cell or shared, got '" + name + "'");
}

std::vector<SweepRow> cmd_sweep(const DensitySpeedDataset& data, const SweepOptions& options, std::ostream& log) {
  if (options.priors.empty() || options.samplers.empty() || options.sizes.empty() || options.seeds.empty()) {
    throw std::invalid_argument("sweep grid is empty");
  }
  if (options.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
  if (options.holdout < 0.0 || options.holdout >= 1.0) throw std::invalid_argument("--holdout must lie in [0, 1)");

  // Priors are calibrated once on the full dataset.
  std::map<std::string, std::optional<FDModel>> priors;
  std::map<std::string, std::string> prior_errors;
  for (const auto& p : options.priors) {
    if (priors.count(p) || prior_errors.count(p)) continue;
    try {
      priors.emplace(p, resolve_prior(p, data, 0));
    } catch (const std::exception& e) {
      prior_errors.emplace(p, e.what());
      log << "prior " << p << " failed: " << e.what() << '\n';
    }
  }

  struct Cell {
    std::string prior;
    SamplerKind sampler;
    std::size_t m;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& p : options.priors)
    for (SamplerKind s : options.samplers)
      for (std::size_t m : options.sizes)
        for (std::uint64_t seed : options.seeds) cells.push_back({p, s, m, seed});

  auto split = [&](std::uint64_t seed) {
    if (options.holdout == 0.0) return std::make_pair(data, data);
    return train_test_split(data, seed, 1.0 - options.holdout);
  };

  // Shared mode: one hyperparameter setting per (prior, seed), tuned on the first sampler
  // at the largest grid size that fits the training split.
  std::map<std::pair<std::string, std::uint64_t>, GPConfig> shared;
  if (options.hyper_mode == HyperMode::kShared) {
    for (const auto& [name, prior] : priors) {
      for (std::uint64_t seed : options.seeds) {
        try {
          const auto [train, test] = split(seed);
          std::size_t m = 0;
          for (std::size_t s : options.sizes)
            if (s <= train.size()) m = std::max(m, s);
          if (m == 0) continue;
          const InducingSet inducing = draw_inducing(train, m, {options.samplers.front(), seed});
          const GPConfig start = default_gp_config(options.kernel, train, prior);
          shared.emplace(std::make_pair(name, seed),
                         optimize_sgpr_hyperparameters(start, train, inducing, options.budget, seed));
        } catch (const std::exception& e) {
          log << "shared hyperparameters for " << name << " seed " << seed << " failed: " << e.what() << '\n';
        }
      }
    }
  }

  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      SweepRow& row = rows[i];
      row.prior = c.prior;
      row.sampler = to_string(c.sampler);
      row.m = c.m;
      row.seed = c.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (auto it = prior_errors.find(c.prior); it != prior_errors.end()) throw DataError(it->second);
        const auto [train, test] = split(c.seed);
        const InducingSet inducing = draw_inducing(train, c.m, {c.sampler, c.seed});
        GPConfig config;
        if (options.hyper_mode == HyperMode::kShared) {
          const auto it = shared.find({c.prior, c.seed});
          if (it == shared.end()) throw DataError("no shared hyperparameters available");
          config = it->second;
        } else {
          const GPConfig start = default_gp_config(options.kernel, train, priors.at(c.prior));
          config = optimize_sgpr_hyperparameters(start, train, inducing, options.budget, c.seed);
        }
        const SparseFit fit = sgpr_fit(config, train, inducing);
        row.metrics = evaluate_metrics(sgpr_predict(fit, test.densities()), test);
        row.bound = fit.bound;
      } catch (const std::exception& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.metrics = {nan, nan, nan, 0, 0};
        row.bound = nan;
        row.status = "error: " + csv_safe(e.what());
        std::lock_guard lock(log_mutex);
        log << "cell " << c.prior << '/' << row.sampler << "/m=" << c.m << "/seed=" << c.seed << " failed: " << e.what()
            << '\n';
      }
      const auto t1 = std::chrono::steady_clock::now();
      row.wall_ms = options.deterministic ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  };
  const int threads = std::min<int>(options.jobs, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "prior,sampler,m,seed,rmse,mape,pwci,bound,wall_ms,status\n";
  for (const auto& r : rows) {
    out << r.prior << ',' << r.sampler << ',' << r.m << ',' << r.seed << ',' << format_double(r.metrics.rmse) << ','
        << format_double(r.metrics.mape) << ',' << format_double(r.metrics.pwci) << ',' << format_double(r.bound)
        << ',' << format_double(r.wall_ms) << ',' << r.status << '\n';
  }
}

void write_curves_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "prior,sampler,seed,m,metric,value\n";
  for (const auto& r : rows) {
    const std::pair<const char*, double> metrics[] = {
        {"rmse", r.metrics.rmse}, {"mape", r.metrics.mape}, {"pwci", r.metrics.pwci}, {"bound", r.bound}};
    for (const auto& [name, value] : metrics) {
      out << r.prior << ',' << r.sampler << ',' << r.seed << ',' << r.m << ',' << name << ',' << format_double(value)
          << '\n';
    }
  }
}

}  // namespace fdsgp
