#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdsgp/calibration.hpp"
#include "fdsgp/dataset.hpp"
#include "fdsgp/gpr.hpp"
#include "fdsgp/kernels.hpp"
#include "fdsgp/metrics.hpp"
#include "fdsgp/sampling.hpp"
#include "fdsgp/sgpr.hpp"

namespace fdsgp {

inline constexpr std::size_t kExactGpWarnSize = 3000;
inline constexpr int kDefaultHyperBudget = 200;

/// "start:stop:step" (stop inclusive) or a comma-separated list of numbers.
std::vector<double> parse_grid_spec(const std::string& spec);
/// Comma-separated list, or a range spec of integers.
std::vector<std::size_t> parse_size_list(const std::string& spec);
std::vector<std::string> split_list(const std::string& spec);

/// Uses `path` if non-empty, then $FD_SGPR_DATA. Throws std::invalid_argument if neither is set.
std::string resolve_data_path(const std::string& path);

/// Calibrates a registry model by WLS with bin-inverse weights (or unit weights when `weighted` is false).
CalibrationResult calibrate_prior(const std::string& name, const DensitySpeedDataset& data, bool weighted = true,
                                  std::uint64_t seed = 0);

/// "none" gives no mean function; an existing file is read as a model document; anything
/// else is a registry name, calibrated on `data`.
std::optional<FDModel> resolve_prior(const std::string& prior, const DensitySpeedDataset& data, std::uint64_t seed = 0);

struct CalibrateOptions {
  std::string model = "all";
  bool weighted = true;
  std::uint64_t seed = 0;
  std::string out_dir;  // calibration.csv plus one <model>.fdm document per model; empty for stdout only
};

/// Prints an aligned parameter table to `out` and returns the results in registry order.
std::vector<CalibrationResult> cmd_calibrate(const DensitySpeedDataset& data, const CalibrateOptions& options,
                                             std::ostream& out);
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationResult>& results);

struct FitOptions {
  std::string prior = "none";
  KernelKind kernel = KernelKind::kExponential;
  int budget = kDefaultHyperBudget;
  std::uint64_t seed = 0;
  SamplerSpec sampler;
  std::size_t inducing_size = kDefaultInducingCount;
};

struct GpFitResult {
  GPConfig config;
  double log_marginal_likelihood = 0.0;
  MetricReport train_metrics;
  GPPosterior posterior;  // at the requested queries
};

/// Exact GP: optimizes hyperparameters, reports training metrics and predicts at `queries`.
GpFitResult cmd_fit_gp(const DensitySpeedDataset& data, const FitOptions& options, const std::vector<double>& queries,
                       std::ostream& log);

struct SgprFitResult {
  SparseFit fit;
  MetricReport train_metrics;
};

SgprFitResult cmd_fit_sgpr(const DensitySpeedDataset& data, const FitOptions& options, std::ostream& log);

struct PredictOptions {
  std::vector<double> queries;
  std::vector<double> speed_grid;  // non-empty requests the surface CSV
};

/// Writes the posterior CSV to `out` and, when requested, the surface CSV to `surface`.
GPPosterior cmd_predict(const SparseFit& fit, const PredictOptions& options, std::ostream& out,
                        std::ostream* surface = nullptr);

MetricReport cmd_evaluate(const SparseFit& fit, const DensitySpeedDataset& data, double level = 0.95);
void write_metric_report(std::ostream& out, const MetricReport& report);

InducingSet cmd_sample(const DensitySpeedDataset& data, std::size_t size, const SamplerSpec& spec, std::ostream& out);

enum class HyperMode { kPerCell, kShared };
HyperMode parse_hyper_mode(const std::string& name);

struct SweepOptions {
  std::vector<std::string> priors = {"none"};
  std::vector<SamplerKind> samplers = {SamplerKind::kSimpleRandom};
  std::vector<std::size_t> sizes = {kDefaultInducingCount};
  std::vector<std::uint64_t> seeds = {0};
  KernelKind kernel = KernelKind::kExponential;
  int budget = kDefaultHyperBudget;
  int jobs = 1;
  HyperMode hyper_mode = HyperMode::kPerCell;
  double holdout = 0.0;        // fraction held out for evaluation; 0 evaluates on the full dataset
  bool deterministic = false;  // writes wall_ms as 0
};

struct SweepRow {
  std::string prior;
  std::string sampler;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  double bound = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

/// Runs every (prior, sampler, m, seed) cell; a failing cell yields a row with status
/// "error: ..." and NaN metrics. Rows come back in grid order.
std::vector<SweepRow> cmd_sweep(const DensitySpeedDataset& data, const SweepOptions& options, std::ostream& log);

/// prior,sampler,m,seed,rmse,mape,pwci,bound,wall_ms,status
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Long format: prior,sampler,seed,m,metric,value with one line per (row, metric).
void write_curves_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace fdsgp
