// fdsgp: calibrate fundamental diagrams, fit exact and sparse GPs, and run sampling sweeps.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "fdsgp/commands.hpp"
#include "fdsgp/errors.hpp"
#include "fdsgp/keyvalue.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct DataFlags {
  std::string path;
  std::string density_column = "density";
  std::string speed_column = "speed";

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "density/speed CSV (default: $FD_SGPR_DATA)");
    cmd->add_option("--density-col", density_column, "density column name");
    cmd->add_option("--speed-col", speed_column, "speed column name");
  }
  fdsgp::DensitySpeedDataset load() const {
    return fdsgp::load_csv(fdsgp::resolve_data_path(path), {density_column, speed_column});
  }
};

// Opens `path` for writing, or returns stdout for an empty path or "-".
std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return std::cout;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) throw fdsgp::DataError("cannot write '" + path + "'");
  return *holder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic fundamental diagrams with sparse variational Gaussian processes"};
  app.require_subcommand(1);

  DataFlags data_flags;
  std::string model_name = "all", prior = "none", sampler = "rs", kernel = "exp", out, fit_path;
  std::string query_spec, speed_grid_spec, surface_path;
  std::string priors_spec = "none", samplers_spec = "rs", sizes_spec = "288", seeds_spec = "0", hyper_mode = "per-cell";
  std::size_t m = fdsgp::kDefaultInducingCount;
  std::uint64_t seed = 0;
  int jobs = 1, budget = fdsgp::kDefaultHyperBudget, max_iters = fdsgp::kDefaultClusterIterations;
  double holdout = 0.0, level = 0.95;
  bool unweighted = false, deterministic = false;

  auto* calibrate = app.add_subcommand("calibrate", "WLS calibration of single-regime models");
  data_flags.attach(calibrate);
  calibrate->add_option("--model", model_name, "registry name or 'all'");
  calibrate->add_flag("--unweighted", unweighted, "use unit weights instead of bin-inverse weights");
  calibrate->add_option("--seed", seed, "multi-start seed");
  calibrate->add_option("--out", out, "output directory for calibration.csv and model documents");

  auto add_fit_flags = [&](CLI::App* cmd) {
    data_flags.attach(cmd);
    cmd->add_option("--prior,--model", prior, "mean function: registry name, model document, or 'none'");
    cmd->add_option("--kernel", kernel, "exp, rbf, matern32, matern52 or rq");
    cmd->add_option("--budget", budget, "hyperparameter objective evaluations");
    cmd->add_option("--seed", seed, "random seed");
  };

  auto* fit_gp = app.add_subcommand("fit-gp", "exact GP regression");
  add_fit_flags(fit_gp);
  fit_gp->add_option("--query", query_spec, "query densities, start:stop:step or a list (default 0:max:1)");
  fit_gp->add_option("--out", out, "posterior CSV (default stdout)");

  auto* fit_sgpr = app.add_subcommand("fit-sgpr", "sparse variational GP regression");
  add_fit_flags(fit_sgpr);
  fit_sgpr->add_option("--sampler", sampler, "rs, ss, cs or wrs");
  fit_sgpr->add_option("--m", m, "number of inducing points");
  fit_sgpr->add_option("--max-iters", max_iters, "k-means iterations for the cluster sampler");
  fit_sgpr->add_option("--out", out, "fit document path")->required();

  auto* predict = app.add_subcommand("predict", "posterior bands from a saved sparse fit");
  predict->add_option("--fit", fit_path, "fit document")->required();
  predict->add_option("--query", query_spec, "query densities, start:stop:step or a list")->required();
  predict->add_option("--out", out, "posterior CSV (default stdout)");
  predict->add_option("--surface", surface_path, "also write a (density, speed, probability_density) grid");
  predict->add_option("--speed-grid", speed_grid_spec, "speed grid for --surface (default 0:100:0.5)");

  auto* evaluate = app.add_subcommand("evaluate", "RMSE, MAPE and PWCI of a saved sparse fit");
  evaluate->add_option("--fit", fit_path, "fit document")->required();
  data_flags.attach(evaluate);
  evaluate->add_option("--level", level, "interval level for PWCI");

  auto* sample = app.add_subcommand("sample", "draw an inducing index set");
  data_flags.attach(sample);
  sample->add_option("--sampler", sampler, "rs, ss, cs or wrs");
  sample->add_option("--m", m, "sample size");
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("--max-iters", max_iters, "k-means iterations for the cluster sampler");
  sample->add_option("--out", out, "index CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "prior x sampler x m experiment grid");
  data_flags.attach(sweep);
  sweep->add_option("--prior,--model", priors_spec, "comma-separated priors ('none' for a zero mean)");
  sweep->add_option("--sampler", samplers_spec, "comma-separated samplers");
  sweep->add_option("--m", sizes_spec, "inducing sizes, list or start:stop:step");
  sweep->add_option("--seed", seeds_spec, "seeds, list or start:stop:step");
  sweep->add_option("--kernel", kernel, "kernel family");
  sweep->add_option("--budget", budget, "hyperparameter objective evaluations per cell");
  sweep->add_option("--jobs", jobs, "concurrent cells");
  sweep->add_option("--hyper-mode", hyper_mode, "per-cell or shared");
  sweep->add_option("--holdout", holdout, "fraction held out for evaluation (0 = full dataset)");
  sweep->add_flag("--deterministic", deterministic, "write wall_ms as 0 for byte-identical output");
  sweep->add_option("--out", out, "output directory for sweep.csv and curves.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    std::unique_ptr<std::ofstream> holder;
    if (calibrate->parsed()) {
      fdsgp::CalibrateOptions opts{model_name, !unweighted, seed, out};
      fdsgp::cmd_calibrate(data_flags.load(), opts, std::cout);
    } else if (fit_gp->parsed() || fit_sgpr->parsed()) {
      const auto data = data_flags.load();
      fdsgp::FitOptions opts;
      opts.prior = prior;
      opts.kernel = fdsgp::parse_kernel_kind(kernel);
      opts.budget = budget;
      opts.seed = seed;
      opts.sampler = {fdsgp::parse_sampler_kind(sampler), seed, max_iters};
      opts.inducing_size = m;
      if (fit_gp->parsed()) {
        double top = 0.0;
        for (double x : data.densities()) top = std::max(top, x);
        const auto queries = fdsgp::parse_grid_spec(query_spec.empty() ? "0:" + fdsgp::format_double(std::ceil(top)) + ":1"
                                                                       : query_spec);
        const auto result = fdsgp::cmd_fit_gp(data, opts, queries, std::cerr);
        fdsgp::write_posterior_csv(open_output(out, holder), result.posterior);
        std::cerr << "log_marginal_likelihood = " << fdsgp::format_double(result.log_marginal_likelihood) << '\n';
        fdsgp::write_metric_report(std::cerr, result.train_metrics);
      } else {
        const auto result = fdsgp::cmd_fit_sgpr(data, opts, std::cerr);
        fdsgp::save_sparse_fit(result.fit, out);
        fdsgp::write_metric_report(std::cout, result.train_metrics);
      }
    } else if (predict->parsed()) {
      const auto fit = fdsgp::load_sparse_fit(fit_path);
      fdsgp::PredictOptions opts;
      opts.queries = fdsgp::parse_grid_spec(query_spec);
      std::unique_ptr<std::ofstream> surface_holder;
      std::ostream* surface = nullptr;
      if (!surface_path.empty()) {
        opts.speed_grid = fdsgp::parse_grid_spec(speed_grid_spec.empty() ? "0:100:0.5" : speed_grid_spec);
        surface = &open_output(surface_path, surface_holder);
      }
      fdsgp::cmd_predict(fit, opts, open_output(out, holder), surface);
    } else if (evaluate->parsed()) {
      const auto fit = fdsgp::load_sparse_fit(fit_path);
      fdsgp::write_metric_report(std::cout, fdsgp::cmd_evaluate(fit, data_flags.load(), level));
    } else if (sample->parsed()) {
      const fdsgp::SamplerSpec spec{fdsgp::parse_sampler_kind(sampler), seed, max_iters};
      fdsgp::cmd_sample(data_flags.load(), m, spec, open_output(out, holder));
    } else if (sweep->parsed()) {
      fdsgp::SweepOptions opts;
      opts.priors = fdsgp::split_list(priors_spec);
      opts.samplers.clear();
      for (const auto& s : fdsgp::split_list(samplers_spec)) opts.samplers.push_back(fdsgp::parse_sampler_kind(s));
      opts.sizes = fdsgp::parse_size_list(sizes_spec);
      opts.seeds.clear();
      for (double s : fdsgp::parse_grid_spec(seeds_spec)) {
        if (s < 0.0 || s != std::floor(s)) throw std::invalid_argument("seeds must be non-negative integers");
        opts.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      opts.kernel = fdsgp::parse_kernel_kind(kernel);
      opts.budget = budget;
      opts.jobs = jobs;
      opts.hyper_mode = fdsgp::parse_hyper_mode(hyper_mode);
      opts.holdout = holdout;
      opts.deterministic = deterministic;
      const auto rows = fdsgp::cmd_sweep(data_flags.load(), opts, std::cerr);
      std::filesystem::create_directories(out);
      std::ofstream sweep_csv(std::filesystem::path(out) / "sweep.csv");
      fdsgp::write_sweep_csv(sweep_csv, rows);
      std::ofstream curves_csv(std::filesystem::path(out) / "curves.csv");
      fdsgp::write_curves_csv(curves_csv, rows);
    }
  } catch (const fdsgp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fdsgp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
