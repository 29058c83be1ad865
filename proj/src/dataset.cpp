#include "fdsgp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fdsgp/errors.hpp"
#include "fdsgp/keyvalue.hpp"

namespace fdsgp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  for (auto& f : fields) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string{} : f.substr(a, b - a + 1);
  }
  return fields;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("CSV header has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

DensitySpeedDataset::DensitySpeedDataset(std::vector<DensitySpeedPair> pairs,
                                         std::optional<std::vector<double>> weights,
                                         std::string source_label)
    : pairs_(std::move(pairs)), weights_(std::move(weights)), source_label_(std::move(source_label)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (!std::isfinite(p.density) || !std::isfinite(p.speed) || p.density < 0.0 || p.speed < 0.0) {
      throw DataError("observation " + std::to_string(i) +
                      " must have finite non-negative density and speed");
    }
  }
  if (weights_) {
    if (weights_->size() != pairs_.size()) {
      throw DataError("weight count " + std::to_string(weights_->size()) +
                      " does not match observation count " + std::to_string(pairs_.size()));
    }
    for (double w : *weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DataError("weights must be finite and positive");
    }
  }
}

std::vector<double> DensitySpeedDataset::densities() const {
  std::vector<double> out(pairs_.size());
  std::transform(pairs_.begin(), pairs_.end(), out.begin(), [](const auto& p) { return p.density; });
  return out;
}

std::vector<double> DensitySpeedDataset::speeds() const {
  std::vector<double> out(pairs_.size());
  std::transform(pairs_.begin(), pairs_.end(), out.begin(), [](const auto& p) { return p.speed; });
  return out;
}

DensitySpeedDataset DensitySpeedDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<DensitySpeedPair> pairs;
  pairs.reserve(indices.size());
  std::optional<std::vector<double>> weights;
  if (weights_) weights.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= pairs_.size()) throw std::out_of_range("subset index out of range");
    pairs.push_back(pairs_[i]);
    if (weights_) weights->push_back((*weights_)[i]);
  }
  return DensitySpeedDataset(std::move(pairs), std::move(weights), source_label_);
}

DensitySpeedDataset DensitySpeedDataset::with_weights(std::vector<double> weights) const {
  return DensitySpeedDataset(pairs_, std::move(weights), source_label_);
}

DensitySpeedDataset parse_csv(std::istream& in, const CsvColumns& columns, const std::string& label) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty (header row required)");
  const auto header = split_csv_line(line);
  const std::size_t di = column_index(header, columns.density);
  const std::size_t si = column_index(header, columns.speed);

  std::vector<DensitySpeedPair> pairs;
  std::vector<std::string> problems;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() <= std::max(di, si)) {
      problems.push_back("line " + std::to_string(line_no) + ": missing column");
      continue;
    }
    try {
      const double rho = parse_double(fields[di]);
      const double v = parse_double(fields[si]);
      if (!std::isfinite(rho) || !std::isfinite(v) || rho < 0.0 || v < 0.0) {
        problems.push_back("line " + std::to_string(line_no) + ": values must be finite and >= 0");
        continue;
      }
      pairs.push_back({rho, v});
    } catch (const DataError& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "malformed CSV rows";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << problems[i];
    if (problems.size() > shown) msg << "\n  ... " << problems.size() - shown << " more";
    throw DataError(msg.str());
  }
  if (pairs.empty()) throw DataError("CSV contains no observations");
  return DensitySpeedDataset(std::move(pairs), std::nullopt, label);
}

DensitySpeedDataset load_csv(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, columns, path);
}

void write_csv(std::ostream& out, const DensitySpeedDataset& data, const CsvColumns& columns) {
  out << columns.density << ',' << columns.speed << '\n';
  for (const auto& p : data.pairs()) out << format_double(p.density) << ',' << format_double(p.speed) << '\n';
}

std::vector<double> compute_weights(const DensitySpeedDataset& data, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (data.empty()) throw DataError("cannot weight an empty dataset");

  const auto rho = data.densities();
  const auto [lo_it, hi_it] = std::minmax_element(rho.begin(), rho.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;

  std::vector<int> bin_of(rho.size(), 0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>(std::floor((rho[i] - lo) / width)) : 0;
    b = std::clamp(b, 0, bins - 1);
    bin_of[i] = b;
    ++counts[static_cast<std::size_t>(b)];
  }
  const auto occupied = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  const double mean_count = static_cast<double>(rho.size()) / static_cast<double>(occupied);

  std::vector<double> w(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    w[i] = mean_count / static_cast<double>(counts[static_cast<std::size_t>(bin_of[i])]);
  }
  // Exact mean-1 up to rounding of the final division.
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  for (double& x : w) x /= mean;
  return w;
}

void write_weights_csv(std::ostream& out, std::span<const double> weights) {
  out << "weight\n";
  for (double w : weights) out << format_double(w) << '\n';
}

std::pair<DensitySpeedDataset, DensitySpeedDataset> train_test_split(const DensitySpeedDataset& data,
                                                                     std::uint64_t seed,
                                                                     double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1]");
  }
  if (data.empty()) throw DataError("cannot split an empty dataset");

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test)};
}

}  // namespace fdsgp
