#include "qkdnn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "qkdnn/errors.hpp"
#include "qkdnn/solver.hpp"

namespace qkdnn::evaluation {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int bin_of(double d) {
  const int b = static_cast<int>(std::floor((d + 1.0) / kBinWidth));
  return std::clamp(b, 0, kBins - 1);
}

}  // namespace

double relative_deviation(double prediction, double label) {
  if (!(label > 0.0)) throw InvalidArgument("relative deviation needs a positive label");
  return (prediction - label) / label;
}

DeviationStats summarize(const std::vector<double>& d) {
  DeviationStats s;
  s.n = d.size();
  if (d.empty()) return s;
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  double sum = 0.0;
  std::size_t secure = 0, within = 0;
  for (double v : d) {
    sum += v;
    secure += v < 0.0;
    within += std::abs(v) <= 0.25;
  }
  const auto n = static_cast<double>(d.size());
  s.mean = sum / n;
  s.secure_fraction = static_cast<double>(secure) / n;
  s.within_25 = static_cast<double>(within) / n;
  return s;
}

EvalReport evaluate(const surrogate::ModelBundle& model, const datagen::Dataset& data) {
  EvalReport r;
  r.n_samples = data.size();
  std::vector<surrogate::Features> xs;
  xs.reserve(data.size());
  for (const datagen::Sample& s : data) xs.push_back(s.features);
  r.predictions = surrogate::predict_batch(model, xs);
  std::map<std::pair<double, double>, std::vector<double>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = relative_deviation(r.predictions[i], data[i].label);
    r.deviations.push_back(d);
    ++r.histogram[static_cast<std::size_t>(bin_of(d))];
    groups[{data[i].provenance.xi_grid, data[i].provenance.L}].push_back(d);
  }
  r.overall = summarize(r.deviations);
  for (const auto& [key, devs] : groups) r.per_grid[key] = summarize(devs);
  return r;
}

void write_deviations_csv(const EvalReport& r, const datagen::Dataset& data, std::ostream& out) {
  out << "index,xi_grid,L,label,prediction,relative_deviation\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << ',' << fmt17(data[i].provenance.xi_grid) << ',' << fmt17(data[i].provenance.L) << ','
        << fmt17(data[i].label) << ',' << fmt17(r.predictions[i]) << ',' << fmt17(r.deviations[i]) << '\n';
  }
}

void write_histogram_csv(const EvalReport& r, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < kBins; ++b) {
    const double lo = -1.0 + b * kBinWidth;
    out << fmt17(lo) << ',' << fmt17(lo + kBinWidth) << ',' << r.histogram[static_cast<std::size_t>(b)] << '\n';
  }
}

void write_per_grid_csv(const EvalReport& r, std::ostream& out) {
  out << "xi_grid,L,n,secure_fraction,mean,median,min,max,within_25\n";
  for (const auto& [key, s] : r.per_grid) {
    out << fmt17(key.first) << ',' << fmt17(key.second) << ',' << s.n << ',' << fmt17(s.secure_fraction) << ','
        << fmt17(s.mean) << ',' << fmt17(s.median) << ',' << fmt17(s.min) << ',' << fmt17(s.max) << ','
        << fmt17(s.within_25) << '\n';
  }
}

BenchRow bench_point(const surrogate::ModelBundle& model, const channel::ProtocolParams& params,
                     const BenchOptions& options) {
  using clock = std::chrono::steady_clock;
  BenchRow row{params.xi, params.L, 0.0, 0.0, 0.0, ""};
  std::vector<double> times;
  try {
    for (int k = 0; k < std::max(1, options.solver_runs); ++k) {
      const auto t0 = clock::now();
      const solver::KeyRateReport rep = solver::key_rate(params);
      times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      row.status = solver::to_string(rep.status);
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    row.solver_seconds = std::numeric_limits<double>::quiet_NaN();
  }
  if (!times.empty() && row.status.rfind("error", 0) != 0) {
    std::sort(times.begin(), times.end());
    row.solver_seconds = times[times.size() / 2];
  }

  const surrogate::Features x = channel::assemble_features(params);
  volatile double sink = surrogate::predict(model, x);  // warm-up
  const int reps = std::max(1000, options.surrogate_reps);
  const auto t0 = clock::now();
  for (int k = 0; k < reps; ++k) sink = sink + surrogate::predict(model, x);
  row.surrogate_seconds = std::chrono::duration<double>(clock::now() - t0).count() / reps;
  row.log10_ratio = std::log10(row.solver_seconds / row.surrogate_seconds);
  return row;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "xi,L,solver_seconds,surrogate_seconds,log10_ratio,status\n";
  for (const BenchRow& r : rows) {
    out << fmt17(r.xi) << ',' << fmt17(r.L) << ',' << fmt17(r.solver_seconds) << ',' << fmt17(r.surrogate_seconds)
        << ',' << fmt17(r.log10_ratio) << ',' << csv_safe(r.status) << '\n';
  }
}

}  // namespace qkdnn::evaluation
