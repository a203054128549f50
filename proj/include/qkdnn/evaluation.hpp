#pragma once

// Surrogate-vs-label metrics and solver-vs-surrogate timing.

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qkdnn/datagen.hpp"
#include "qkdnn/surrogate.hpp"

namespace qkdnn::evaluation {

inline constexpr double kBinWidth = 0.01;
inline constexpr int kBins = 200;  // [-1, 1]

/// (prediction - label) / label; negative means the prediction is secure.
double relative_deviation(double prediction, double label);

struct DeviationStats {
  std::size_t n = 0;
  double secure_fraction = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double within_25 = 0.0;  // share with |deviation| <= 0.25
};

struct EvalReport {
  std::size_t n_samples = 0;
  DeviationStats overall;
  /// Deviations beyond [-1, 1] are counted in the edge bins.
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kBins, 0);
  std::map<std::pair<double, double>, DeviationStats> per_grid;  // keyed by (xi_grid, L)
  std::vector<double> predictions;
  std::vector<double> deviations;
};

DeviationStats summarize(const std::vector<double>& deviations);

EvalReport evaluate(const surrogate::ModelBundle& model, const datagen::Dataset& data);

void write_deviations_csv(const EvalReport& r, const datagen::Dataset& data, std::ostream& out);
void write_histogram_csv(const EvalReport& r, std::ostream& out);
void write_per_grid_csv(const EvalReport& r, std::ostream& out);

struct BenchRow {
  double xi = 0.0;
  double L = 0.0;
  double solver_seconds = 0.0;     // median over solver runs
  double surrogate_seconds = 0.0;  // mean over repetitions, model already loaded
  double log10_ratio = 0.0;
  std::string status;              // solver status or the error text
};

struct BenchOptions {
  int solver_runs = 5;
  int surrogate_reps = 1000;
};

BenchRow bench_point(const surrogate::ModelBundle& model, const channel::ProtocolParams& params,
                     const BenchOptions& options = {});

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace qkdnn::evaluation
