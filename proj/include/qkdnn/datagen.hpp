#pragma once

// Grid-sampling campaign: jittered excess noise per sampling, mu sweep per
// draw, solver labels, and the stratified train/test split.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qkdnn/channel.hpp"
#include "qkdnn/errors.hpp"
#include "qkdnn/solver.hpp"

namespace qkdnn::datagen {

struct NoiseBand {
  double xi = 0.0;
  std::vector<double> L_values;
};

struct GridSpec {
  std::vector<double> xi_values;
  std::vector<double> L_values;
  std::vector<NoiseBand> extra_bands;
  int samplings_per_point = 80;
  int instances_per_sampling = 25;
  double xi_jitter = 0.0005;
  std::vector<double> mu_sweep;
  int nc = 10;
  std::uint64_t master_seed = 20220101;
  int restart_budget = 20;
  /// probs, beta and delta_c for every instance; L, mu, xi and nc are overwritten.
  channel::ProtocolParams base{};

  void validate() const;
  /// Stable text rendering of every field (resume markers compare it).
  std::string fingerprint() const;
};

/// The full campaign: xi 0.002..0.014 x L 5..100, plus xi=0.015 up to 80 km.
GridSpec paper_grid();
/// 2 noise values x 4 distances x 4 samplings x 5 instances at nc=3 (160 samples).
GridSpec desk_grid();
/// xi 0.002..0.005 x L 5..60 at nc=4, 4 samplings x 25 instances (4,800 samples).
GridSpec reduced_grid();
/// "paper", "desk" or "reduced"; throws InvalidArgument otherwise.
GridSpec preset(const std::string& name);

/// Inclusive arithmetic range with the count fixed by rounding (no drift).
std::vector<double> linspace_step(double first, double last, double step);

struct GridPoint {
  double xi_grid = 0.0;
  double L = 0.0;
};

std::vector<GridPoint> grid_points(const GridSpec& spec);

struct Provenance {
  double xi_grid = 0.0;
  double L = 0.0;
  double xi = 0.0;  // jittered value actually used
  double mu = 0.0;
  std::string status;
  int nc = 0;
};

struct Sample {
  channel::FeatureVector features;
  double label = 0.0;  // key rate > 0
  Provenance provenance;
};

using Dataset = std::vector<Sample>;

class GridPointFailure : public Error {
 public:
  GridPointFailure(const std::string& what, GridPoint point) : Error(what), point_(point) {}
  GridPoint point() const noexcept { return point_; }

 private:
  GridPoint point_;
};

using SolveFn = std::function<solver::KeyRateReport(const channel::ProtocolParams&)>;

/// The default labeler: solver::key_rate with default options.
SolveFn default_solver();

/// Per-sampling seed: a stable hash of (master_seed, xi_grid, L, sampling index).
std::uint64_t sampling_seed(std::uint64_t master_seed, const GridPoint& point, int sampling);

/// samplings_per_point x instances_per_sampling samples; within a sampling the
/// instances_per_sampling highest positive rates of the mu sweep are kept, in
/// sweep order. Draws are repeated up to restart_budget times per sampling.
Dataset sample_grid_point(const GridSpec& spec, const GridPoint& point, const SolveFn& solve);

struct GenerateOptions {
  int threads = 1;
  /// When set, finished grid points are written there with completion markers
  /// and skipped on a later run with the same spec.
  std::optional<std::string> work_dir;
  std::function<void(std::size_t done, std::size_t total, const GridPoint&, bool resumed)> progress;
};

/// Thread count from QKDNN_THREADS, else 1.
int default_threads();

Dataset generate_dataset(const GridSpec& spec, const SolveFn& solve, const GenerateOptions& options = {});

struct Split {
  Dataset train;
  Dataset test;
};

/// Stratified by (xi_grid, L): round(test_fraction * n) test samples per
/// stratum, at least one. Both halves keep the input order.
Split split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Header: f00..f28, key_rate, xi_grid, L, xi, mu, status, nc.
std::vector<std::string> csv_header();
void save_dataset(const Dataset& data, std::ostream& out);
Dataset load_dataset(std::istream& in);
/// Atomic: written to a temporary file and renamed into place.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Feature rows without labels (f00..f28 plus any trailing columns ignored).
std::vector<channel::FeatureVector> load_features(std::istream& in);

}  // namespace qkdnn::datagen
