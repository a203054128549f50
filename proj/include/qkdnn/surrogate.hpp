#pragma once

// 29 -> 400 (tanh) -> 200 (sigmoid) -> 1 (linear) regression network on
// standardized features, predicting y* = -log10(key rate).

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qkdnn/channel.hpp"

namespace qkdnn::surrogate {

inline constexpr int kInputs = channel::kFeatureCount;
inline constexpr int kHidden1 = 400;
inline constexpr int kHidden2 = 200;
inline constexpr int kLayers = 3;

struct MlpArchitecture {
  std::array<int, kLayers + 1> sizes{kInputs, kHidden1, kHidden2, 1};
  std::size_t parameter_count() const;
};

/// Dense layer, weights row-major (out x in).
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct PreprocStats {
  std::array<double, kInputs> means{};
  std::array<double, kInputs> sigmas{};
  std::array<bool, kInputs> pass_through{};
};

struct LossHyperparams {
  double gamma = 0.2;
  double epsilon = 0.8;
  void validate() const;
  /// -log10(epsilon): the upper end of the secure error band.
  double threshold() const;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double final_validation_loss = 0.0;
  double xi_min = 0.0;  // noise band covered by the training data
  double xi_max = 0.0;
};

struct ModelBundle {
  MlpArchitecture arch;
  std::array<Layer, kLayers> layers;
  PreprocStats preproc;
  LossHyperparams loss_hp;
  TrainingMetadata meta;
};

using Features = channel::FeatureVector;

/// Population mean and standard deviation per column; constant columns pass through.
PreprocStats preprocess_fit(std::span<const Features> rows);
std::array<double, kInputs> preprocess_apply(const Features& x, const PreprocStats& stats);

double label_transform(double key_rate);
double label_inverse(double y_star);

/// Zero-initialized (all weights and biases 0) model of the fixed shape.
ModelBundle zero_model();
/// Seeded symmetric-uniform init with limit sqrt(6 / (fan_in + fan_out)).
void initialize_weights(ModelBundle& model, std::uint64_t seed);
/// Throws ModelCorruption when layer shapes differ from the architecture.
void check_shapes(const ModelBundle& model);

double forward(const ModelBundle& model, std::span<const double> x_star);

/// (1/n) sum gamma (e^2 + max(e, -log10 eps)) - (1 - gamma) min(e, 0).
double loss(std::span<const double> errors, const LossHyperparams& hp);
double loss_term(double e, const LossHyperparams& hp);
/// d/de of one loss term, right-continuous at the kinks.
double loss_subgradient(double e, const LossHyperparams& hp);

/// Gradient of the mean loss over a batch with respect to every parameter,
/// laid out like the layers (w then b, layer by layer). Inputs are already
/// standardized; targets are y*. No dropout.
std::vector<double> loss_gradient(const ModelBundle& model, std::span<const std::array<double, kInputs>> x_star,
                                  std::span<const double> y_star);
/// Flat views over the parameters in the same layout.
std::vector<double> flatten(const ModelBundle& model);
void unflatten(ModelBundle& model, std::span<const double> params);

struct TrainOptions {
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout = 0.1;
  double validation_fraction = 0.05;
  int patience = 20;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  ModelBundle model;
  std::vector<EpochRecord> log;
};

/// Adam on mini-batches with inverted dropout on both hidden layers; early
/// stopping restores the best-validation weights. Deterministic per seed.
/// Throws TrainingFailure on a non-finite loss.
TrainResult train(std::span<const Features> features, std::span<const double> key_rates,
                  const LossHyperparams& hp, const TrainOptions& options,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

double predict(const ModelBundle& model, const Features& x);
std::vector<double> predict_batch(const ModelBundle& model, std::span<const Features> xs);

void save_model(const ModelBundle& model, std::ostream& out);
ModelBundle load_model(std::istream& in);
void save_model(const ModelBundle& model, const std::string& path);
ModelBundle load_model(const std::string& path);

}  // namespace qkdnn::surrogate
