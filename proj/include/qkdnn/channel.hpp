#pragma once

// Analytic simulation of four-state discrete modulation over a lossy Gaussian
// channel with excess noise, homodyne detection on Bob's side.
//
// Conventions (see fock.hpp for the quadrature convention):
//   * mu is the mean photon number of each signal state, alpha = sqrt(mu);
//   * the states are indexed x = 0..3 as (alpha, -alpha, i alpha, -i alpha);
//   * excess noise xi is referred to the channel input: the output quadrature
//     variance is (1 + eta xi)/2.

#include <array>

#include "qkdnn/linalg.hpp"

namespace qkdnn::channel {

inline constexpr int kNumStates = 4;
inline constexpr int kFeatureCount = 29;
inline constexpr int kMomentFeatures = 16;
inline constexpr int kGramFeatures = 12;
inline constexpr int kXiFeature = 28;

struct ProtocolParams {
  double L = 0.0;      // km
  double mu = 0.5;     // mean photon number per state
  double xi = 0.0;     // excess noise, shot-noise units
  std::array<double, kNumStates> probs{0.25, 0.25, 0.25, 0.25};
  double beta = 0.95;  // reconciliation efficiency
  double delta_c = 0.0;
  int nc = 4;

  /// Throws InvalidArgument on any violated range constraint.
  void validate() const;
};

struct StateMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double mean_n = 0.0;
  double mean_d = 0.0;
};

using MomentSet = std::array<StateMoments, kNumStates>;

/// Upper-triangle order used by the Gram part of the feature vector.
inline constexpr std::array<std::array<int, 2>, 6> kGramPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Frozen layout:
///   [0, 16)  p_x <O>_x for x = 0..3 (outer) and O = q, p, n, d (inner)
///   [16, 28) (Re, Im) of sqrt(p_i p_j) <phi_j|phi_i> over kGramPairs
///   28       xi
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  static constexpr int size() { return kFeatureCount; }
};

constexpr int moment_index(int x, int observable) { return 4 * x + observable; }

/// 10^(-0.02 L).
double transmittance(double L);

std::array<cplx, kNumStates> state_amplitudes(const ProtocolParams& params);

MomentSet simulate_moments(const ProtocolParams& params);

/// (i, j) -> sqrt(p_i p_j) <phi_j|phi_i>.
CMatrix gram_matrix(const ProtocolParams& params);

FeatureVector assemble_features(const ProtocolParams& params);

struct ErrorCorrectionTerms {
  double p_pass = 1.0;
  double delta_ec = 0.0;
};

/// Pass probability and per-bit leakage (1 - beta) H(Z) + beta H(Z|X) for the
/// key states x in {0, 1} under Bob's sign key map with threshold delta_c.
ErrorCorrectionTerms ec_terms(const ProtocolParams& params);

double binary_entropy(double p);

}  // namespace qkdnn::channel
