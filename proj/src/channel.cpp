#include "qkdnn/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qkdnn/errors.hpp"
#include "qkdnn/fock.hpp"

namespace qkdnn::channel {

void ProtocolParams::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid parameter: " + what); };
  if (!(L >= 0.0) || !std::isfinite(L)) fail("L must be >= 0");
  if (!(mu > 0.0) || !std::isfinite(mu)) fail("mu must be > 0");
  if (!(xi >= 0.0) || !std::isfinite(xi)) fail("xi must be >= 0");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) fail("state probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) fail("state probabilities must sum to 1");
  if (!(probs[0] + probs[1] > 0.0)) fail("key states x = 0, 1 need positive probability");
  if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0, 1]");
  if (!(delta_c >= 0.0) || !std::isfinite(delta_c)) fail("delta_c must be >= 0");
  if (nc < 1 || nc > fock::kMaxCutoff) fail("cutoff out of range");
}

double transmittance(double L) {
  if (!(L >= 0.0)) throw InvalidArgument("invalid parameter: L must be >= 0");
  return std::pow(10.0, -0.02 * L);
}

std::array<cplx, kNumStates> state_amplitudes(const ProtocolParams& params) {
  const double a = std::sqrt(params.mu);
  return {cplx(a, 0.0), cplx(-a, 0.0), cplx(0.0, a), cplx(0.0, -a)};
}

MomentSet simulate_moments(const ProtocolParams& params) {
  const double eta = transmittance(params.L);
  const auto amps = state_amplitudes(params);
  const double thermal = eta * params.xi / 2.0;
  MomentSet out{};
  for (int x = 0; x < kNumStates; ++x) {
    const cplx out_amp = std::sqrt(eta) * amps[static_cast<std::size_t>(x)];
    StateMoments& m = out[static_cast<std::size_t>(x)];
    m.mean_q = std::numbers::sqrt2 * out_amp.real();
    m.mean_p = std::numbers::sqrt2 * out_amp.imag();
    m.mean_n = std::norm(out_amp) + thermal;
    m.mean_d = 2.0 * (out_amp * out_amp).real();
  }
  return out;
}

CMatrix gram_matrix(const ProtocolParams& params) {
  const auto amps = state_amplitudes(params);
  CMatrix g(kNumStates, kNumStates);
  for (int i = 0; i < kNumStates; ++i) {
    for (int j = 0; j < kNumStates; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      g(i, j) = std::sqrt(params.probs[ui] * params.probs[uj]) *
                fock::coherent_overlap(amps[ui], amps[uj]);
    }
    g(i, i) = params.probs[static_cast<std::size_t>(i)];
  }
  return g;
}

FeatureVector assemble_features(const ProtocolParams& params) {
  const MomentSet moments = simulate_moments(params);
  const CMatrix g = gram_matrix(params);
  FeatureVector f;
  for (int x = 0; x < kNumStates; ++x) {
    const double p = params.probs[static_cast<std::size_t>(x)];
    const StateMoments& m = moments[static_cast<std::size_t>(x)];
    f[moment_index(x, 0)] = p * m.mean_q;
    f[moment_index(x, 1)] = p * m.mean_p;
    f[moment_index(x, 2)] = p * m.mean_n;
    f[moment_index(x, 3)] = p * m.mean_d;
  }
  int k = kMomentFeatures;
  for (const auto& [i, j] : kGramPairs) {
    f[k++] = g(i, j).real();
    f[k++] = g(i, j).imag();
  }
  f[kXiFeature] = params.xi;
  return f;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

ErrorCorrectionTerms ec_terms(const ProtocolParams& params) {
  const double eta = transmittance(params.L);
  const double variance = fock::kVacuumVariance * (1.0 + eta * params.xi);
  const double scale = std::sqrt(2.0 * variance);
  const MomentSet moments = simulate_moments(params);
  const double key_weight = params.probs[0] + params.probs[1];

  // joint[x][z] = P(x, z) over key rounds, before conditioning on passing.
  double joint[2][2];
  for (int x = 0; x < 2; ++x) {
    const double mean = moments[static_cast<std::size_t>(x)].mean_q;
    const double w = params.probs[static_cast<std::size_t>(x)] / key_weight;
    joint[x][0] = w * 0.5 * std::erfc((params.delta_c - mean) / scale);
    joint[x][1] = w * 0.5 * std::erfc((params.delta_c + mean) / scale);
  }
  ErrorCorrectionTerms out;
  out.p_pass = joint[0][0] + joint[0][1] + joint[1][0] + joint[1][1];
  if (out.p_pass <= 0.0) {
    out.delta_ec = 0.0;
    return out;
  }
  const double pz0 = (joint[0][0] + joint[1][0]) / out.p_pass;
  const double h_z = binary_entropy(pz0);
  double h_z_given_x = 0.0;
  for (int x = 0; x < 2; ++x) {
    const double px = joint[x][0] + joint[x][1];
    if (px <= 0.0) continue;
    h_z_given_x += (px / out.p_pass) * binary_entropy(joint[x][0] / px);
  }
  out.delta_ec = (1.0 - params.beta) * h_z + params.beta * h_z_given_x;
  return out;
}

}  // namespace qkdnn::channel
