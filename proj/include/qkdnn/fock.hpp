#pragma once

// Truncated Fock-space operators for a single optical mode.
//
// Quadrature convention: q = (a^dagger + a)/sqrt(2), p = i(a^dagger - a)/sqrt(2),
// so the vacuum quadrature variance is kVacuumVariance = 1/2. The channel
// simulator uses the same constant for every Gaussian integral.

#include <array>

#include "qkdnn/linalg.hpp"

namespace qkdnn::fock {

inline constexpr double kVacuumVariance = 0.5;
inline constexpr int kMaxCutoff = 40;

/// Photon-number cutoff Nc; the truncated space has dimension Nc + 1.
struct Cutoff {
  int value;

  explicit Cutoff(int nc);
  int dim() const noexcept { return value + 1; }
};

class HermitianOperator {
 public:
  /// Throws InvalidArgument unless dim >= 2 and entries are Hermitian to 1e-12.
  explicit HermitianOperator(CMatrix entries);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }
  cplx operator()(int m, int n) const { return entries_(m, n); }

 private:
  CMatrix entries_;
};

class FockVector {
 public:
  explicit FockVector(CVector amplitudes);

  int dim() const noexcept { return static_cast<int>(amplitudes_.size()); }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  double squared_norm() const { return amplitudes_.squaredNorm(); }
  cplx inner(const FockVector& other) const { return amplitudes_.dot(other.amplitudes_); }

 private:
  CVector amplitudes_;
};

/// <m|a|n> = sqrt(n) when m = n - 1.
CMatrix annihilation(Cutoff nc);

FockVector apply(const CMatrix& op, const FockVector& v);

struct Observables {
  HermitianOperator q;
  HermitianOperator p;
  HermitianOperator n;
  HermitianOperator d;
};

/// q, p from the truncated ladder operators; n and d truncated from the exact
/// infinite-dimensional a^dagger a and a^2 + (a^dagger)^2.
Observables build_observables(Cutoff nc);

/// Fock amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!), n = 0..Nc. Logs a
/// warning to std::clog when |alpha|^2 > Nc.
FockVector coherent_state(cplx alpha, Cutoff nc);

bool coherent_truncation_ok(cplx alpha, Cutoff nc);

/// Exact <beta|alpha> (untruncated).
cplx coherent_overlap(cplx alpha, cplx beta);

enum class KeySymbol : int { zero = 0, one = 1 };

/// <m|I_z|n> = integral over [delta_c, inf) (z = 0) or (-inf, -delta_c] (z = 1)
/// of psi_m(q) psi_n(q). Entries are accurate to 1e-10 absolute; a
/// NumericalError carrying the achieved error is raised otherwise.
HermitianOperator region_operator(KeySymbol z, double delta_c, Cutoff nc);

/// Hermite-Gaussian wavefunctions psi_0..psi_Nc at q (vacuum variance 1/2).
Eigen::VectorXd quadrature_wavefunctions(double q, int nc);

}  // namespace qkdnn::fock
