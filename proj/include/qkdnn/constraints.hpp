#pragma once

// Equality constraints on rho_AB (A: 4-dim state register, B: truncated mode).
//
// Every constraint operator has the block form sum_k c_k |r_k><s_k| (x) O_k with
// O_k drawn from a small table of Nc+1 square matrices. The block form is what
// lets the SDP solver assemble its Schur complement in O(m^2 N^2 + m D N^2)
// instead of O(m D^3).

#include <array>
#include <string>
#include <vector>

#include "qkdnn/channel.hpp"
#include "qkdnn/linalg.hpp"

namespace qkdnn::solver {

inline constexpr int kMomentConstraints = 16;
inline constexpr int kGramConstraints = 16;  // 4 diagonal + 6 (Re, Im) pairs
inline constexpr int kTotalConstraints = kMomentConstraints + kGramConstraints;

struct BlockTerm {
  int row_block;  // r in |r><s|
  int col_block;  // s
  cplx coeff;
  int op;  // index into ConstraintSet::ops
};

struct LinearConstraint {
  std::vector<BlockTerm> terms;
  double target = 0.0;
};

enum class Observable : int { q = 0, p = 1, n = 2, d = 3 };

class ConstraintSet {
 public:
  /// Operator table indices.
  static constexpr int kOpQ = 0, kOpP = 1, kOpN = 2, kOpD = 3, kOpId = 4;

  /// moment_targets[4 x + o] = p_x <O>_x; gram is the 4x4 Tr_B target.
  /// Throws InfeasibleError when the Gram target is not Hermitian PSD with unit trace.
  ConstraintSet(int nc, const std::array<double, kMomentConstraints>& moment_targets,
                const CMatrix& gram);

  int nc() const noexcept { return nc_; }
  int block_dim() const noexcept { return nc_ + 1; }
  int dim() const noexcept { return 4 * (nc_ + 1); }
  int size() const noexcept { return static_cast<int>(constraints_.size()); }

  const std::vector<LinearConstraint>& constraints() const noexcept { return constraints_; }
  const std::vector<CMatrix>& ops() const noexcept { return ops_; }
  const CMatrix& gram() const noexcept { return gram_; }
  const std::array<double, kMomentConstraints>& moment_targets() const noexcept { return moments_; }
  double trace_target() const noexcept { return 1.0; }
  RVector targets() const;

  /// (Tr(A_i X))_i taking the real part; X need not be Hermitian.
  RVector apply(const CMatrix& x) const;
  /// sum_i y_i A_i.
  CMatrix adjoint(const RVector& y) const;
  /// Dense A_i (tests, diagnostics).
  CMatrix dense(int i) const;

  /// max_i |Tr(A_i rho) - b_i| together with |Tr rho - 1|.
  double max_residual(const CMatrix& rho) const;

  /// Same constraint operators with targets replaced by those rho attains.
  ConstraintSet with_targets_of(const CMatrix& rho) const;

 private:
  void build_rows();

  int nc_ = 0;
  std::array<double, kMomentConstraints> moments_{};
  CMatrix gram_;
  std::vector<CMatrix> ops_;
  std::vector<LinearConstraint> constraints_;
};

ConstraintSet build_constraints(const channel::ProtocolParams& params);

/// Feature-vector path: the 16 moment targets are read verbatim from indices
/// 0..15, the Gram matrix from 16..27 plus the supplied diagonal probabilities.
ConstraintSet build_constraints(const channel::FeatureVector& features,
                                const std::array<double, channel::kNumStates>& probs, int nc);

}  // namespace qkdnn::solver
