#pragma once

// Linear SDP over the constraint set:  minimize Re Tr(C X)  s.t.  A(X) = b, X >= 0.
//
// Infeasible-start primal-dual path-following method with the HKM search
// direction and Mehrotra predictor-corrector steps.

#include "qkdnn/constraints.hpp"
#include "qkdnn/linalg.hpp"

namespace qkdnn::solver {

struct SdpOptions {
  double primal_tol = 1e-8;  // max_i |Tr(A_i X) - b_i|
  double dual_tol = 1e-6;    // max |C - A*(y) - S|
  double gap_tol = 1e-10;    // Tr(XS) / (1 + |primal objective|)
  int max_iter = 120;
};

struct SdpResult {
  CMatrix x;
  RVector y;
  CMatrix s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;  // Tr(XS)
  int iterations = 0;
};

/// Throws SubproblemFailure (with residuals) when the tolerances are not met
/// within the iteration cap.
SdpResult linear_sdp(const CMatrix& c, const ConstraintSet& constraints,
                     const SdpOptions& options = {});
/// Same, started from x_start (a positive definite point, ideally feasible)
/// instead of the identity.
SdpResult linear_sdp(const CMatrix& c, const ConstraintSet& constraints, const SdpOptions& options,
                     const CMatrix& x_start);

/// b^T y + lambda_min(C - A*(y)): a lower bound on Tr(C X) over every X >= 0
/// with A(X) = b and Tr X = 1, valid for any y.
double dual_certificate(const CMatrix& c, const ConstraintSet& constraints, const RVector& y);

}  // namespace qkdnn::solver
