#include "qkdnn/linalg.hpp"

#include <cmath>
#include <string>

#include "qkdnn/errors.hpp"

namespace qkdnn {

EigenPairs hermitian_eigen(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigendecomposition failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigendecomposition failed");
  }
  return solver.eigenvalues()(0);
}

CMatrix psd_sqrt(const CMatrix& m, double tolerance) {
  const EigenPairs eig = hermitian_eigen(m);
  if (eig.values(0) < -tolerance) {
    throw NumericalError("square root of indefinite matrix (min eigenvalue " +
                             std::to_string(eig.values(0)) + ")",
                         -eig.values(0));
  }
  return spectral_apply(eig, [](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
}

double hermiticity_defect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

double re_trace_product(const CMatrix& a, const CMatrix& b) {
  // Tr(AB) = sum_ij A_ij B_ji; for Hermitian A, A_ij = conj(A_ji).
  return (a.transpose().cwiseProduct(b)).sum().real();
}

cplx trace_product(const CMatrix& a, const CMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

}  // namespace qkdnn
