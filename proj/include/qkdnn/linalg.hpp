#pragma once

// Dense complex linear algebra shared by the Fock-space and solver modules.

#include <complex>

#include <Eigen/Dense>

namespace qkdnn {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

struct EigenPairs {
  RVector values;  // ascending
  CMatrix vectors;
};

/// Eigendecomposition of the Hermitian part (M + M^dagger)/2.
EigenPairs hermitian_eigen(const CMatrix& m);

double min_eigenvalue(const CMatrix& m);

/// V f(lambda) V^dagger for a Hermitian decomposition.
template <typename F>
CMatrix spectral_apply(const EigenPairs& eig, F&& f) {
  RVector mapped(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) mapped(i) = f(eig.values(i));
  return eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint();
}

/// Principal square root of a PSD matrix; throws NumericalError when an
/// eigenvalue is below -tolerance.
CMatrix psd_sqrt(const CMatrix& m, double tolerance = 1e-10);

/// max |M - M^dagger| entrywise.
double hermiticity_defect(const CMatrix& m);

CMatrix hermitian_part(const CMatrix& m);

/// Re Tr(A B) for Hermitian A and arbitrary B, without forming the product.
double re_trace_product(const CMatrix& a, const CMatrix& b);

/// Tr(A B) without forming the product.
cplx trace_product(const CMatrix& a, const CMatrix& b);

}  // namespace qkdnn
