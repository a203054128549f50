#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "qkdnn/errors.hpp"
#include "qkdnn/fock.hpp"
#include "qkdnn/solver.hpp"

namespace qkdnn::solver {

namespace {

double entropy_term(const RVector& eigenvalues) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double v = std::max(eigenvalues(i), kEigenFloor);
    acc += v * std::log2(v);
  }
  return acc;
}

double log2_floor(double v) { return std::log2(std::max(v, kEigenFloor)); }

struct Blocks {
  CMatrix y;  // (1 - eps) G(rho) + eps id / dim
  int ab_dim;
};

Blocks perturbed_key_state(const CMatrix& rho, const KeyMap& km, double eps) {
  const int d = km.ab_dim();
  if (rho.rows() != d || rho.cols() != d) throw InvalidArgument("density matrix has wrong dimension");
  Blocks out{CMatrix(2 * d, 2 * d), d};
  const CMatrix p0 = km.on_ab[0] * rho;
  const CMatrix p1 = km.on_ab[1] * rho;
  out.y.topLeftCorner(d, d) = p0 * km.on_ab[0];
  out.y.topRightCorner(d, d) = p0 * km.on_ab[1];
  out.y.bottomLeftCorner(d, d) = p1 * km.on_ab[0];
  out.y.bottomRightCorner(d, d) = p1 * km.on_ab[1];
  out.y *= (1.0 - eps);
  out.y.diagonal().array() += eps / (2.0 * d);
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what + " in key-rate objective");
}

}  // namespace

CMatrix KeyMap::kraus(int z) const {
  const int d = ab_dim();
  CMatrix k = CMatrix::Zero(2 * d, d);
  k.middleRows(z * d, d) = on_ab[static_cast<std::size_t>(z)];
  return k;
}

KeyMap key_map_isometry(double delta_c, int nc) {
  const fock::Cutoff cutoff(nc);
  KeyMap km;
  km.nc = nc;
  km.delta_c = delta_c;
  const CMatrix id_a = CMatrix::Identity(4, 4);
  for (int z = 0; z < 2; ++z) {
    const auto region = fock::region_operator(static_cast<fock::KeySymbol>(z), delta_c, cutoff);
    const auto uz = static_cast<std::size_t>(z);
    km.sqrt_region[uz] = psd_sqrt(region.matrix());
    km.on_ab[uz] = Eigen::kroneckerProduct(id_a, km.sqrt_region[uz]);
  }
  return km;
}

CMatrix apply_key_map(const CMatrix& rho, const KeyMap& km) {
  return perturbed_key_state(rho, km, 0.0).y;
}

CMatrix pinch(const CMatrix& g) {
  const Eigen::Index d = g.rows() / 2;
  CMatrix out = CMatrix::Zero(g.rows(), g.cols());
  out.topLeftCorner(d, d) = g.topLeftCorner(d, d);
  out.bottomRightCorner(d, d) = g.bottomRightCorner(d, d);
  return out;
}

double objective(const CMatrix& rho, const KeyMap& km, double eps) {
  const Blocks b = perturbed_key_state(rho, km, eps);
  const int d = b.ab_dim;
  Eigen::SelfAdjointEigenSolver<CMatrix> full(b.y, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<CMatrix> z0(b.y.topLeftCorner(d, d), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<CMatrix> z1(b.y.bottomRightCorner(d, d), Eigen::EigenvaluesOnly);
  const double f = entropy_term(full.eigenvalues()) - entropy_term(z0.eigenvalues()) -
                   entropy_term(z1.eigenvalues());
  require_finite(f, "objective");
  return f;
}

ObjectiveValue objective_and_gradient(const CMatrix& rho, const KeyMap& km, double eps) {
  const Blocks b = perturbed_key_state(rho, km, eps);
  const int d = b.ab_dim;
  const EigenPairs full = hermitian_eigen(b.y);
  const EigenPairs z0 = hermitian_eigen(b.y.topLeftCorner(d, d));
  const EigenPairs z1 = hermitian_eigen(b.y.bottomRightCorner(d, d));

  ObjectiveValue out;
  out.f = entropy_term(full.values) - entropy_term(z0.values) - entropy_term(z1.values);
  require_finite(out.f, "objective");

  // grad = (1 - eps) K^dagger (log2 G_e - log2 Z(G_e)) K
  CMatrix w = spectral_apply(full, log2_floor);
  w.topLeftCorner(d, d) -= spectral_apply(z0, log2_floor);
  w.bottomRightCorner(d, d) -= spectral_apply(z1, log2_floor);
  const CMatrix& m0 = km.on_ab[0];
  const CMatrix& m1 = km.on_ab[1];
  out.grad = m0 * (w.topLeftCorner(d, d) * m0 + w.topRightCorner(d, d) * m1) +
             m1 * (w.bottomLeftCorner(d, d) * m0 + w.bottomRightCorner(d, d) * m1);
  out.grad = (1.0 - eps) * hermitian_part(out.grad);
  if (!out.grad.allFinite()) throw NumericalError("non-finite gradient in key-rate objective");
  return out;
}

}  // namespace qkdnn::solver
