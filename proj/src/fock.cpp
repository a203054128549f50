#include "qkdnn/fock.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qkdnn/errors.hpp"

namespace qkdnn::fock {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kRegionTol = 1e-10;

void require_cutoff(int nc) {
  if (nc < 1 || nc > kMaxCutoff) {
    throw InvalidArgument("invalid cutoff " + std::to_string(nc) + " (need 1 <= Nc <= " +
                          std::to_string(kMaxCutoff) + ")");
  }
}

}  // namespace

Cutoff::Cutoff(int nc) : value(nc) { require_cutoff(nc); }

HermitianOperator::HermitianOperator(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 2) {
    throw InvalidArgument("Hermitian operator must be square with dim >= 2");
  }
  if (hermiticity_defect(entries_) > kHermitianTol) {
    throw InvalidArgument("operator is not Hermitian");
  }
}

FockVector::FockVector(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.squaredNorm() > 1.0 + 1e-12) {
    throw InvalidArgument("Fock vector norm exceeds 1");
  }
}

CMatrix annihilation(Cutoff nc) {
  const int dim = nc.dim();
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

FockVector apply(const CMatrix& op, const FockVector& v) {
  return FockVector(op * v.amplitudes());
}

Observables build_observables(Cutoff nc) {
  const int dim = nc.dim();
  const CMatrix a = annihilation(nc);
  const CMatrix ad = a.adjoint();
  const double s = 1.0 / std::numbers::sqrt2;
  const cplx i(0.0, 1.0);

  CMatrix n = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = k;

  // <m|a^2|k> = sqrt(k(k-1)) for m = k-2; lies inside the truncated space.
  CMatrix d = CMatrix::Zero(dim, dim);
  for (int k = 2; k < dim; ++k) {
    const double v = std::sqrt(static_cast<double>(k) * (k - 1));
    d(k - 2, k) = v;
    d(k, k - 2) = v;
  }

  return {HermitianOperator(s * (ad + a)), HermitianOperator(i * s * (ad - a)),
          HermitianOperator(std::move(n)), HermitianOperator(std::move(d))};
}

bool coherent_truncation_ok(cplx alpha, Cutoff nc) { return std::norm(alpha) <= nc.value; }

FockVector coherent_state(cplx alpha, Cutoff nc) {
  if (!coherent_truncation_ok(alpha, nc)) {
    std::clog << "warning: |alpha|^2 = " << std::norm(alpha) << " exceeds cutoff " << nc.value
              << "; truncated coherent state loses significant norm\n";
  }
  CVector amp(nc.dim());
  cplx term = std::exp(-0.5 * std::norm(alpha));
  amp(0) = term;
  for (int n = 1; n < nc.dim(); ++n) {
    term *= alpha / std::sqrt(static_cast<double>(n));
    amp(n) = term;
  }
  return FockVector(std::move(amp));
}

cplx coherent_overlap(cplx alpha, cplx beta) {
  return std::exp(-0.5 * std::norm(alpha) - 0.5 * std::norm(beta) + std::conj(beta) * alpha);
}

Eigen::VectorXd quadrature_wavefunctions(double q, int nc) {
  Eigen::VectorXd psi(nc + 1);
  psi(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
  if (nc >= 1) psi(1) = std::numbers::sqrt2 * q * psi(0);
  for (int n = 1; n < nc; ++n) {
    psi(n + 1) = std::sqrt(2.0 / (n + 1)) * q * psi(n) - std::sqrt(double(n) / (n + 1)) * psi(n - 1);
  }
  return psi;
}

HermitianOperator region_operator(KeySymbol z, double delta_c, Cutoff nc) {
  if (!(delta_c >= 0.0) || !std::isfinite(delta_c)) {
    throw InvalidArgument("postselection threshold must be finite and >= 0");
  }
  using boost::math::quadrature::gauss_kronrod;
  const int dim = nc.dim();
  const double q_max = std::sqrt(2.0 * nc.value) + 6.0;
  const Eigen::VectorXd psi_edge = quadrature_wavefunctions(q_max, nc.value);

  CMatrix region = CMatrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) {
    for (int n = m; n < dim; ++n) {
      // Beyond the turning point psi_m psi_n ~ poly(q) exp(-q^2); Laplace estimate of the tail.
      const double tail =
          std::abs(psi_edge(m) * psi_edge(n)) / (2.0 * q_max - (m + n) / q_max);
      double value = 0.0;
      double err = 0.0;
      if (delta_c < q_max) {
        auto integrand = [m, n, &nc](double q) {
          const Eigen::VectorXd psi = quadrature_wavefunctions(q, nc.value);
          return psi(m) * psi(n);
        };
        value = gauss_kronrod<double, 31>::integrate(integrand, delta_c, q_max, 15, 1e-13, &err);
      }
      const double total_err = err + tail;
      if (!std::isfinite(value) || total_err > kRegionTol) {
        throw NumericalError("region operator quadrature missed tolerance at (" +
                                 std::to_string(m) + "," + std::to_string(n) + ")",
                             total_err);
      }
      // psi_n(-q) = (-1)^n psi_n(q)
      const double sign = (z == KeySymbol::one && (m + n) % 2 == 1) ? -1.0 : 1.0;
      region(m, n) = sign * value;
      region(n, m) = sign * value;
    }
  }
  return HermitianOperator(std::move(region));
}

}  // namespace qkdnn::fock
