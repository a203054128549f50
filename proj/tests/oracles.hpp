#pragma once

// Reference implementations used only by the tests. They share nothing with
// the production solver beyond the constraint data itself.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qkdnn/constraints.hpp"
#include "qkdnn/errors.hpp"
#include "qkdnn/fock.hpp"
#include "qkdnn/solver.hpp"

namespace oracle {

using qkdnn::CMatrix;
using qkdnn::RMatrix;
using qkdnn::RVector;
using qkdnn::cplx;

inline double xlog2x_sum(const Eigen::VectorXd& ev) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-300) acc += ev(i) * std::log2(ev(i));
  }
  return acc;
}

/// D(G(rho) || Z(G(rho))) evaluated directly from dense Kraus operators.
class RelativeEntropy {
 public:
  RelativeEntropy(double delta_c, int nc) {
    const qkdnn::fock::Cutoff cut(nc);
    const int d = 4 * (nc + 1);
    CMatrix k_total = CMatrix::Zero(2 * d, d);
    for (int z = 0; z < 2; ++z) {
      const CMatrix region =
          qkdnn::fock::region_operator(static_cast<qkdnn::fock::KeySymbol>(z), delta_c, cut).matrix();
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (region + region.adjoint()));
      local_[z] = Eigen::kroneckerProduct(CMatrix::Identity(4, 4), es.operatorSqrt());
      CMatrix k = CMatrix::Zero(2 * d, d);
      k.middleRows(z * d, d) = local_[z];
      kraus_[z] = k;
      k_total += k;
    }
    dim_ = d;
    // for an isometry G(rho) shares its nonzero spectrum with rho
    isometry_ = (k_total.adjoint() * k_total - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10;
  }

  double operator()(const CMatrix& rho) const {
    double f = 0.0;
    if (isometry_) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
      f = xlog2x_sum(es.eigenvalues());
    } else {
      CMatrix g = CMatrix::Zero(2 * dim_, 2 * dim_);
      for (int z = 0; z < 2; ++z) {
        for (int w = 0; w < 2; ++w) g += kraus_[z] * rho * kraus_[w].adjoint();
      }
      Eigen::SelfAdjointEigenSolver<CMatrix> full(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
      f = xlog2x_sum(full.eigenvalues());
    }
    for (int z = 0; z < 2; ++z) {
      const CMatrix blk = local_[z] * rho * local_[z].adjoint();
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (blk + blk.adjoint()), Eigen::EigenvaluesOnly);
      f -= xlog2x_sum(es.eigenvalues());
    }
    return f;
  }

 private:
  CMatrix kraus_[2];
  CMatrix local_[2];
  int dim_ = 0;
  bool isometry_ = false;
};

/// Orthonormal (Re Tr) basis of the Hermitian d x d matrices.
inline std::vector<CMatrix> hermitian_basis(int d) {
  std::vector<CMatrix> out;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    CMatrix e = CMatrix::Zero(d, d);
    e(i, i) = 1.0;
    out.push_back(e);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      CMatrix re = CMatrix::Zero(d, d);
      re(i, j) = re(j, i) = r;
      out.push_back(re);
      CMatrix im = CMatrix::Zero(d, d);
      im(i, j) = cplx(0.0, -r);
      im(j, i) = cplx(0.0, r);
      out.push_back(im);
    }
  }
  return out;
}

/// Directions that keep every constraint (and the trace) fixed.
inline std::vector<CMatrix> feasible_directions(const qkdnn::solver::ConstraintSet& cs) {
  const int d = cs.dim();
  const std::vector<CMatrix> basis = hermitian_basis(d);
  const int m = cs.size();
  RMatrix a(m + 1, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    a.block(0, static_cast<Eigen::Index>(k), m, 1) = cs.apply(basis[k]);
    a(m, static_cast<Eigen::Index>(k)) = basis[k].trace().real();
  }
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0);
  std::vector<CMatrix> out;
  for (Eigen::Index c = rank; c < svd.matrixV().cols(); ++c) {
    CMatrix n = CMatrix::Zero(d, d);
    for (std::size_t k = 0; k < basis.size(); ++k) n += svd.matrixV()(static_cast<Eigen::Index>(k), c) * basis[k];
    out.push_back(n);
  }
  return out;
}

struct BarrierResult {
  CMatrix rho;
  double f = 0.0;
};

/// min f(rho) over {rho = rho0 + sum t_j N_j, rho > 0} by a log-det barrier
/// path, each stage solved with BFGS on central finite-difference gradients of f.
inline BarrierResult barrier_minimize(const std::function<double(const CMatrix&)>& f,
                                      const qkdnn::solver::ConstraintSet& cs, const CMatrix& rho0,
                                      double mu_start = 1e-3, double mu_end = 1e-10, int max_iter = 400) {
  const std::vector<CMatrix> dirs = feasible_directions(cs);
  const auto n = static_cast<Eigen::Index>(dirs.size());
  auto build = [&](const RVector& t) {
    CMatrix r = rho0;
    for (Eigen::Index j = 0; j < n; ++j) r += t(j) * dirs[static_cast<std::size_t>(j)];
    return r;
  };
  auto logdet = [](const CMatrix& r, bool& ok) {
    Eigen::LLT<CMatrix> llt(0.5 * (r + r.adjoint()));
    ok = llt.info() == Eigen::Success;
    if (!ok) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) acc += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    return acc;
  };

  RVector t = RVector::Zero(n);
  for (double mu = mu_start; mu >= mu_end * 0.999; mu *= 0.1) {
    auto phi = [&](const RVector& x, bool& ok) {
      const CMatrix r = build(x);
      const double ld = logdet(r, ok);
      if (!ok) return std::numeric_limits<double>::infinity();
      return f(r) - mu * ld;
    };
    auto grad = [&](const RVector& x) {
      const CMatrix r = build(x);
      const CMatrix inv = r.inverse();
      RVector g(n);
      const double h = 1e-7;
      for (Eigen::Index j = 0; j < n; ++j) {
        const CMatrix& dj = dirs[static_cast<std::size_t>(j)];
        // shrink the probe until both sides stay positive definite
        double hj = h;
        bool ok_p = false, ok_m = false;
        for (int k = 0; k < 30; ++k) {
          logdet(r + hj * dj, ok_p);
          logdet(r - hj * dj, ok_m);
          if (ok_p && ok_m) break;
          hj *= 0.25;
        }
        g(j) = (f(r + hj * dj) - f(r - hj * dj)) / (2.0 * hj) - mu * (inv * dj).trace().real();
      }
      return g;
    };

    bool ok = true;
    double val = phi(t, ok);
    RVector g = grad(t);
    RMatrix hinv = RMatrix::Identity(n, n) * 1e-3;
    for (int it = 0; it < max_iter; ++it) {
      RVector d = -hinv * g;
      if (d.dot(g) >= 0.0) {
        hinv = RMatrix::Identity(n, n) * 1e-3;
        d = -hinv * g;
      }
      double step = 1.0;
      RVector tn;
      double vn = 0.0;
      bool accepted = false;
      for (int k = 0; k < 60; ++k) {
        tn = t + step * d;
        bool okn = true;
        vn = phi(tn, okn);
        if (okn && vn <= val + 1e-4 * step * d.dot(g)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const RVector gn = grad(tn);
      const RVector s = tn - t;
      const RVector y = gn - g;
      const double sy = s.dot(y);
      const double drop = val - vn;
      t = tn;
      val = vn;
      g = gn;
      if (sy > 1e-300) {
        if (it == 0) hinv = RMatrix::Identity(n, n) * (sy / y.squaredNorm());
        const double rho_k = 1.0 / sy;
        const RMatrix left = RMatrix::Identity(n, n) - rho_k * s * y.transpose();
        hinv = left * hinv * left.transpose() + rho_k * s * s.transpose();
      }
      if (drop < 1e-14 && g.norm() < 1e-6) break;
    }
  }
  const CMatrix r = build(t);
  return {r, f(r)};
}

struct AdmmResult {
  CMatrix x;
  double objective = 0.0;
  double primal_residual = 0.0;
  int iterations = 0;
};

/// Dual ADMM for min Re Tr(C X) s.t. A(X) = b, X >= 0: alternate an exact
/// least-squares step in y with an eigenvalue-clamp projection onto the PSD cone.
inline AdmmResult admm_sdp(const CMatrix& c, const qkdnn::solver::ConstraintSet& cs, double tol = 1e-10,
                           int max_iter = 200000) {
  const int d = cs.dim();
  const int m = cs.size();
  RMatrix aat(m, m);
  for (int j = 0; j < m; ++j) aat.col(j) = cs.apply(cs.dense(j));
  // AA* is singular when the constraints imply each other; the y-step is a
  // consistent least-squares problem either way
  const Eigen::CompleteOrthogonalDecomposition<RMatrix> solve(0.5 * (aat + aat.transpose()));
  const RVector b = cs.targets();

  CMatrix x = CMatrix::Identity(d, d) / d;
  CMatrix s = CMatrix::Zero(d, d);
  RVector y = RVector::Zero(m);
  const double mu = 1.0;
  AdmmResult out;
  for (int it = 0; it < max_iter; ++it) {
    y = solve.solve(-(mu * (cs.apply(x) - b) + cs.apply(s - c)));
    const CMatrix v = c - cs.adjoint(y) - mu * x;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (v + v.adjoint()));
    const RVector pos = es.eigenvalues().cwiseMax(0.0);
    const CMatrix s_new = es.eigenvectors() * pos.asDiagonal() * es.eigenvectors().adjoint();
    const CMatrix x_new = (s_new - v) / mu;
    const double pres = (cs.apply(x_new) - b).cwiseAbs().maxCoeff();
    const double dres = (c - cs.adjoint(y) - s_new).cwiseAbs().maxCoeff();
    const double gap = std::abs((c.adjoint() * x_new).trace().real() - b.dot(y));
    x = x_new;
    s = s_new;
    out.iterations = it + 1;
    if (!std::isfinite(pres)) break;
    if (pres < tol && dres < tol && gap < tol) break;
  }
  out.x = 0.5 * (x + x.adjoint());
  out.objective = (c.adjoint() * out.x).trace().real();
  out.primal_residual = (cs.apply(out.x) - b).cwiseAbs().maxCoeff();
  return out;
}

/// Random full-rank density matrix (normalized Wishart).
inline CMatrix random_density(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  CMatrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  }
  CMatrix r = g * g.adjoint();
  r /= r.trace().real();
  return r;
}

inline CMatrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  CMatrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  }
  return 0.5 * (g + g.adjoint());
}


/// Points rho0 + t N inside the constraint set: random null-space direction N,
/// t a random fraction of the largest step keeping rho PSD.
inline std::vector<CMatrix> random_feasible_points(const qkdnn::solver::ConstraintSet& cs, const CMatrix& rho0,
                                                   int count, std::mt19937_64& rng) {
  const std::vector<CMatrix> dirs = feasible_directions(cs);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  std::vector<CMatrix> out;
  while (static_cast<int>(out.size()) < count) {
    CMatrix n = CMatrix::Zero(cs.dim(), cs.dim());
    for (const CMatrix& d : dirs) n += n01(rng) * d;
    // largest t with rho0 + t n >= 0 from the generalized eigenproblem
    Eigen::LLT<CMatrix> llt(rho0);
    const CMatrix linv = llt.matrixL().solve(CMatrix::Identity(cs.dim(), cs.dim()));
    const CMatrix m = linv * n * linv.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo >= 0.0) continue;
    out.push_back(rho0 + frac(rng) * (-1.0 / lo) * n);
  }
  return out;
}

struct ActiveSet {
  qkdnn::solver::ConstraintSet constraints;
  CMatrix interior;
  double adjustment = 0.0;
};

/// The constraint set the key-rate solver works on for these parameters and
/// a strictly feasible point of it.
inline ActiveSet active_set(const qkdnn::channel::ProtocolParams& p) {
  using namespace qkdnn::solver;
  ConstraintSet cs = build_constraints(p);
  try {
    CMatrix rho = feasible_initial_point(cs);
    return {cs, rho, 0.0};
  } catch (const qkdnn::InfeasibleError&) {
  }
  Realization r = realize_constraints(cs);
  CMatrix rho = r.anchor;
  try {
    rho = feasible_initial_point(r.constraints);
  } catch (const qkdnn::Error&) {
  }
  return {r.constraints, rho, r.adjustment};
}

}  // namespace oracle
