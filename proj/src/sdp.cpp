#include "qkdnn/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qkdnn/errors.hpp"

namespace qkdnn::solver {

namespace {

constexpr double kStepFraction = 0.98;
// Loosest complementarity accepted from the best iterate when the method stalls
// before gap_tol (near-degenerate feasible sets); still well inside the 1e-6
// objective accuracy the Frank-Wolfe loop needs.
constexpr double kFallbackGap = 1e-7;

struct Factored {
  Eigen::LLT<CMatrix> llt;
  CMatrix inverse;
};

Factored factor_pd(const CMatrix& m) {
  Factored f{Eigen::LLT<CMatrix>(hermitian_part(m)), {}};
  if (f.llt.info() != Eigen::Success) throw NumericalError("matrix lost positive definiteness");
  f.inverse = f.llt.solve(CMatrix::Identity(m.rows(), m.cols()));
  return f;
}

/// Largest alpha with X + alpha dX >= 0, given the Cholesky factor of X.
double max_step(const Eigen::LLT<CMatrix>& chol, const CMatrix& dx) {
  const CMatrix& l = chol.matrixL();
  CMatrix q = l.triangularView<Eigen::Lower>().solve(dx);
  q = l.triangularView<Eigen::Lower>().solve(q.adjoint().eval());
  const double lmin = min_eigenvalue(q);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

/// Column j of the Schur complement: (Re Tr(A_i X A_j S^-1))_i.
class SchurBuilder {
 public:
  explicit SchurBuilder(const ConstraintSet& cs) : cs_(cs), n_(cs.block_dim()) {}

  RMatrix build(const CMatrix& x, const CMatrix& s_inv) const {
    const int m = cs_.size();
    const int dim = cs_.dim();
    RMatrix schur(m, m);
    CMatrix t(dim, dim);
    for (int j = 0; j < m; ++j) {
      const auto& terms = cs_.constraints()[static_cast<std::size_t>(j)].terms;
      // X (|r><s| (x) O) has its only nonzero column block at s: X[:, r] O.
      t.setZero();
      for (const BlockTerm& term : terms) {
        const CMatrix& op = cs_.ops()[static_cast<std::size_t>(term.op)];
        t.noalias() += (term.coeff * (x.middleCols(term.row_block * n_, n_) * op)) *
                       s_inv.middleRows(term.col_block * n_, n_);
      }
      schur.col(j) = cs_.apply(t);
    }
    return 0.5 * (schur + schur.transpose());
  }

 private:
  const ConstraintSet& cs_;
  int n_;
};

}  // namespace

double dual_certificate(const CMatrix& c, const ConstraintSet& constraints, const RVector& y) {
  return constraints.targets().dot(y) + min_eigenvalue(c - constraints.adjoint(y));
}

SdpResult linear_sdp(const CMatrix& c, const ConstraintSet& cs, const SdpOptions& options) {
  return linear_sdp(c, cs, options, CMatrix::Identity(cs.dim(), cs.dim()));
}

SdpResult linear_sdp(const CMatrix& c_in, const ConstraintSet& cs, const SdpOptions& options,
                     const CMatrix& x_start) {
  const int dim = cs.dim();
  const int m = cs.size();
  if (c_in.rows() != dim || c_in.cols() != dim) {
    throw InvalidArgument("SDP objective has wrong dimension");
  }
  if (x_start.rows() != dim || x_start.cols() != dim) throw InvalidArgument("SDP start has wrong dimension");
  const CMatrix c = hermitian_part(c_in);
  const RVector b = cs.targets();
  const SchurBuilder schur_builder(cs);

  const double c_scale = std::max(1.0, c.norm() / std::sqrt(static_cast<double>(dim)));
  CMatrix x = hermitian_part(x_start);
  CMatrix s = c_scale * CMatrix::Identity(dim, dim);
  RVector y = RVector::Zero(m);

  SdpResult out;
  SdpResult fallback;
  bool have_fallback = false;
  auto pack = [&](SdpResult& r, int it, double pobj, double pres, double dres, double xs) {
    r.x = hermitian_part(x);
    r.y = y;
    r.s = hermitian_part(s);
    r.primal_objective = pobj;
    r.dual_objective = b.dot(y);
    r.primal_residual = pres;
    r.dual_residual = dres;
    r.complementarity = xs;
    r.iterations = it;
  };
  double best_pres = std::numeric_limits<double>::infinity();
  double best_dres = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int it = 0; it <= options.max_iter; ++it) {
    const CMatrix rd = c - cs.adjoint(y) - s;
    const RVector rp = b - cs.apply(x);
    const double xs = re_trace_product(x, s);
    const double mu = xs / dim;
    const double pres = rp.cwiseAbs().maxCoeff();
    const double dres = rd.cwiseAbs().maxCoeff();
    const double pobj = re_trace_product(c, x);
    best_pres = std::min(best_pres, pres);
    best_dres = std::min(best_dres, dres);

    if (!std::isfinite(xs) || !std::isfinite(pres) || !std::isfinite(dres)) break;
    if (pres <= options.primal_tol && dres <= options.dual_tol) {
      const double scale = 1.0 + std::abs(pobj);
      if (xs <= options.gap_tol * scale) {
        pack(out, it, pobj, pres, dres, xs);
        return out;
      }
      if (xs <= kFallbackGap * scale && (!have_fallback || xs < fallback.complementarity)) {
        pack(fallback, it, pobj, pres, dres, xs);
        have_fallback = true;
      }
    }
    if (it == options.max_iter || stalled >= 8) break;

    Factored fx, fs;
    try {
      fx = factor_pd(x);
      fs = factor_pd(s);
    } catch (const NumericalError&) {
      break;
    }
    const CMatrix& s_inv = fs.inverse;
    RMatrix schur = schur_builder.build(x, s_inv);
    Eigen::LDLT<RMatrix> ldlt(schur);
    if (ldlt.info() != Eigen::Success) {
      schur.diagonal().array() += 1e-14 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
      ldlt.compute(schur);
      if (ldlt.info() != Eigen::Success) break;
    }

    const CMatrix x_rd_sinv = x * rd * s_inv;
    const RVector base_rhs = b + cs.apply(x_rd_sinv);

    auto direction = [&](double sigma, const CMatrix* corr, CMatrix& dx, RVector& dy, CMatrix& ds) {
      RVector rhs = base_rhs - cs.apply((sigma * mu) * s_inv);
      if (corr != nullptr) rhs += cs.apply(*corr);
      dy = ldlt.solve(rhs);
      ds = rd - cs.adjoint(dy);
      CMatrix raw = (sigma * mu) * s_inv - x - x * ds * s_inv;
      if (corr != nullptr) raw -= *corr;
      dx = hermitian_part(raw);
    };

    CMatrix dx_aff, ds_aff;
    RVector dy_aff;
    direction(0.0, nullptr, dx_aff, dy_aff, ds_aff);
    const double ap_aff = std::min(1.0, max_step(fx.llt, dx_aff));
    const double ad_aff = std::min(1.0, max_step(fs.llt, ds_aff));
    const double mu_aff = re_trace_product(x + ap_aff * dx_aff, s + ad_aff * ds_aff) / dim;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    const CMatrix corr = dx_aff * ds_aff * s_inv;
    CMatrix dx, ds;
    RVector dy;
    direction(sigma, &corr, dx, dy, ds);
    const double ap = std::min(1.0, kStepFraction * max_step(fx.llt, dx));
    const double ad = std::min(1.0, kStepFraction * max_step(fs.llt, ds));
    if (!std::isfinite(ap) || !std::isfinite(ad)) break;
    stalled = (std::max(ap, ad) < 1e-10) ? stalled + 1 : 0;

    x += ap * dx;
    y += ad * dy;
    s += ad * ds;
  }
  if (have_fallback) return fallback;
  throw SubproblemFailure("linear SDP did not converge", best_pres, best_dres);
}

}  // namespace qkdnn::solver
