#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qkdnn/errors.hpp"
#include "qkdnn/solver.hpp"

namespace qkdnn::solver {

namespace {

constexpr double kFeasibilityTol = 1e-8;

/// Euclidean projection of a real vector onto the probability simplex.
RVector project_simplex(const RVector& v) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

CMatrix project_spectraplex(const CMatrix& m) {
  EigenPairs eig = hermitian_eigen(m);
  eig.values = project_simplex(eig.values);
  return eig.vectors * eig.values.asDiagonal() * eig.vectors.adjoint();
}

/// Largest eigenvalue of A A^* (Lipschitz constant of the least-squares gradient).
double operator_norm_sq(const ConstraintSet& cs) {
  const int m = cs.size();
  RMatrix gram(m, m);
  for (int j = 0; j < m; ++j) gram.col(j) = cs.apply(cs.dense(j));
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (gram + gram.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct LineSearch {
  double t = 0.0;
  ObjectiveValue value;
};

double directional(const ObjectiveValue& v, const CMatrix& dir) { return re_trace_product(v.grad, dir); }

/// Exact step on [0, 1]: root of t -> Tr(grad f(rho + t dir) dir) by safeguarded
/// false position, then halving until the objective does not increase.
LineSearch line_search(const CMatrix& rho, const CMatrix& dir, const ObjectiveValue& at_rho,
                       const KeyMap& km, double eps) {
  auto eval = [&](double t) { return objective_and_gradient(rho + t * dir, km, eps); };
  const double d0 = directional(at_rho, dir);
  LineSearch best{1.0, eval(1.0)};
  double d1 = directional(best.value, dir);

  if (d1 > 0.0) {
    double lo = 0.0, hi = 1.0, dlo = d0, dhi = d1;
    int side = 0;
    for (int k = 0; k < 60 && hi - lo > 1e-12; ++k) {
      double t = (lo * dhi - hi * dlo) / (dhi - dlo);
      if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
      ObjectiveValue v = eval(t);
      const double dt = directional(v, dir);
      best = {t, std::move(v)};
      if (std::abs(dt) <= 1e-6 * std::abs(d0)) break;
      if (dt < 0.0) {
        lo = t;
        dlo = dt;
        if (side == -1) dhi *= 0.5;  // Illinois modification
        side = -1;
      } else {
        hi = t;
        dhi = dt;
        if (side == 1) dlo *= 0.5;
        side = 1;
      }
    }
  }
  while (best.value.f > at_rho.f && best.t > 1e-12) {
    best.t *= 0.5;
    best.value = eval(best.t);
  }
  if (best.value.f > at_rho.f) best.t = 0.0;
  return best;
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::stagnated: return "stagnated";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

CMatrix feasible_initial_point(const ConstraintSet& cs, const SdpOptions& sdp) {
  const int dim = cs.dim();
  SdpOptions opts = sdp;
  opts.primal_tol = std::min(opts.primal_tol, 0.1 * kFeasibilityTol);
  SdpResult res;
  try {
    res = linear_sdp(CMatrix::Zero(dim, dim), cs, opts);
  } catch (const SubproblemFailure& e) {
    throw InfeasibleError("no density matrix satisfies the constraints", e.primal_residual());
  }
  CMatrix rho = res.x;
  const double residual = cs.max_residual(rho);
  const double lmin = min_eigenvalue(rho);
  if (residual > kFeasibilityTol || lmin < -kFeasibilityTol) {
    throw InfeasibleError("no density matrix satisfies the constraints", std::max(residual, -lmin));
  }
  return rho;
}

Realization realize_constraints(const ConstraintSet& cs, const RealizationOptions& options) {
  const int dim = cs.dim();
  const RVector b = cs.targets();
  const double step = 1.0 / operator_norm_sq(cs);

  CMatrix x = CMatrix::Identity(dim, dim) / dim;
  CMatrix y = x;
  CMatrix best = x;
  double best_res = (cs.apply(x) - b).cwiseAbs().maxCoeff();
  double t = 1.0;
  int since_best = 0;
  for (int k = 0; k < options.max_iter && since_best < 300; ++k) {
    const RVector r = cs.apply(y) - b;
    const CMatrix next = project_spectraplex(y - step * cs.adjoint(r));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    x = next;
    t = t_next;
    const double res = (cs.apply(x) - b).cwiseAbs().maxCoeff();
    if (res < best_res * (1.0 - 1e-6)) {
      best_res = res;
      best = x;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (best_res < 1e-12) break;
  }

  const double w = options.interior_weight;
  const CMatrix anchor = (1.0 - w) * best + (w / dim) * CMatrix::Identity(dim, dim);
  ConstraintSet adjusted = cs.with_targets_of(anchor);
  const double adjustment = (adjusted.targets() - b).cwiseAbs().maxCoeff();
  return Realization{std::move(adjusted), anchor, best_res, adjustment};
}

FrankWolfeResult frank_wolfe(const ConstraintSet& cs, const KeyMap& km, const CMatrix& rho0,
                             const FrankWolfeOptions& options) {
  if (options.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(options.tol > 0.0)) throw InvalidArgument("tolerance must be positive");

  FrankWolfeResult out;
  out.rho = hermitian_part(rho0);
  ObjectiveValue current = objective_and_gradient(out.rho, km, options.eps_pert);
  for (int k = 0;; ++k) {
    SdpResult sub;
    try {
      sub = linear_sdp(current.grad, cs, options.sdp);
    } catch (const SubproblemFailure&) {
      // thin feasible sets: an infeasible start can crawl, retry from the interior point
      sub = linear_sdp(current.grad, cs, options.sdp, rho0);
    }
    const CMatrix dir = sub.x - out.rho;
    const double gap = -re_trace_product(current.grad, dir);
    out.f = current.f;
    out.gap = gap;
    out.iterations = k;
    out.f_trace.push_back(current.f);
    out.gap_trace.push_back(gap);
    out.grad = current.grad;
    out.last_sdp = std::move(sub);

    if (gap < options.tol) {
      out.status = SolveStatus::converged;
      return out;
    }
    if (k == options.max_iter) {
      out.status = SolveStatus::max_iterations;
      return out;
    }
    LineSearch ls = line_search(out.rho, dir, current, km, options.eps_pert);
    if (ls.t <= 0.0) {
      out.status = SolveStatus::stagnated;
      return out;
    }
    out.rho = hermitian_part(out.rho + ls.t * dir);
    current = std::move(ls.value);
  }
}

double certified_lower_bound(const CMatrix& rho, const CMatrix& grad, double f,
                             const ConstraintSet& cs, const SdpResult& solved) {
  return f - re_trace_product(grad, rho) + dual_certificate(grad, cs, solved.y);
}

double certified_lower_bound(const CMatrix& rho, const CMatrix& grad, double f,
                             const ConstraintSet& cs, const SdpOptions& sdp) {
  return certified_lower_bound(rho, grad, f, cs, linear_sdp(grad, cs, sdp));
}

}  // namespace qkdnn::solver
