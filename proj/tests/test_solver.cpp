#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qkdnn/errors.hpp"
#include "qkdnn/solver.hpp"

using namespace qkdnn;
using namespace qkdnn::solver;

namespace {

channel::ProtocolParams params(double L, double mu, double xi, int nc) {
  channel::ProtocolParams p;
  p.L = L;
  p.mu = mu;
  p.xi = xi;
  p.nc = nc;
  return p;
}

// Directional derivative check; errors are measured against |grad| |H| so
// that directions nearly orthogonal to the gradient do not blow up the ratio.
double gradient_error(const CMatrix& rho, const KeyMap& km, std::mt19937_64& rng) {
  CMatrix h = oracle::random_hermitian(km.ab_dim(), rng);
  h -= (h.trace().real() / h.rows()) * CMatrix::Identity(h.rows(), h.cols());
  h /= h.norm();
  const double lmin = min_eigenvalue(rho);
  const double step = std::min(1e-5, 0.01 * lmin);
  const ObjectiveValue v = objective_and_gradient(rho, km);
  const double analytic = re_trace_product(v.grad, h);
  const double fd = (objective(rho + step * h, km) - objective(rho - step * h, km)) / (2.0 * step);
  return std::abs(fd - analytic) / std::max(v.grad.norm(), 1e-12);
}

}  // namespace

TEST_CASE("key map is complete at zero threshold") {
  for (int nc : {2, 3, 5}) {
    const KeyMap km = key_map_isometry(0.0, nc);
    const CMatrix k = km.kraus(0) + km.kraus(1);
    CHECK((k.adjoint() * k - CMatrix::Identity(km.ab_dim(), km.ab_dim())).cwiseAbs().maxCoeff() < 1e-10);
    std::mt19937_64 rng(nc);
    const CMatrix rho = oracle::random_density(km.ab_dim(), rng);
    CHECK(std::abs(apply_key_map(rho, km).trace().real() - 1.0) < 1e-10);
  }
}

TEST_CASE("pinching is idempotent and the objective is nonnegative") {
  const KeyMap km = key_map_isometry(0.0, 2);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    const CMatrix rho = oracle::random_density(km.ab_dim(), rng);
    const CMatrix g = apply_key_map(rho, km);
    const CMatrix z = pinch(g);
    CHECK((pinch(z) - z).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(z.trace() - g.trace()) < 1e-12);
    CHECK(objective(rho, km) >= 0.0);
  }
}

TEST_CASE("objective agrees with the dense reference") {
  for (int nc : {2, 3}) {
    const KeyMap km = key_map_isometry(0.0, nc);
    const oracle::RelativeEntropy ref(0.0, nc);
    std::mt19937_64 rng(100 + nc);
    for (int k = 0; k < 5; ++k) {
      const CMatrix rho = oracle::random_density(km.ab_dim(), rng);
      CHECK(std::abs(objective(rho, km) - ref(rho)) < 1e-7);
    }
  }
  // postselection makes the key map non-isometric
  const KeyMap km = key_map_isometry(0.4, 3);
  const oracle::RelativeEntropy ref(0.4, 3);
  std::mt19937_64 rng(8);
  const CMatrix rho = oracle::random_density(km.ab_dim(), rng);
  CHECK(std::abs(objective(rho, km) - ref(rho)) < 1e-7);
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(5);
  for (int nc : {2, 3}) {
    const KeyMap km = key_map_isometry(0.0, nc);
    for (int k = 0; k < 10; ++k) {
      const CMatrix rho = oracle::random_density(km.ab_dim(), rng);
      CHECK(gradient_error(rho, km, rng) < 1e-5);
    }
  }
}

TEST_CASE("linear SDP basics") {
  std::mt19937_64 rng(3);
  const int nc = 2;
  const KeyMap km = key_map_isometry(0.0, nc);
  const ConstraintSet base = build_constraints(params(10.0, 0.45, 0.01, nc));
  const ConstraintSet cs = base.with_targets_of(oracle::random_density(km.ab_dim(), rng));

  const SdpResult unit = linear_sdp(CMatrix::Identity(cs.dim(), cs.dim()), cs);
  CHECK(unit.primal_objective == doctest::Approx(1.0).epsilon(1e-7));

  const SdpResult zero = linear_sdp(CMatrix::Zero(cs.dim(), cs.dim()), cs);
  CHECK(cs.max_residual(zero.x) < 1e-7);
  CHECK(min_eigenvalue(zero.x) > -1e-9);

  for (int k = 0; k < 3; ++k) {
    const CMatrix c = oracle::random_hermitian(cs.dim(), rng);
    const SdpResult r = linear_sdp(c, cs);
    const oracle::AdmmResult ref = oracle::admm_sdp(c, cs);
    CHECK(ref.primal_residual < 1e-7);
    CHECK(std::abs(r.primal_objective - ref.objective) < 1e-5);
    // the dual certificate never exceeds the optimum
    CHECK(dual_certificate(c, cs, r.y) <= r.primal_objective + 1e-7);
    // a feasible interior start reaches the same optimum
    const SdpResult warm = linear_sdp(c, cs, SdpOptions{}, zero.x);
    CHECK(std::abs(warm.primal_objective - r.primal_objective) < 1e-6);
  }
}

TEST_CASE("thin realized feasible set") {
  // Truncated targets here need a realization whose feasible set is nearly
  // flat; started from the identity the subproblem crawls past its cap.
  const KeyRateReport r = key_rate(params(5.7872709275327789, 0.45399741716979014, 0.0030715514643281155, 2));
  CHECK(r.status == SolveStatus::converged);
  CHECK(r.target_adjustment > 0.0);
  CHECK(r.certified_lower_bound <= r.primal_objective);
  CHECK(r.primal_objective == doctest::Approx(0.934676).epsilon(1e-5));
}

TEST_CASE("unreachable constraints are reported") {
  const ConstraintSet base = build_constraints(params(10.0, 0.45, 0.01, 3));
  auto moments = base.moment_targets();
  moments[channel::moment_index(0, 2)] = -0.1;  // negative photon number for x = 0
  const ConstraintSet bad(3, moments, base.gram());
  CHECK_THROWS_AS(feasible_initial_point(bad), InfeasibleError);

  CMatrix gram = base.gram();
  gram(0, 0) += 0.5;
  CHECK_THROWS_AS(ConstraintSet(3, base.moment_targets(), gram), InfeasibleError);
}

TEST_CASE("Frank-Wolfe invariants") {
  const channel::ProtocolParams p = params(20.0, 0.45, 0.004, 3);
  const oracle::ActiveSet act = oracle::active_set(p);
  const KeyMap km = key_map_isometry(p.delta_c, p.nc);
  const FrankWolfeResult fw = frank_wolfe(act.constraints, km, act.interior);
  CHECK(fw.status == SolveStatus::converged);
  for (std::size_t k = 1; k < fw.f_trace.size(); ++k) CHECK(fw.f_trace[k] <= fw.f_trace[k - 1] + 1e-12);
  for (double g : fw.gap_trace) CHECK(g >= -1e-9);
  const double bound = certified_lower_bound(fw.rho, fw.grad, fw.f, act.constraints, fw.last_sdp);
  CHECK(bound <= fw.f + 1e-6);
  CHECK(fw.f - bound < 1e-4);
  CHECK(act.constraints.max_residual(fw.rho) < 1e-7);
}

TEST_CASE("key rate report") {
  const KeyRateReport r = key_rate(params(10.0, 0.45, 0.004, 3));
  CHECK(r.status == SolveStatus::converged);
  CHECK(r.certified_lower_bound <= r.primal_objective + 1e-9);
  CHECK(r.key_rate == doctest::Approx(std::max(0.0, r.certified_lower_bound - r.p_pass * r.delta_ec)));
  CHECK(r.key_rate > 0.0);
  CHECK_THROWS_AS(key_rate(params(-1.0, 0.45, 0.004, 3)), InvalidArgument);
}

TEST_CASE("brute-force oracle on one instance") {
  const channel::ProtocolParams p = params(25.0, 0.5, 0.005, 2);
  const oracle::ActiveSet act = oracle::active_set(p);
  const KeyMap km = key_map_isometry(0.0, 2);
  const FrankWolfeResult fw = frank_wolfe(act.constraints, km, act.interior);
  const double bound = certified_lower_bound(fw.rho, fw.grad, fw.f, act.constraints, fw.last_sdp);
  const oracle::RelativeEntropy f(0.0, 2);
  const oracle::BarrierResult ref = oracle::barrier_minimize(f, act.constraints, act.interior);
  MESSAGE(std::setprecision(10) << "fw " << fw.f << " bound " << bound << " oracle " << ref.f);
  CHECK(std::abs(fw.f - ref.f) < 1e-4);
  CHECK(std::abs(bound - ref.f) < 1e-4);
}
