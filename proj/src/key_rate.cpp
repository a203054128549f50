#include <algorithm>

#include "qkdnn/errors.hpp"
#include "qkdnn/solver.hpp"

namespace qkdnn::solver {

KeyRateReport key_rate(const channel::ProtocolParams& params, const KeyRateOptions& options) {
  params.validate();
  return key_rate(build_constraints(params), params, options);
}

KeyRateReport key_rate(const ConstraintSet& cs, const channel::ProtocolParams& params,
                       const KeyRateOptions& options) {
  params.validate();
  if (cs.nc() != params.nc) throw InvalidArgument("constraint set cutoff differs from params.nc");
  const KeyMap km = key_map_isometry(params.delta_c, params.nc);
  const channel::ErrorCorrectionTerms ec = channel::ec_terms(params);

  KeyRateReport report;
  report.p_pass = ec.p_pass;
  report.delta_ec = ec.delta_ec;

  ConstraintSet active = cs;
  CMatrix rho0;
  try {
    rho0 = feasible_initial_point(cs, options.fw.sdp);
  } catch (const InfeasibleError&) {
    // The untruncated targets may lie outside what the cutoff can represent.
    Realization r = realize_constraints(cs, options.realization);
    report.target_adjustment = r.adjustment;
    if (r.adjustment > options.max_target_adjustment) {
      report.status = SolveStatus::infeasible;
      return report;
    }
    active = std::move(r.constraints);
    try {
      rho0 = feasible_initial_point(active, options.fw.sdp);
    } catch (const InfeasibleError&) {
      rho0 = r.anchor;
    }
  }

  const FrankWolfeResult fw = frank_wolfe(active, km, rho0, options.fw);
  report.primal_objective = fw.f;
  report.fw_gap = fw.gap;
  report.iterations = fw.iterations;
  report.status = fw.status;
  report.constraint_residual = active.max_residual(fw.rho);
  report.certified_lower_bound = certified_lower_bound(fw.rho, fw.grad, fw.f, active, fw.last_sdp);
  report.key_rate = std::max(0.0, report.certified_lower_bound - ec.p_pass * ec.delta_ec);
  return report;
}

}  // namespace qkdnn::solver
