#pragma once

// Asymptotic key rate R = min_{rho in S} D(G(rho) || Z[G(rho)]) - p_pass delta_EC
// for homodyne four-state discrete modulation under reverse reconciliation.

#include <array>
#include <string>

#include "qkdnn/channel.hpp"
#include "qkdnn/constraints.hpp"
#include "qkdnn/sdp.hpp"

namespace qkdnn::solver {

/// Key-map isometry pieces K_z = |z>_R (x) id_A (x) sqrt(I_z)_B for z = 0, 1.
/// G(rho) = K rho K^dagger with K = K_0 + K_1.
struct KeyMap {
  int nc = 0;
  double delta_c = 0.0;
  std::array<CMatrix, 2> sqrt_region;  // (Nc+1)-dim, acting on B
  std::array<CMatrix, 2> on_ab;        // id_A (x) sqrt(I_z), 4(Nc+1)-dim

  int ab_dim() const { return 4 * (nc + 1); }
  /// The full (2 * ab_dim) x ab_dim Kraus piece K_z.
  CMatrix kraus(int z) const;
};

KeyMap key_map_isometry(double delta_c, int nc);

inline constexpr double kDefaultPerturbation = 1e-9;
inline constexpr double kEigenFloor = 1e-12;

struct ObjectiveValue {
  double f = 0.0;  // bits
  CMatrix grad;    // ab_dim Hermitian
};

/// f = D(G_e || Z(G_e)) with G_e = (1 - eps) G(rho) + eps id / dim, and its exact
/// gradient with respect to rho. Throws NumericalError on non-finite values.
ObjectiveValue objective_and_gradient(const CMatrix& rho, const KeyMap& key_map,
                                      double eps_pert = kDefaultPerturbation);

double objective(const CMatrix& rho, const KeyMap& key_map, double eps_pert = kDefaultPerturbation);

/// The block-embedded state G(rho), dimension 2 * ab_dim.
CMatrix apply_key_map(const CMatrix& rho, const KeyMap& key_map);

/// Pinching on the key register.
CMatrix pinch(const CMatrix& g);

/// Near-analytic-center feasible point. Throws InfeasibleError with the best
/// primal residual seen when no density matrix meets the constraints to 1e-8.
CMatrix feasible_initial_point(const ConstraintSet& constraints, const SdpOptions& sdp = {});

struct Realization {
  ConstraintSet constraints;
  CMatrix anchor;              // state attaining the new targets
  double fit_residual = 0.0;   // max |A(rho_fit) - b| of the least-squares fit
  double adjustment = 0.0;     // max |b' - b|
};

struct RealizationOptions {
  int max_iter = 4000;
  double interior_weight = 1e-5;  // mixing weight of id/dim into the fitted state
};

/// Least-squares fit of a density matrix to the targets (projected accelerated
/// gradient over the unit-trace PSD set), slightly mixed towards id/dim, and
/// the constraint set whose targets that state attains exactly.
Realization realize_constraints(const ConstraintSet& constraints,
                                const RealizationOptions& options = {});

struct FrankWolfeOptions {
  double tol = 1e-6;
  int max_iter = 300;
  double eps_pert = kDefaultPerturbation;
  SdpOptions sdp{};
};

enum class SolveStatus { converged, max_iterations, stagnated, infeasible };

std::string to_string(SolveStatus s);

struct FrankWolfeResult {
  CMatrix rho;
  double f = 0.0;
  double gap = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::converged;
  CMatrix grad;        // gradient at rho
  SdpResult last_sdp;  // linear subproblem solved at rho with grad
  std::vector<double> f_trace;
  std::vector<double> gap_trace;
};

FrankWolfeResult frank_wolfe(const ConstraintSet& constraints, const KeyMap& key_map,
                             const CMatrix& rho0, const FrankWolfeOptions& options = {});

/// f - Tr(grad rho) + min_{sigma in S} Tr(grad sigma), the inner minimum taken
/// from the dual certificate of the linear subproblem.
double certified_lower_bound(const CMatrix& rho, const CMatrix& grad, double f,
                             const ConstraintSet& constraints, const SdpOptions& sdp = {});
double certified_lower_bound(const CMatrix& rho, const CMatrix& grad, double f,
                             const ConstraintSet& constraints, const SdpResult& solved);

struct KeyRateOptions {
  FrankWolfeOptions fw{};
  RealizationOptions realization{};
  /// Targets unreachable at the cutoff are replaced by the closest realizable
  /// ones; beyond this shift (max abs) the instance is reported infeasible.
  double max_target_adjustment = 0.05;
};

struct KeyRateReport {
  double primal_objective = 0.0;
  double certified_lower_bound = 0.0;
  double fw_gap = 0.0;
  int iterations = 0;
  double p_pass = 1.0;
  double delta_ec = 0.0;
  double key_rate = 0.0;
  SolveStatus status = SolveStatus::converged;
  double target_adjustment = 0.0;
  double constraint_residual = 0.0;
};

KeyRateReport key_rate(const channel::ProtocolParams& params, const KeyRateOptions& options = {});

/// Solve from an already assembled constraint set (feature-vector path).
KeyRateReport key_rate(const ConstraintSet& constraints, const channel::ProtocolParams& params,
                       const KeyRateOptions& options = {});

}  // namespace qkdnn::solver
