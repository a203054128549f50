#include "qkdnn/constraints.hpp"

#include <cmath>

#include "qkdnn/errors.hpp"
#include "qkdnn/fock.hpp"

namespace qkdnn::solver {

namespace {

constexpr double kGramTol = 1e-10;

void check_gram(const CMatrix& g) {
  if (g.rows() != channel::kNumStates || g.cols() != channel::kNumStates) {
    throw InvalidArgument("Gram target must be 4x4");
  }
  const double defect = hermiticity_defect(g);
  if (defect > kGramTol) throw InfeasibleError("Gram target is not Hermitian", defect);
  const double trace_err = std::abs(g.trace().real() - 1.0);
  if (trace_err > kGramTol) throw InfeasibleError("Gram target trace differs from 1", trace_err);
  const double lmin = min_eigenvalue(g);
  if (lmin < -kGramTol) throw InfeasibleError("Gram target is not positive semidefinite", -lmin);
}

}  // namespace

ConstraintSet::ConstraintSet(int nc, const std::array<double, kMomentConstraints>& moment_targets,
                             const CMatrix& gram)
    : nc_(nc), moments_(moment_targets), gram_(gram) {
  const fock::Cutoff cutoff(nc);
  check_gram(gram_);
  const fock::Observables obs = fock::build_observables(cutoff);
  ops_ = {obs.q.matrix(), obs.p.matrix(), obs.n.matrix(), obs.d.matrix(),
          CMatrix::Identity(cutoff.dim(), cutoff.dim())};
  build_rows();
}

void ConstraintSet::build_rows() {
  constraints_.clear();
  constraints_.reserve(kTotalConstraints);
  for (int x = 0; x < channel::kNumStates; ++x) {
    for (int o = 0; o < 4; ++o) {
      constraints_.push_back({{{x, x, cplx(1.0), o}}, moments_[static_cast<std::size_t>(4 * x + o)]});
    }
  }
  // Tr(rho (|j><i| (x) id)) = G_ij
  for (int a = 0; a < channel::kNumStates; ++a) {
    constraints_.push_back({{{a, a, cplx(1.0), kOpId}}, gram_(a, a).real()});
  }
  const cplx half(0.5, 0.0);
  const cplx half_i(0.0, 0.5);
  for (const auto& [i, j] : channel::kGramPairs) {
    constraints_.push_back({{{j, i, half, kOpId}, {i, j, half, kOpId}}, gram_(i, j).real()});
    constraints_.push_back({{{j, i, -half_i, kOpId}, {i, j, half_i, kOpId}}, gram_(i, j).imag()});
  }
}

RVector ConstraintSet::targets() const {
  RVector b(size());
  for (int i = 0; i < size(); ++i) b(i) = constraints_[static_cast<std::size_t>(i)].target;
  return b;
}

RVector ConstraintSet::apply(const CMatrix& x) const {
  const int n = block_dim();
  RVector out(size());
  for (int i = 0; i < size(); ++i) {
    cplx acc = 0.0;
    for (const BlockTerm& t : constraints_[static_cast<std::size_t>(i)].terms) {
      // Tr((|r><s| (x) O) X) = Tr(O X_sr)
      acc += t.coeff *
             trace_product(ops_[static_cast<std::size_t>(t.op)], x.block(t.col_block * n, t.row_block * n, n, n));
    }
    out(i) = acc.real();
  }
  return out;
}

CMatrix ConstraintSet::adjoint(const RVector& y) const {
  const int n = block_dim();
  CMatrix out = CMatrix::Zero(dim(), dim());
  for (int i = 0; i < size(); ++i) {
    for (const BlockTerm& t : constraints_[static_cast<std::size_t>(i)].terms) {
      out.block(t.row_block * n, t.col_block * n, n, n) +=
          (y(i) * t.coeff) * ops_[static_cast<std::size_t>(t.op)];
    }
  }
  return out;
}

CMatrix ConstraintSet::dense(int i) const {
  RVector e = RVector::Zero(size());
  e(i) = 1.0;
  return adjoint(e);
}

double ConstraintSet::max_residual(const CMatrix& rho) const {
  const double eq = (apply(rho) - targets()).cwiseAbs().maxCoeff();
  return std::max(eq, std::abs(rho.trace().real() - trace_target()));
}

ConstraintSet ConstraintSet::with_targets_of(const CMatrix& rho) const {
  ConstraintSet out = *this;
  const RVector attained = apply(rho);
  for (int i = 0; i < size(); ++i) out.constraints_[static_cast<std::size_t>(i)].target = attained(i);
  for (int i = 0; i < kMomentConstraints; ++i) out.moments_[static_cast<std::size_t>(i)] = attained(i);
  const int n = block_dim();
  for (int a = 0; a < channel::kNumStates; ++a) {
    for (int b = 0; b < channel::kNumStates; ++b) out.gram_(a, b) = rho.block(a * n, b * n, n, n).trace();
  }
  return out;
}

ConstraintSet build_constraints(const channel::ProtocolParams& params) {
  params.validate();
  const channel::FeatureVector f = channel::assemble_features(params);
  std::array<double, kMomentConstraints> moments{};
  for (int i = 0; i < kMomentConstraints; ++i) moments[static_cast<std::size_t>(i)] = f[i];
  return ConstraintSet(params.nc, moments, channel::gram_matrix(params));
}

ConstraintSet build_constraints(const channel::FeatureVector& features,
                                const std::array<double, channel::kNumStates>& probs, int nc) {
  std::array<double, kMomentConstraints> moments{};
  for (int i = 0; i < kMomentConstraints; ++i) moments[static_cast<std::size_t>(i)] = features[i];
  CMatrix g = CMatrix::Zero(channel::kNumStates, channel::kNumStates);
  for (int a = 0; a < channel::kNumStates; ++a) g(a, a) = probs[static_cast<std::size_t>(a)];
  int k = channel::kMomentFeatures;
  for (const auto& [i, j] : channel::kGramPairs) {
    const cplx v(features[k], features[k + 1]);
    k += 2;
    g(i, j) = v;
    g(j, i) = std::conj(v);
  }
  return ConstraintSet(nc, moments, g);
}

}  // namespace qkdnn::solver
