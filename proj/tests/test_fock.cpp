#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qkdnn/errors.hpp"
#include "qkdnn/fock.hpp"

using namespace qkdnn;
using namespace qkdnn::fock;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

CMatrix region(KeySymbol z, double dc, int nc) { return region_operator(z, dc, Cutoff(nc)).matrix(); }

}  // namespace

TEST_CASE("annihilation entries") {
  const CMatrix a1 = annihilation(Cutoff(1));
  CHECK(a1(0, 1).real() == doctest::Approx(1.0));
  CHECK(std::abs(a1(1, 0)) == 0.0);
  CHECK(annihilation(Cutoff(2))(1, 2).real() == doctest::Approx(std::sqrt(2.0)));

  CVector one = CVector::Zero(3);
  one(1) = 1.0;
  const FockVector out = fock::apply(annihilation(Cutoff(2)), FockVector(one));
  CHECK(std::abs(out.amplitudes()(0) - cplx(1.0)) < 1e-15);
  CHECK(out.amplitudes().tail(2).norm() < 1e-15);
}

TEST_CASE("cutoff bounds") {
  CHECK_THROWS_AS(Cutoff{0}, InvalidArgument);
  CHECK_THROWS_AS(Cutoff{kMaxCutoff + 1}, InvalidArgument);
  CHECK_NOTHROW(Cutoff{kMaxCutoff});
}

TEST_CASE("truncated commutator") {
  for (int nc = 1; nc <= 20; ++nc) {
    const CMatrix a = annihilation(Cutoff(nc));
    CMatrix expected = CMatrix::Identity(nc + 1, nc + 1);
    expected(nc, nc) = cplx(-nc);
    const CMatrix comm = a * a.adjoint() - a.adjoint() * a;
    CHECK((comm - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("observables are Hermitian and consistent") {
  for (int nc : {2, 5, 10}) {
    const Observables o = build_observables(Cutoff(nc));
    CHECK(hermiticity_defect(o.q.matrix()) < 1e-14);
    CHECK(hermiticity_defect(o.p.matrix()) < 1e-14);
    // n and d come from the untruncated operators
    for (int k = 0; k <= nc; ++k) CHECK(o.n(k, k).real() == doctest::Approx(k));
    for (int k = 0; k + 2 <= nc; ++k) CHECK(o.d(k + 2, k).real() == doctest::Approx(std::sqrt((k + 1.0) * (k + 2.0))));
    const CMatrix qq = o.q.matrix() * o.q.matrix() - o.p.matrix() * o.p.matrix();
    // q^2 - p^2 agrees with d except in the last two rows/columns touched by truncation
    CHECK((qq - o.d.matrix()).topLeftCorner(nc - 1, nc - 1).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-Hermitian input rejected") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(HermitianOperator{m}, InvalidArgument);
  CHECK_THROWS_AS(HermitianOperator{CMatrix::Identity(1, 1)}, InvalidArgument);
}

TEST_CASE("coherent state norm and overlap") {
  const FockVector v = coherent_state(cplx(0.6, 0.0), Cutoff(10));
  CHECK(std::abs(v.squared_norm() - 1.0) < 1e-10);
  CHECK(v.squared_norm() <= 1.0 + 1e-12);

  const cplx alphas[] = {cplx(0.7, 0.0), cplx(-0.7, 0.0), cplx(0.0, 0.7), cplx(0.3, -0.5)};
  for (const cplx& a : alphas) {
    for (const cplx& b : alphas) {
      const cplx exact = std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(b) * a);
      CHECK(std::abs(coherent_overlap(a, b) - exact) < 1e-14);
      for (int nc : {20, 30}) {
        const cplx trunc = coherent_state(b, Cutoff(nc)).inner(coherent_state(a, Cutoff(nc)));
        CHECK(std::abs(trunc - exact) < 1e-8);
      }
    }
  }
}

TEST_CASE("region operators: closed forms") {
  for (double dc : {0.0, 0.3, 1.0}) {
    const CMatrix i0 = region(KeySymbol::zero, dc, 4);
    CHECK(std::abs(i0(0, 0) - 0.5 * std::erfc(dc)) < 1e-10);
    CHECK(std::abs(i0(0, 1) - std::exp(-dc * dc) / kSqrt2Pi) < 1e-10);
  }
}

TEST_CASE("region operators: completeness, parity, spectrum") {
  for (int nc = 2; nc <= 12; ++nc) {
    const CMatrix i0 = region(KeySymbol::zero, 0.0, nc);
    const CMatrix i1 = region(KeySymbol::one, 0.0, nc);
    CHECK((i0 + i1 - CMatrix::Identity(nc + 1, nc + 1)).cwiseAbs().maxCoeff() < 1e-10);
    for (int m = 0; m <= nc; ++m) {
      for (int n = 0; n <= nc; ++n) {
        const double sign = (m + n) % 2 ? -1.0 : 1.0;
        CHECK(std::abs(i1(m, n) - sign * i0(m, n)) < 1e-10);
      }
    }
    const RVector ev = hermitian_eigen(i0).values;
    CHECK(ev.minCoeff() >= -1e-10);
    CHECK(ev.maxCoeff() <= 1.0 + 1e-10);
  }
}

TEST_CASE("region operator shrinks as the threshold grows") {
  const int nc = 6;
  CMatrix prev = region(KeySymbol::zero, 0.0, nc);
  for (double dc = 0.1; dc <= 1.0; dc += 0.1) {
    const CMatrix cur = region(KeySymbol::zero, dc, nc);
    CHECK(min_eigenvalue(prev - cur) >= -1e-10);
    prev = cur;
  }
  CHECK_THROWS_AS(region_operator(KeySymbol::zero, -0.1, Cutoff(3)), InvalidArgument);
}

TEST_CASE("region expectation on a coherent state") {
  const int nc = 30;
  for (double re : {-0.8, 0.0, 0.5}) {
    for (double dc : {0.0, 0.4}) {
      const CVector v = coherent_state(cplx(re, 0.2), Cutoff(nc)).amplitudes();
      const double p = (v.adjoint() * region(KeySymbol::zero, dc, nc) * v)(0, 0).real();
      CHECK(std::abs(p - 0.5 * std::erfc(dc - std::numbers::sqrt2 * re)) < 1e-8);
    }
  }
}
