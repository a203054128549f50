#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "qkdnn/kernels.hpp"

using namespace qkdnn::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Summation order differs between variants, so compare against the bound
// n * eps * sum |x_i y_i|.
void check_equivalent(const KernelTable& ref, const KernelTable& other) {
  std::mt19937_64 rng(17);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 29u, 200u, 400u, 1001u}) {
    const std::vector<double> x = random_vector(n, rng);
    const std::vector<double> y = random_vector(n, rng);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y[i]);
    const double tol = 4.0 * (n + 1) * 2.2e-16 * (mag + 1.0);
    CHECK(std::abs(ref.dot(x.data(), y.data(), n) - other.dot(x.data(), y.data(), n)) <= tol);

    std::vector<double> a = y, b = y;
    ref.axpy(0.37, x.data(), a.data(), n);
    other.axpy(0.37, x.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-15);
  }
}

}  // namespace

TEST_CASE("scalar reference") {
  const KernelTable& s = scalar_table();
  CHECK(s.isa == Isa::scalar);
  const double x[] = {1, 2, 3};
  double y[] = {4, 5, 6};
  CHECK(s.dot(x, y, 3) == 32.0);
  s.axpy(2.0, x, y, 3);
  CHECK(y[0] == 6.0);
  CHECK(y[2] == 12.0);
}

TEST_CASE("vector variants agree with the scalar reference") {
  int tested = 0;
  if (const KernelTable* t = avx2_table()) {
    CHECK(t->isa == Isa::avx2);
    check_equivalent(scalar_table(), *t);
    ++tested;
  }
  if (const KernelTable* t = neon_table()) {
    CHECK(t->isa == Isa::neon);
    check_equivalent(scalar_table(), *t);
    ++tested;
  }
  MESSAGE("active kernels: " << to_string(active().isa) << ", vector variants tested: " << tested);
  CHECK(active().dot != nullptr);
}
