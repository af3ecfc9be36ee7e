#include <doctest.h>

#include <cmath>
#include <random>

#include "bessel_oracle.hpp"
#include "linalg_oracle.hpp"
#include "stats_oracle.hpp"

// The oracles themselves are checked against tabulated values and textbook
// identities before any module test relies on them.

TEST_CASE("K0 oracle against tabulated values") {
  // Abramowitz & Stegun table 9.8.
  CHECK(static_cast<double>(oracle::bessel_k0(oracle::Big("0.1"))) == doctest::Approx(2.4270690247).epsilon(1e-10));
  CHECK(static_cast<double>(oracle::bessel_k0(oracle::Big(1))) == doctest::Approx(0.4210244382).epsilon(1e-10));
  CHECK(static_cast<double>(oracle::bessel_k0(oracle::Big(5))) == doctest::Approx(3.6910983340e-3).epsilon(1e-10));
  for (double x : {1e-3, 0.3, 2.0, 8.0, 20.0})
    CHECK(static_cast<double>(oracle::bessel_k0(oracle::Big(x))) == doctest::Approx(std::cyl_bessel_k(0.0, x)).epsilon(1e-13));
}

TEST_CASE("Jacobi eigenvalues against a diagonal similarity") {
  std::mt19937_64 eng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::CMatrix u = [&] {
      Eigen::HouseholderQR<oracle::CMatrix> qr(oracle::random_density(6, eng));
      return oracle::CMatrix(qr.householderQ());
    }();
    Eigen::VectorXd d(6);
    for (int i = 0; i < 6; ++i) d(i) = i - 2.5 + 0.1 * trial;
    const oracle::CMatrix h = u * d.cast<oracle::Complex>().asDiagonal() * u.adjoint();
    const auto ev = oracle::hermitian_eigenvalues(0.5 * (h + h.adjoint()));
    for (int i = 0; i < 6; ++i) CHECK(ev[i] == doctest::Approx(d(i)).epsilon(1e-11));
  }
}

TEST_CASE("partial trace oracle on product states") {
  std::mt19937_64 eng(2);
  const auto a = oracle::random_density(2, eng), b = oracle::random_density(2, eng), c = oracle::random_density(2, eng);
  oracle::CMatrix abc(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      abc(i, j) = a(i >> 2, j >> 2) * b((i >> 1) & 1, (j >> 1) & 1) * c(i & 1, j & 1);
  CHECK((oracle::partial_trace(abc, 3, {1}) - b).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((oracle::partial_trace(abc, 3, {2}) - c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("concurrence oracle on pure states") {
  std::mt19937_64 eng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXcd v = oracle::random_pure(4, eng);
    CHECK(oracle::concurrence(v * v.adjoint()) == doctest::Approx(oracle::pure_concurrence(v)).epsilon(1e-8));
  }
}

TEST_CASE("Poisson pmf oracle") {
  CHECK(static_cast<double>(oracle::poisson_pmf(0, 1.0L)) == doctest::Approx(std::exp(-1.0)));
  long double total = 0;
  for (std::uint64_t c = 0; c < 200; ++c) total += oracle::poisson_pmf(c, 37.5L);
  CHECK(static_cast<double>(total) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("BFS labels") {
  const auto l = oracle::bfs_labels(5, {{3, 4}, {1, 4}});
  CHECK(l == std::vector<std::size_t>{0, 1, 2, 1, 1});
}
