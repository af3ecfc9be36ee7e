#include <doctest.h>

#include <cmath>
#include <random>

#include "channelion/entanglement.hpp"
#include "linalg_oracle.hpp"

using namespace channelion;
using namespace channelion::entangle;

namespace {

const Bell kAll[] = {Bell::kPhiPlus, Bell::kPhiMinus, Bell::kPsiPlus, Bell::kPsiMinus};

double binary_entropy(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

CMatrix random_unitary(int dim, std::mt19937_64& eng) {
  std::normal_distribution<double> g;
  CMatrix m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = Complex(g(eng), g(eng));
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("Bell states") {
  const auto phi = bell_state(Bell::kPhiPlus);
  const double s = 1 / std::sqrt(2.0);
  CHECK(std::abs(phi[1] - s) < 1e-15);
  CHECK(std::abs(phi[2] - s) < 1e-15);
  CHECK(std::abs(phi[0]) == 0.0);
  CHECK(std::abs(phi[3]) == 0.0);
  CMatrix mix = CMatrix::Zero(4, 4);
  for (auto a : kAll) {
    mix += bell_state(a).projector() / 4.0;
    for (auto b : kAll)
      if (a != b) CHECK(std::abs(bell_state(a).inner(bell_state(b))) < 1e-12);
  }
  CHECK(max_abs_diff(mix, CMatrix::Identity(4, 4) / 4.0) < 1e-15);
}

TEST_CASE("Werner states") {
  CHECK(max_abs_diff(werner_state({0.0, 0.3, 1}).matrix(), CMatrix::Identity(4, 4) / 4.0) < 1e-15);
  CVector hh_vv = CVector::Zero(4);
  hh_vv(0) = hh_vv(3) = 1 / std::sqrt(2.0);
  CHECK(max_abs_diff(werner_state({1.0, 0.0, 1}).matrix(), hh_vv * hh_vv.adjoint()) < 1e-15);
  CHECK(max_abs_diff(werner_state({1.0, 0.0, 1}).matrix(), bell_state(Bell::kPsiPlus).projector()) < 1e-15);
  CHECK(max_abs_diff(werner_state({1.0, 0.0, -1}).matrix(), bell_state(Bell::kPsiMinus).projector()) < 1e-15);

  const auto ev = oracle::hermitian_eigenvalues(werner_state({0.65, 0.4, 1}).matrix());
  CHECK(ev[0] == doctest::Approx(0.0875).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(0.0875).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(0.0875).epsilon(1e-12));
  CHECK(ev[3] == doctest::Approx(0.7375).epsilon(1e-12));

  CHECK_THROWS_AS(werner_state({1.1, 0, 1}), DomainError);
  CHECK_THROWS_AS(werner_state({-0.1, 0, 1}), DomainError);
  CHECK_THROWS_AS(werner_state({0.5, 0, 0}), DomainError);
}

TEST_CASE("concurrence examples") {
  CHECK(concurrence(werner_state({1.0, 0.0, 1})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(concurrence(werner_state({1.0 / 3.0, 0.0, 1}))) < 1e-12);
  CHECK(std::abs(concurrence(werner_state({0.65, 0.0, 1})) - 0.475) < 1e-10);
  CHECK_THROWS_AS(concurrence(DensityMatrix::maximally_mixed(8)), StateError);
}

TEST_CASE("Werner concurrence closed form over a p-grid") {
  for (int i = 0; i <= 200; ++i) {
    const double p = i / 200.0;
    for (double phi : {0.0, 1.1}) {
      const double c = concurrence(werner_state({p, phi, (i % 2) ? 1 : -1}));
      CHECK(std::abs(c - std::max(0.0, (3 * p - 1) / 2)) < 1e-10);
    }
  }
}

TEST_CASE("concurrence agrees with the Wootters oracle on random states") {
  std::mt19937_64 eng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const CMatrix rho = oracle::random_density(4, eng, 1 + trial % 4);
    CHECK(std::abs(concurrence(DensityMatrix(rho)) - oracle::concurrence(rho)) < 1e-9);
  }
}

TEST_CASE("product states have zero concurrence") {
  std::mt19937_64 eng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector v = kron(oracle::random_pure(2, eng), oracle::random_pure(2, eng));
    CHECK(concurrence(DensityMatrix(PureState(v))) < 1e-9);
  }
}

TEST_CASE("concurrence is invariant under local unitaries") {
  std::mt19937_64 eng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix rho = oracle::random_density(4, eng, 1 + trial % 4);
    const CMatrix u = kron(random_unitary(2, eng), random_unitary(2, eng));
    CMatrix rotated = u * rho * u.adjoint();
    rotated = 0.5 * (rotated + rotated.adjoint()).eval();
    CHECK(std::abs(concurrence(DensityMatrix(rotated)) - concurrence(DensityMatrix(rho))) < 1e-9);
  }
}

TEST_CASE("entanglement of formation") {
  CHECK(entanglement_of_formation(0.0) == 0.0);
  CHECK(entanglement_of_formation(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double c = 0.475;
  CHECK(entanglement_of_formation(c) == doctest::Approx(binary_entropy((1 + std::sqrt(1 - c * c)) / 2)));
  CHECK(entanglement_of_formation(c) == doctest::Approx(0.327).epsilon(0.005));
  double prev = -1;
  for (int i = 0; i < 1000; ++i) {
    const double e = entanglement_of_formation(i / 999.0);
    CHECK(e > prev);
    prev = e;
  }
  CHECK_THROWS_AS(entanglement_of_formation(1.01), DomainError);
  CHECK_THROWS_AS(entanglement_of_formation(-0.01), DomainError);

  std::mt19937_64 eng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const double e = entanglement_of_formation(concurrence(DensityMatrix(oracle::random_density(4, eng))));
    CHECK(e >= 0.0);
    CHECK(e < 1.0 - 1e-9);
  }
  for (auto b : kAll) CHECK(entanglement_of_formation(concurrence(DensityMatrix(bell_state(b)))) > 1.0 - 1e-9);
}

TEST_CASE("cat states") {
  const auto vac = cat_state({0.0, Parity::kEven, std::nullopt});
  CHECK(std::abs(vac[0] - 1.0) < 1e-15);
  for (Eigen::Index i = 1; i < vac.dim(); ++i) CHECK(std::abs(vac[i]) == 0.0);

  const auto even = cat_state({1.2, Parity::kEven, std::nullopt});
  const auto odd = cat_state({1.2, Parity::kOdd, std::nullopt});
  CHECK(std::abs(even.inner(odd)) < 1e-15);
  for (Eigen::Index n = 0; n < even.dim(); ++n) {
    if (n % 2) CHECK(std::abs(even[n]) == 0.0);
    else CHECK(std::abs(odd[n]) == 0.0);
  }
  for (double a : {0.5, 1.0, 2.0, 3.0})
    for (auto parity : {Parity::kEven, Parity::kOdd}) {
      const auto cat = cat_state({Complex(a * 0.6, a * 0.8), parity, std::nullopt});
      CHECK(std::abs(cat.amplitudes().norm() - 1.0) < 1e-12);
    }
  CHECK(minimum_fock_cutoff(2.0) == 26);
  CHECK_THROWS_AS(cat_state({2.0, Parity::kEven, 20}), DomainError);
  CHECK_THROWS_AS(cat_state({0.0, Parity::kOdd, std::nullopt}), DomainError);
}

TEST_CASE("coherent-state concurrence") {
  CHECK(coherent_concurrence(0.0, 2.3) == 0.0);
  CHECK(std::abs(coherent_concurrence(1.0, 1.0) - (1 - std::exp(-4.0))) < 1e-12);
  CHECK(coherent_concurrence(0.7, 1.3) == coherent_concurrence(1.3, 0.7));
  double prev = 0.0;
  for (int i = 1; i <= 60; ++i) {
    const double c = coherent_concurrence(0.05 * i, 0.9);
    CHECK(c > prev);
    prev = c;
  }
  CHECK(coherent_concurrence(10.0, 10.0) > 1.0 - 1e-15);
  CHECK_THROWS_AS(coherent_concurrence(-0.1, 1.0), DomainError);
}

TEST_CASE("tripartite state") {
  const auto t = tripartite_state();
  CHECK(std::abs(t.amplitudes().norm() - 1.0) < 1e-15);
  const CMatrix rho = t.projector();
  CHECK(max_abs_diff(oracle::partial_trace(rho, 3, {2}), CMatrix::Identity(2, 2) / 2.0) < 1e-12);
  const std::vector<int> first{0};
  CHECK(entanglement_entropy(t, first) == doctest::Approx(1.0).epsilon(1e-12));
  // Schmidt oracle: singular values of the 2 x 4 coefficient matrix.
  Eigen::MatrixXcd coeff(2, 4);
  for (int i = 0; i < 8; ++i) coeff(i / 4, i % 4) = t[i];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coeff);
  double h = 0;
  for (int i = 0; i < 2; ++i) {
    const double l = std::pow(svd.singularValues()(i), 2);
    if (l > 0) h -= l * std::log2(l);
  }
  CHECK(h == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cavity state") {
  const auto c = cavity_state();
  CHECK(std::abs(c.amplitudes().norm() - 1.0) < 1e-15);
  CHECK(concurrence(DensityMatrix(c)) == doctest::Approx(1.0).epsilon(1e-12));
  CVector minus = CVector::Zero(4);
  minus(0) = 1 / std::sqrt(2.0);
  minus(3) = -1 / std::sqrt(2.0);
  CHECK(std::abs(c.inner(PureState(minus))) < 1e-15);
}
