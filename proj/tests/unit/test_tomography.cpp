#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "channelion/entanglement.hpp"
#include "channelion/rng.hpp"
#include "channelion/tomography.hpp"
#include "linalg_oracle.hpp"
#include "stats_oracle.hpp"

using namespace channelion;
using namespace channelion::tomo;

namespace {

// 2-norm condition number of the Gram matrix of the 16 standard projectors.
constexpr double kFrozenGramCondition = 95.04971192993553;

TomographyRecord noiseless_record(const DensityMatrix& rho, double n) {
  TomographyRecord rec;
  for (double m : expected_counts(rho, n)) rec.counts.push_back(static_cast<std::uint64_t>(std::llround(m)));
  rec.n_scale = n;
  return rec;
}

DensityMatrix werner(double p) { return entangle::werner_state({p, 0.0, 1}); }

}  // namespace

TEST_CASE("projector set") {
  const auto& ps = ProjectorSet::standard();
  REQUIRE(ps.size() == 16);
  const std::vector<std::string> order{"HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                                       "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
  CHECK(ps.labels() == order);
  for (std::size_t j = 0; j < 16; ++j) {
    const CMatrix& p = ps.projector(j);
    CHECK(max_abs_diff(p * p, p) < 1e-15);
    CHECK(std::abs(p.trace() - 1.0) < 1e-15);
  }
  CHECK(ps.index_of("DR") == 8);
  CHECK_THROWS_AS(ps.index_of("XX"), ConfigError);

  // |RH> = (|HH> - i|VH>)/sqrt2.
  CHECK(std::abs(ps.projector(4)(2, 2) - 0.5) < 1e-15);
  CHECK(std::abs(ps.projector(4)(0, 2) - Complex(0, 0.5)) < 1e-15);

  const double cond = ps.gram_condition_number();
  CHECK(std::isfinite(cond));
  CHECK(cond == doctest::Approx(kFrozenGramCondition).epsilon(1e-9));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ps.gram());
  CHECK(lu.rank() == 16);
}

TEST_CASE("design matrix reproduces projector probabilities") {
  const auto& ps = ProjectorSet::standard();
  std::mt19937_64 eng(31);
  const CMatrix rho = oracle::random_density(4, eng);
  Eigen::VectorXd r(16);
  for (int k = 0; k < 16; ++k) r(k) = (rho * pauli_product(k / 4, k % 4)).trace().real();
  const Eigen::VectorXd probs = ps.design() * r;
  for (int j = 0; j < 16; ++j) CHECK(std::abs(probs(j) - (ps.projector(j) * rho).trace().real()) < 1e-14);
}

TEST_CASE("simulate_counts") {
  const auto mixed = DensityMatrix::maximally_mixed(4);
  const auto rec = simulate_counts(mixed, 1e6, 9);
  REQUIRE(rec.counts.size() == 16);
  for (auto c : rec.counts) CHECK(std::abs(static_cast<double>(c) - 2.5e5) < 5 * std::sqrt(2.5e5));
  CHECK(rec.counts == simulate_counts(mixed, 1e6, 9).counts);
  CHECK(rec.counts != simulate_counts(mixed, 1e6, 10).counts);

  CVector hh = CVector::Zero(4);
  hh(0) = 1;
  const auto e = expected_counts(DensityMatrix(PureState(hh)), 1e4);
  CHECK(e[0] == doctest::Approx(1e4));
  CHECK(e[2] == 0.0);
  CHECK(simulate_counts(DensityMatrix(PureState(hh)), 1e4, 3).counts[2] == 0);
  CHECK_THROWS_AS(simulate_counts(mixed, 0.5, 1), DomainError);
}

TEST_CASE("record validation") {
  TomographyRecord rec;
  rec.counts.assign(15, 1);
  CHECK_THROWS_AS(rec.validate(ProjectorSet::standard()), ConfigError);
  CHECK_THROWS_AS(linear_reconstruct(rec), ConfigError);
  rec.counts.assign(16, 1);
  rec.labels = ProjectorSet::standard().labels();
  std::swap(rec.labels[0], rec.labels[1]);
  CHECK_THROWS_AS(rec.validate(ProjectorSet::standard()), ConfigError);
}

TEST_CASE("linear reconstruction") {
  std::mt19937_64 eng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho(oracle::random_density(4, eng));
    const auto probs = expected_counts(rho, 1.0);
    CHECK(max_abs_diff(linear_reconstruct_probabilities(probs), rho.matrix()) < 1e-10);
  }
  const auto truth = werner(0.71);
  const auto lin = linear_reconstruct(simulate_counts(truth, 1e4, 5));
  CHECK(std::abs(lin.rho.trace() - 1.0) < 1e-12);
  CHECK((lin.rho - lin.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(uhlmann_fidelity(project_to_density_matrix(lin.rho), truth) > 0.98);

  // A projector set whose design matrix is singular.
  const auto& ps = ProjectorSet::standard();
  std::vector<std::string> labels(16, "HH");
  std::vector<CMatrix> ops(16, ps.projector(0));
  const ProjectorSet degenerate(labels, ops);
  std::vector<double> p(16, 1.0 / 16);
  CHECK_THROWS_AS(linear_reconstruct_probabilities(p, degenerate), NumericalError);
}

TEST_CASE("PSD projection") {
  CMatrix h = CMatrix::Zero(4, 4);
  h(0, 0) = 1.2;
  h(1, 1) = -0.1;
  h(2, 2) = -0.1;
  const auto rho = project_to_density_matrix(h);
  const auto ev = oracle::hermitian_eigenvalues(rho.matrix());
  CHECK(ev.front() >= -1e-15);
  CHECK(rho.matrix()(0, 0).real() == doctest::Approx(1.0));
}

TEST_CASE("MLE: noiseless counts recover the truth") {
  std::mt19937_64 eng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix rho(oracle::random_density(4, eng, 4));
    const auto mle = mle_reconstruct(noiseless_record(rho, 1e12));
    CHECK(uhlmann_fidelity(mle.rho, rho) > 1 - 1e-6);
  }
  const auto mle = mle_reconstruct(noiseless_record(werner(0.71), 1e12));
  CHECK(uhlmann_fidelity(mle.rho, werner(0.71)) > 1 - 1e-6);
}

TEST_CASE("MLE output is always a valid state") {
  std::mt19937_64 eng(34);
  std::uniform_int_distribution<std::uint64_t> u(0, 500);
  for (int trial = 0; trial < 100; ++trial) {
    TomographyRecord rec;
    for (int j = 0; j < 16; ++j) rec.counts.push_back(trial % 10 == 0 && j % 3 == 0 ? 0 : u(eng));
    const auto mle = mle_reconstruct(rec);
    const auto d = diagnose(mle.rho.matrix());
    CHECK(d.trace_error < 1e-10);
    CHECK(d.min_eigenvalue >= -1e-8);
    CHECK(std::isfinite(mle.log_likelihood));
  }
}

TEST_CASE("MLE fidelity beats the projected linear estimate on average") {
  const auto truth = werner(0.65);
  double f_mle = 0, f_lin = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto rec = simulate_counts(truth, 1e3, rng::derive(77, {s}));
    f_mle += uhlmann_fidelity(mle_reconstruct(rec).rho, truth);
    f_lin += uhlmann_fidelity(project_to_density_matrix(linear_reconstruct(rec).rho), truth);
  }
  CHECK(f_mle >= f_lin);
}

TEST_CASE("reconstruction fidelity improves with counts") {
  const auto truth = werner(0.71);
  std::vector<double> means;
  for (double n : {1e2, 1e3, 1e4, 1e5}) {
    double sum = 0;
    for (std::uint64_t s = 0; s < 50; ++s)
      sum += uhlmann_fidelity(mle_reconstruct(simulate_counts(truth, n, rng::derive(5, {s}))).rho, truth);
    means.push_back(sum / 50);
  }
  for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] > means[i - 1]);
  CHECK(means.back() > 0.999);
}

TEST_CASE("Uhlmann fidelity") {
  std::mt19937_64 eng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix a(oracle::random_density(4, eng)), b(oracle::random_density(4, eng));
    CHECK(uhlmann_fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    const double fab = uhlmann_fidelity(a, b);
    CHECK(fab == doctest::Approx(uhlmann_fidelity(b, a)).epsilon(1e-9));
    CHECK(fab >= 0.0);
    CHECK(fab < 1.0 - 1e-9);
  }
  const auto phi = entangle::bell_state(entangle::Bell::kPhiPlus);
  const auto psi = entangle::bell_state(entangle::Bell::kPsiPlus);
  CHECK(uhlmann_fidelity(DensityMatrix(phi), DensityMatrix(psi)) < 1e-12);
  CHECK(uhlmann_fidelity(DensityMatrix(phi), DensityMatrix::maximally_mixed(4)) == doctest::Approx(0.25));
  CHECK(uhlmann_fidelity(DensityMatrix::maximally_mixed(4), phi) == doctest::Approx(0.25));
  CHECK_THROWS_AS(uhlmann_fidelity(DensityMatrix::maximally_mixed(4), DensityMatrix::maximally_mixed(2)),
                  ConfigError);
}

TEST_CASE("Poisson likelihood") {
  CHECK(std::exp(poisson_log_pmf(0, 1.0)) == doctest::Approx(0.36788).epsilon(1e-5));
  CHECK(std::exp(poisson_log_pmf(3, 2.5)) == doctest::Approx(double(oracle::poisson_pmf(3, 2.5L))).epsilon(1e-13));

  std::mt19937_64 eng(36);
  std::uniform_real_distribution<double> um(0.5, 40.0);
  std::vector<std::uint64_t> c(16);
  std::vector<double> mk(16), mi(16);
  for (int j = 0; j < 16; ++j) {
    mk[j] = um(eng);
    mi[j] = um(eng);
    c[j] = static_cast<std::uint64_t>(um(eng));
  }
  double endpoint = 1.0;
  for (int j = 0; j < 16; ++j) {
    const double dk = std::exp(poisson_log_pmf(c[j], mk[j])), di = std::exp(poisson_log_pmf(c[j], mi[j]));
    endpoint *= dk / (dk + di);
  }
  CHECK(poisson_likelihood(1.0, c, mk, mi).value == doctest::Approx(endpoint).epsilon(1e-12));
  CHECK(poisson_likelihood(0.3, c, mk, mi).value ==
        doctest::Approx(double(oracle::likelihood(0.3, c, mk, mi))).epsilon(1e-12));
  CHECK(poisson_likelihood(0.3, c, mk, mk).value == doctest::Approx(std::pow(2.0, -16)).epsilon(1e-14));

  // Large counts stay finite in log space.
  std::vector<std::uint64_t> big(16, 1'000'000'000);
  std::vector<double> mbig(16, 1e9), mbig2(16, 1.0001e9);
  const auto l = poisson_likelihood(0.5, big, mbig, mbig2);
  CHECK(std::isfinite(l.log_value));

  CHECK_THROWS_AS(poisson_likelihood(1.5, c, mk, mi), DomainError);
  std::vector<double> zero(16, 0.0);
  CHECK_THROWS_AS(poisson_likelihood(0.5, c, zero, mi), DomainError);
}

TEST_CASE("posterior weights") {
  const auto truth = werner(0.9);
  const auto rec = simulate_counts(truth, 1e4, 3);
  const std::vector<DensityMatrix> one{truth};
  CHECK(posterior_weights(one, rec)[0] == doctest::Approx(1.0));
  const std::vector<DensityMatrix> twins{truth, truth};
  const auto w2 = posterior_weights(twins, rec);
  CHECK(w2[0] == doctest::Approx(0.5));
  CHECK(w2[1] == doctest::Approx(0.5));
  const std::vector<DensityMatrix> pair{truth, DensityMatrix(entangle::bell_state(entangle::Bell::kPhiMinus))};
  const auto w = posterior_weights(pair, rec);
  CHECK(w[0] > 0.999);
  CHECK(std::abs(w[0] + w[1] - 1.0) < 1e-12);
  CHECK_THROWS_AS(posterior_weights(std::span<const DensityMatrix>{}, rec), ConfigError);
}

TEST_CASE("Monte-Carlo fidelity statistics") {
  const auto target = entangle::bell_state(entangle::Bell::kPsiPlus);
  McOptions one;
  one.iterations = 1;
  const auto single = mc_fidelity(werner(0.71), target, 1e3, 4, one);
  CHECK(single.std_dev == 0.0);
  CHECK(single.iterations == 1);

  McOptions opt;
  opt.iterations = 200;
  const auto exact = mc_fidelity(DensityMatrix(target), target, 1e6, 4, opt);
  CHECK(exact.mean > 0.999);

  const auto lo = mc_fidelity(werner(0.71), target, 1e2, 4, opt);
  const auto hi = mc_fidelity(werner(0.71), target, 1e4, 4, opt);
  CHECK(hi.std_dev < lo.std_dev);
  const double ratio = lo.std_dev / hi.std_dev;
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
  CHECK(hi.mean >= 0.0);
  CHECK(hi.mean <= 1.0);

  McOptions par = opt;
  par.workers = 3;
  const auto hi3 = mc_fidelity(werner(0.71), target, 1e4, 4, par);
  CHECK(hi3.fidelities == hi.fidelities);
  CHECK(hi3.mean == hi.mean);

  McOptions weighted = opt;
  weighted.posterior_weighting = true;
  const auto w = mc_fidelity(werner(0.71), target, 1e3, 4, weighted);
  CHECK(std::abs(std::accumulate(w.weights.begin(), w.weights.end(), 0.0) - 1.0) < 1e-12);
  CHECK(w.mean > 0.0);
  CHECK(w.mean <= 1.0);
}
