#include <doctest.h>

#include <cmath>
#include <random>

#include "bessel_oracle.hpp"
#include "channelion/channeling.hpp"
#include "channelion/constants.hpp"

using namespace channelion;
using namespace channelion::channeling;

namespace {

// Seed 1, static strings, uniform entry, N = 10000.
constexpr double kFrozenUniformTilt0 = 0.936;
constexpr double kFrozenUniformTilt01 = 0.9024;

const ChannelField& default_field() {
  static const ChannelField field{ChannelGeometry{}};
  return field;
}

double oracle_string(double r, const ChannelGeometry& g) {
  const double pre = 2.0 * g.z1 * g.z2 * constants::kCoulombE2 / g.string_period;
  const double alphas[3] = {g.moliere_alphas[0], g.moliere_alphas[1], g.moliere_alphas[2]};
  const double betas[3] = {g.moliere_betas[0], g.moliere_betas[1], g.moliere_betas[2]};
  return oracle::moliere(std::max(r, kMinStringDistance), pre, alphas, betas, g.screening_radius);
}

ProtonState aimed_at_string(double angle) {
  ProtonState s;
  s.psi_x = angle / std::sqrt(2.0);
  s.psi_y = angle / std::sqrt(2.0);
  return s;
}

BeamConfig beam(double tilt, std::size_t n, EntryDistribution entry, ThermalMode mode) {
  BeamConfig b;
  b.tilt = tilt;
  b.n_particles = n;
  b.entry = entry;
  b.thermal = mode;
  return b;
}

}  // namespace

TEST_CASE("screening radius and default string layout") {
  CHECK(thomas_fermi_screening_radius(14) == doctest::Approx(0.019438).epsilon(1e-4));
  const ChannelGeometry g;
  REQUIRE(g.strings.size() == 4);
  CHECK(std::abs(g.strings[3].x - g.strings[0].x) == doctest::Approx(0.5431 * std::sqrt(2.0) / 4));
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("geometry validation") {
  ChannelGeometry g;
  g.moliere_alphas = {0.35, 0.55, 0.11};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = ChannelGeometry{};
  g.strings.clear();
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = ChannelGeometry{};
  g.thickness = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("Moliere string potential against the arbitrary-precision K0 oracle") {
  const ChannelGeometry g;
  const double a = g.screening_radius;
  for (double r : {a, 0.5 * a, 2.0 * a, 0.05, 0.1, 0.2}) {
    const double ref = oracle_string(r, g);
    CHECK(std::abs(moliere_string_potential(r, g) - ref) / ref < 1e-10);
  }
  // Decay: with the standard coefficients U(10a)/U(a) is about 0.0185; the
  // 1e-3 level is reached near 20a.
  const double ratio10 = moliere_string_potential(10 * a, g) / moliere_string_potential(a, g);
  CHECK(ratio10 == doctest::Approx(oracle_string(10 * a, g) / oracle_string(a, g)).epsilon(1e-10));
  CHECK(moliere_string_potential(20 * a, g) < 1e-3 * moliere_string_potential(a, g));
  CHECK(moliere_string_potential(0.0, g) == moliere_string_potential(kMinStringDistance, g));
  double prev = moliere_string_potential(kMinStringDistance, g);
  for (int k = 1; k <= 2000; ++k) {
    const double r = kMinStringDistance * std::pow(1e4, k / 2000.0);
    const double u = moliere_string_potential(r, g);
    REQUIRE(u < prev);
    prev = u;
  }
}

TEST_CASE("string potential derivative matches a central difference") {
  const ChannelGeometry g;
  for (double r : {0.005, 0.02, 0.08}) {
    const double h = 1e-6;
    const double fd = (moliere_string_potential(r + h, g) - moliere_string_potential(r - h, g)) / (2 * h);
    CHECK(moliere_string_potential_derivative(r, g) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(moliere_string_potential_derivative(0.5 * kMinStringDistance, g) == 0.0);
}

TEST_CASE("critical angle") {
  const ChannelGeometry g;
  const double psi = critical_angle(2e6, g);
  CHECK(std::abs(psi - 6.09e-3) / 6.09e-3 < 0.005);
  CHECK(critical_angle(8e6, g) == doctest::Approx(psi / 2).epsilon(1e-14));
  ChannelGeometry g4 = g;
  g4.string_period *= 4;
  CHECK(critical_angle(2e6, g4) == doctest::Approx(psi / 2).epsilon(1e-14));
  CHECK_THROWS_AS(critical_angle(0.0, g), DomainError);
  CHECK_THROWS_AS(critical_angle(-1.0, g), DomainError);
}

TEST_CASE("channel potential: offset, symmetry and direct-sum agreement") {
  const auto& f = default_field();
  const auto& g = f.geometry();
  CHECK(f.potential(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  const Vec2 grad = f.gradient(0, 0);
  CHECK(std::abs(grad.x) < 1e-9);
  CHECK(std::abs(grad.y) < 1e-9);

  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-f.half_width(), f.half_width());
  for (int i = 0; i < 100; ++i) {
    const double x = u(eng), y = u(eng);
    const double v = f.potential(x, y);
    const double tol = 1e-12 * std::max(1.0, std::abs(v));
    CHECK(std::abs(f.potential(-x, y) - v) < tol);
    CHECK(std::abs(f.potential(x, -y) - v) < tol);
    CHECK(std::abs(f.potential(y, x) - v) < tol);
  }

  // A point 0.05 nm from the first string, towards the centre.
  const Vec2 s = g.strings[0];
  const double len = std::hypot(s.x, s.y);
  const double x = s.x - 0.05 * s.x / len, y = s.y - 0.05 * s.y / len;
  double ref = 0.0;
  for (const auto& t : g.strings) ref += oracle_string(std::hypot(x - t.x, y - t.y), g);
  ref -= f.offset();
  CHECK(std::abs(channel_potential(x, y, f) - ref) / std::abs(ref) < 1e-10);

  CHECK_THROWS_AS(f.potential(2.5 * f.half_width(), 0.0), DomainError);
  CHECK_NOTHROW(f.potential(1.9 * f.half_width(), 0.0));
}

TEST_CASE("minimum over the channel interior is zero") {
  const auto& f = default_field();
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(-f.half_width(), f.half_width());
  for (int i = 0; i < 2000; ++i) CHECK(f.potential(u(eng), u(eng)) >= -1e-9);
}

TEST_CASE("table potential tracks the exact field") {
  const auto& f = default_field();
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-f.box_half_width(), f.box_half_width());
  for (int i = 0; i < 500; ++i) {
    const double x = u(eng), y = u(eng);
    const double exact = f.potential_unchecked(x, y);
    CHECK(std::abs(f.table_potential(x, y) - exact) < 1e-8 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("on-axis trajectory is a fixed point") {
  const auto r = integrate_trajectory(ProtonState{}, default_field());
  CHECK(std::abs(r.exit.x) < 1e-15);
  CHECK(std::abs(r.exit.y) < 1e-15);
  CHECK(std::abs(r.exit.psi_x) < 1e-15);
  CHECK(std::abs(r.exit.psi_y) < 1e-15);
  CHECK(r.exit.z == doctest::Approx(92.0));
  CHECK(r.channeled);
}

TEST_CASE("transverse energy conservation and second-order convergence") {
  const auto& f = default_field();
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-f.half_width(), f.half_width());
  double drift_coarse = 0, drift_fine = 0;
  int checked = 0;
  while (checked < 10) {
    ProtonState s;
    s.x = u(eng);
    s.y = u(eng);
    s.psi_x = 1e-3;
    auto max_drift = [&](std::size_t steps) {
      IntegratorOptions opt;
      opt.steps = steps;
      const double e0 = s.energy * s.psi_x * s.psi_x + f.table_potential(s.x, s.y);
      double worst = 0;
      opt.observer = [&](const ProtonState& p) {
        const double e = p.energy * (p.psi_x * p.psi_x + p.psi_y * p.psi_y) + f.table_potential(p.x, p.y);
        worst = std::max(worst, std::abs(e - e0) / e0);
      };
      const auto r = integrate_trajectory(s, f, {}, opt);
      return std::make_pair(r, worst);
    };
    const auto [r, d1] = max_drift(4096);
    if (!r.channeled) continue;
    ++checked;
    CHECK(std::abs(r.e_perp_exit - r.e_perp_entry) / r.e_perp_entry < 1e-4);
    CHECK(d1 < 1e-4);
    drift_coarse += d1;
    drift_fine += max_drift(8192).second;
  }
  CHECK(drift_coarse / drift_fine >= 3.0);
}

TEST_CASE("steep entry towards a string dechannels") {
  const auto& f = default_field();
  const double psi_c = critical_angle(2e6, f.geometry());
  const auto r = integrate_trajectory(aimed_at_string(1.5 * psi_c), f);
  CHECK_FALSE(r.channeled);
  CHECK(r.e_perp_entry > f.barrier(3));
}

TEST_CASE("brute-force critical angle lies in the continuum consistency band") {
  const auto& f = default_field();
  const double psi_c = critical_angle(2e6, f.geometry());
  double lo = 0.0, hi = 3.0 * psi_c;
  REQUIRE(integrate_trajectory(aimed_at_string(lo), f).channeled);
  REQUIRE_FALSE(integrate_trajectory(aimed_at_string(hi), f).channeled);
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    (integrate_trajectory(aimed_at_string(mid), f).channeled ? lo : hi) = mid;
  }
  CHECK(hi >= 0.5 * psi_c);
  CHECK(hi <= 1.5 * psi_c);
}

TEST_CASE("integrator preconditions") {
  const auto& f = default_field();
  ProtonState s;
  s.z = 1.0;
  CHECK_THROWS_AS(integrate_trajectory(s, f), DomainError);
  s = ProtonState{};
  s.psi_x = 0.2;
  CHECK_THROWS_AS(integrate_trajectory(s, f), DomainError);
  s = ProtonState{};
  s.energy = 0;
  CHECK_THROWS_AS(integrate_trajectory(s, f), DomainError);
  s = ProtonState{};
  s.x = 10.0;
  CHECK_THROWS_AS(integrate_trajectory(s, f), DomainError);
  const std::vector<Vec2> wrong(3);
  CHECK_THROWS_AS(integrate_trajectory(ProtonState{}, f, wrong), ConfigError);
}

TEST_CASE("integrator failure carries the last good state") {
  IntegratorError e("boom", ProtonState{0.1, 0.2, 0.0, 0.0, 2e6, 5.0});
  CHECK(e.last_good_state().z == 5.0);
  const NumericalError& base = e;
  CHECK(std::string(base.what()) == "boom");
}

TEST_CASE("histogram bookkeeping") {
  auto h = Histogram::uniform(-1, 1, 4);
  for (double v : {-2.0, -1.0, -0.1, 0.0, 0.99, 1.0, 3.0}) h.add(v);
  CHECK(h.underflow == 1);
  CHECK(h.overflow == 2);
  CHECK(h.counts == std::vector<std::uint64_t>{1, 1, 1, 1});
  CHECK(h.total() == 7);
  CHECK_THROWS_AS(Histogram::uniform(1, 1, 3), ConfigError);
}

TEST_CASE("beam: on-axis point entry is fully channeled") {
  const auto r = simulate_beam(beam(0, 1000, EntryDistribution::kPoint, ThermalMode::kFrozenStrings),
                               default_field());
  CHECK(r.summary.channeled_fraction == 1.0);
}

TEST_CASE("beam: config errors") {
  CHECK_THROWS_AS(simulate_beam(beam(0, 0, EntryDistribution::kUniform, ThermalMode::kStatic), default_field()),
                  ConfigError);
  auto b = beam(0, 10, EntryDistribution::kUniform, ThermalMode::kStatic);
  b.divergence = -1;
  CHECK_THROWS_AS(simulate_beam(b, default_field()), ConfigError);
}

TEST_CASE("beam: deterministic and independent of worker count") {
  auto b = beam(0.1 * critical_angle(2e6, ChannelGeometry{}), 200, EntryDistribution::kUniform,
                ThermalMode::kFrozenStrings);
  b.divergence = 1e-3;
  const auto r1 = simulate_beam(b, default_field(), 1);
  const auto r3 = simulate_beam(b, default_field(), 3);
  CHECK(r1.summary.exit_angle_x.counts == r3.summary.exit_angle_x.counts);
  CHECK(r1.summary.exit_position_x.counts == r3.summary.exit_position_x.counts);
  CHECK(r1.summary.channeled == r3.summary.channeled);
  for (std::size_t i = 0; i < r1.trajectories.size(); ++i) {
    CHECK(r1.trajectories[i].exit.x == r3.trajectories[i].exit.x);
    CHECK(r1.trajectories[i].exit.psi_y == r3.trajectories[i].exit.psi_y);
  }
  std::uint64_t channeled_in_hist = 0;
  for (auto c : r1.summary.exit_position_x.counts) channeled_in_hist += c;
  CHECK(channeled_in_hist + r1.summary.exit_position_x.underflow + r1.summary.exit_position_x.overflow ==
        r1.summary.channeled);
}

TEST_CASE("beam: channeled fraction baselines and monotonicity in tilt") {
  const double psi_c = critical_angle(2e6, ChannelGeometry{});
  const std::vector<double> grid{0, 0.05, 0.1, 0.15, 0.2, 0.5, 1.0, 1.5};
  const std::size_t n = 10000;
  std::vector<double> frac;
  for (double t : grid)
    frac.push_back(simulate_beam(beam(t * psi_c, n, EntryDistribution::kUniform, ThermalMode::kStatic),
                                 default_field())
                       .summary.channeled_fraction);
  CHECK(frac[0] >= 0.9);
  CHECK(frac.back() < 0.2);
  CHECK(frac[0] == doctest::Approx(kFrozenUniformTilt0).epsilon(1e-12));
  CHECK(frac[2] == doctest::Approx(kFrozenUniformTilt01).epsilon(1e-12));
  for (std::size_t i = 1; i < frac.size(); ++i) {
    const double s = std::sqrt((frac[i] * (1 - frac[i]) + frac[i - 1] * (1 - frac[i - 1])) / n);
    CHECK(frac[i] <= frac[i - 1] + 3 * s);
  }
}

TEST_CASE("axis oscillation frequency") {
  const auto& f = default_field();
  const double f2 = axis_oscillation_frequency(2e6, f);
  CHECK(std::abs(f2 - 5.94e13) / 5.94e13 < 0.25);
  // f = sqrt(k v^2 / 2E) / 2 pi, so f / (v / sqrt(E)) is energy independent.
  const double f8 = axis_oscillation_frequency(8e6, f);
  CHECK(f8 / f2 == doctest::Approx(proton_speed(8e6) / proton_speed(2e6) * std::sqrt(2.0 / 8.0)).epsilon(1e-9));
  CHECK_THROWS_AS(axis_oscillation_frequency(0, f), DomainError);

  // Period of a small-amplitude trajectory through a long static crystal.
  ChannelGeometry g = f.geometry();
  g.thickness = 3000.0;
  const ChannelField long_field(g);
  ProtonState s;
  s.x = 0.005;
  IntegratorOptions opt;
  opt.steps = 60000;
  std::vector<double> crossings;
  double prev_x = s.x, prev_z = 0.0;
  opt.observer = [&](const ProtonState& p) {
    if ((prev_x > 0) != (p.x > 0)) crossings.push_back(prev_z + (p.z - prev_z) * prev_x / (prev_x - p.x));
    prev_x = p.x;
    prev_z = p.z;
  };
  integrate_trajectory(s, long_field, {}, opt);
  REQUIRE(crossings.size() >= 4);
  const double half_period_z = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double measured = proton_speed(2e6) / (2.0 * half_period_z);
  CHECK(std::abs(measured - f2) / f2 < 0.01);
}
