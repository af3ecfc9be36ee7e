#include "channelion/channeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "channelion/parallel.hpp"
#include "channelion/rng.hpp"

namespace channelion::channeling {

namespace {

// Offset search grid: intervals per axis over the channel interior.
constexpr std::size_t kOffsetGridIntervals = 512;
constexpr double kParaxialLimit = 0.1;

double prefactor(const ChannelGeometry& g) {
  return 2.0 * g.z1 * g.z2 * constants::kCoulombE2 / g.string_period;
}

Vec2 displaced(const ChannelGeometry& g, std::span<const Vec2> offsets, std::size_t i) {
  Vec2 s = g.strings[i];
  if (!offsets.empty()) {
    s.x += offsets[i].x;
    s.y += offsets[i].y;
  }
  return s;
}

void check_offsets(const ChannelGeometry& g, std::span<const Vec2> offsets) {
  if (!offsets.empty() && offsets.size() != g.strings.size())
    throw ConfigError("string offset count " + std::to_string(offsets.size()) +
                      " does not match string count " + std::to_string(g.strings.size()));
}

bool finite(const ProtonState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.psi_x) &&
         std::isfinite(s.psi_y);
}

}  // namespace

double thomas_fermi_screening_radius(int z2) {
  return 0.8853 * constants::kBohrRadius * std::cbrt(1.0 / z2);
}

std::vector<Vec2> square_string_layout(double side) {
  const double h = 0.5 * side;
  return {{-h, -h}, {h, -h}, {-h, h}, {h, h}};
}

double si100_string_spacing() { return constants::kSiLatticeConstant * std::sqrt(2.0) / 4.0; }

void ChannelGeometry::validate() const {
  if (z1 < 1 || z2 < 1) throw ConfigError("atomic numbers must be >= 1");
  if (!(string_period > 0) || !(screening_radius > 0) || !(thickness > 0) ||
      !(thermal_amplitude > 0))
    throw ConfigError("string period, screening radius, thickness and thermal amplitude must be > 0");
  const double sum = moliere_alphas[0] + moliere_alphas[1] + moliere_alphas[2];
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("Moliere alphas must sum to 1");
  for (double b : moliere_betas)
    if (!(b > 0)) throw ConfigError("Moliere betas must be > 0");
  if (strings.empty()) throw ConfigError("geometry needs at least one string");
  if (barrier_distance && !(*barrier_distance > 0))
    throw ConfigError("barrier distance must be > 0");
}

void ProtonState::validate() const {
  if (!(energy > 0)) throw DomainError("proton energy must be > 0");
  if (!(std::hypot(psi_x, psi_y) <= kParaxialLimit))
    throw DomainError("transverse angle exceeds the paraxial limit of 0.1 rad");
}

void BeamConfig::validate() const {
  if (n_particles == 0) throw ConfigError("n_particles must be >= 1");
  if (!(divergence >= 0)) throw ConfigError("divergence must be >= 0");
  if (!(energy > 0)) throw ConfigError("beam energy must be > 0");
  if (!std::isfinite(tilt)) throw ConfigError("tilt must be finite");
}

double moliere_string_potential(double r, const ChannelGeometry& geom) {
  const double rc = std::max(r, kMinStringDistance);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    sum += geom.moliere_alphas[i] *
           std::cyl_bessel_k(0.0, geom.moliere_betas[i] * rc / geom.screening_radius);
  return prefactor(geom) * sum;
}

double moliere_string_potential_derivative(double r, const ChannelGeometry& geom) {
  if (r <= kMinStringDistance) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double k = geom.moliere_betas[i] / geom.screening_radius;
    sum -= geom.moliere_alphas[i] * k * std::cyl_bessel_k(1.0, k * r);
  }
  return prefactor(geom) * sum;
}

double critical_angle(double energy, const ChannelGeometry& geom) {
  if (!(energy > 0)) throw DomainError("critical_angle: energy must be > 0");
  return std::sqrt(prefactor(geom) / energy);
}

double proton_speed(double kinetic_energy) {
  const double gamma = 1.0 + kinetic_energy / constants::kProtonMassEnergy;
  return constants::kSpeedOfLight * std::sqrt(1.0 - 1.0 / (gamma * gamma));
}

// ---------------------------------------------------------------------------

StringProfileTable::StringProfileTable(const ChannelGeometry& geom, double r_max,
                                       std::size_t nodes)
    : t_min_(std::log(kMinStringDistance)), t_max_(std::log(r_max)) {
  if (nodes < 2 || !(r_max > kMinStringDistance))
    throw ConfigError("string profile table needs >= 2 nodes and r_max > r_min");
  h_ = (t_max_ - t_min_) / static_cast<double>(nodes - 1);
  inv_h_ = 1.0 / h_;
  u_.resize(nodes);
  du_.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double r = std::exp(t_min_ + h_ * static_cast<double>(k));
    u_[k] = moliere_string_potential(r, geom);
    // dU/dt = r dU/dr; one-sided at the clamp node would be zero, so use
    // the analytic derivative everywhere above r_min.
    du_[k] = k == 0 ? 0.0 : r * moliere_string_potential_derivative(r, geom);
  }
}

double StringProfileTable::value(double r2) const {
  double v = 0.0;
  double s = 0.0;
  value_and_radial_slope(r2, v, s);
  return v;
}

void StringProfileTable::value_and_radial_slope(double r2, double& value,
                                                double& slope_over_r) const {
  const double t = 0.5 * std::log(r2);
  if (!(t > t_min_)) {
    value = u_.front();
    slope_over_r = 0.0;
    return;
  }
  if (t >= t_max_) {
    value = u_.back();
    slope_over_r = 0.0;
    return;
  }
  const double pos = (t - t_min_) * inv_h_;
  std::size_t k = static_cast<std::size_t>(pos);
  if (k >= u_.size() - 1) k = u_.size() - 2;
  const double tau = pos - static_cast<double>(k);
  const double tau2 = tau * tau;
  const double tau3 = tau2 * tau;
  const double u0 = u_[k], u1 = u_[k + 1];
  const double m0 = du_[k] * h_, m1 = du_[k + 1] * h_;
  value = (2 * tau3 - 3 * tau2 + 1) * u0 + (tau3 - 2 * tau2 + tau) * m0 +
          (-2 * tau3 + 3 * tau2) * u1 + (tau3 - tau2) * m1;
  const double du_dtau = (6 * tau2 - 6 * tau) * u0 + (3 * tau2 - 4 * tau + 1) * m0 +
                         (-6 * tau2 + 6 * tau) * u1 + (3 * tau2 - 2 * tau) * m1;
  // dU/dr / r = (dU/dt) / r^2
  slope_over_r = du_dtau * inv_h_ / r2;
}

// ---------------------------------------------------------------------------

namespace {

double max_extent(const ChannelGeometry& g) {
  double hw = 0.0;
  for (const auto& s : g.strings) hw = std::max({hw, std::abs(s.x), std::abs(s.y)});
  if (!(hw > 0)) throw ConfigError("strings must not all sit on the channel axis");
  return hw;
}

}  // namespace

ChannelField::ChannelField(ChannelGeometry geom)
    : geom_((geom.validate(), std::move(geom))),
      half_width_(max_extent(geom_)),
      // Farthest a string (displaced by up to 10 sigma) can be from a point
      // in the box.
      table_(geom_, 2.0 * std::sqrt(2.0) * 2.0 * half_width_ + 20.0 * geom_.thermal_amplitude +
                        1.0) {
  // Locate the grid minimum with the table, then evaluate it exactly.
  const std::size_t n = kOffsetGridIntervals;
  const double step = 2.0 * half_width_ / static_cast<double>(n);
  double best = std::numeric_limits<double>::infinity();
  Vec2 arg{};
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = -half_width_ + step * static_cast<double>(i);
    for (std::size_t j = 0; j <= n; ++j) {
      const double y = -half_width_ + step * static_cast<double>(j);
      double u = 0.0;
      for (const auto& s : geom_.strings)
        u += table_.value((x - s.x) * (x - s.x) + (y - s.y) * (y - s.y));
      if (u < best) {
        best = u;
        arg = {x, y};
      }
    }
  }
  offset_ = 0.0;
  offset_ = potential_unchecked(arg.x, arg.y);

  const double dist = geom_.effective_barrier_distance();
  barriers_.reserve(geom_.strings.size());
  for (const auto& s : geom_.strings) {
    const double norm = std::hypot(s.x, s.y);
    const Vec2 dir = norm > 0 ? Vec2{-s.x / norm, -s.y / norm} : Vec2{1.0, 0.0};
    barriers_.push_back(potential_unchecked(s.x + dist * dir.x, s.y + dist * dir.y));
  }
}

bool ChannelField::in_box(double x, double y) const noexcept {
  const double b = box_half_width();
  return std::abs(x) <= b && std::abs(y) <= b;
}

double ChannelField::potential(double x, double y, std::span<const Vec2> string_offsets) const {
  if (!in_box(x, y))
    throw DomainError("channel_potential: point (" + std::to_string(x) + ", " +
                      std::to_string(y) + ") outside the simulation box");
  return potential_unchecked(x, y, string_offsets);
}

double ChannelField::potential_unchecked(double x, double y,
                                         std::span<const Vec2> string_offsets) const {
  check_offsets(geom_, string_offsets);
  double u = 0.0;
  for (std::size_t i = 0; i < geom_.strings.size(); ++i) {
    const Vec2 s = displaced(geom_, string_offsets, i);
    u += moliere_string_potential(std::hypot(x - s.x, y - s.y), geom_);
  }
  return u - offset_;
}

Vec2 ChannelField::gradient(double x, double y, std::span<const Vec2> string_offsets) const {
  Vec2 g{};
  for (std::size_t i = 0; i < geom_.strings.size(); ++i) {
    const Vec2 s = displaced(geom_, string_offsets, i);
    const double dx = x - s.x, dy = y - s.y;
    double v = 0.0, slope = 0.0;
    table_.value_and_radial_slope(dx * dx + dy * dy, v, slope);
    g.x += slope * dx;
    g.y += slope * dy;
  }
  return g;
}

double ChannelField::table_potential(double x, double y,
                                     std::span<const Vec2> string_offsets) const {
  double u = 0.0;
  for (std::size_t i = 0; i < geom_.strings.size(); ++i) {
    const Vec2 s = displaced(geom_, string_offsets, i);
    u += table_.value((x - s.x) * (x - s.x) + (y - s.y) * (y - s.y));
  }
  return u - offset_;
}

std::size_t ChannelField::nearest_string(double x, double y, std::span<const Vec2> string_offsets,
                                         double* r2) const {
  std::size_t best = 0;
  double best_r2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < geom_.strings.size(); ++i) {
    const Vec2 s = displaced(geom_, string_offsets, i);
    const double d2 = (x - s.x) * (x - s.x) + (y - s.y) * (y - s.y);
    if (d2 < best_r2) {
      best_r2 = d2;
      best = i;
    }
  }
  if (r2) *r2 = best_r2;
  return best;
}

double channel_potential(double x, double y, const ChannelField& field) {
  return field.potential(x, y);
}

// ---------------------------------------------------------------------------

TrajectoryResult integrate_trajectory(const ProtonState& initial, const ChannelField& field,
                                      std::span<const Vec2> string_offsets,
                                      const IntegratorOptions& options) {
  initial.validate();
  if (initial.z != 0.0) throw DomainError("integrate_trajectory: initial depth must be 0");
  if (options.steps == 0) throw ConfigError("integrate_trajectory: steps must be >= 1");
  check_offsets(field.geometry(), string_offsets);
  if (!field.in_box(initial.x, initial.y))
    throw DomainError("integrate_trajectory: entry point outside the simulation box");

  const double energy = initial.energy;
  const double dz = field.geometry().thickness / static_cast<double>(options.steps);
  const double kick = 0.5 * dz / (2.0 * energy);

  TrajectoryResult out;
  out.e_perp_entry =
      energy * (initial.psi_x * initial.psi_x + initial.psi_y * initial.psi_y) +
      field.potential_unchecked(initial.x, initial.y, string_offsets);

  double min_r2 = 0.0;
  const std::size_t entry_string = field.nearest_string(initial.x, initial.y, string_offsets, &min_r2);

  ProtonState s = initial;
  ProtonState last_good = s;
  Vec2 g = field.gradient(s.x, s.y, string_offsets);
  bool left_box = false;
  for (std::size_t step = 0; step < options.steps; ++step) {
    s.psi_x -= kick * g.x;
    s.psi_y -= kick * g.y;
    s.x += dz * s.psi_x;
    s.y += dz * s.psi_y;
    s.z = dz * static_cast<double>(step + 1);
    if (!finite(s)) throw IntegratorError("integrate_trajectory: non-finite state", last_good);
    if (!field.in_box(s.x, s.y)) {
      left_box = true;
      break;
    }
    double r2 = 0.0;
    field.nearest_string(s.x, s.y, string_offsets, &r2);
    min_r2 = std::min(min_r2, r2);
    g = field.gradient(s.x, s.y, string_offsets);
    s.psi_x -= kick * g.x;
    s.psi_y -= kick * g.y;
    if (!finite(s)) throw IntegratorError("integrate_trajectory: non-finite state", last_good);
    last_good = s;
    if (options.observer) options.observer(s);
  }

  out.exit = s;
  out.left_box = left_box;
  out.min_string_distance = std::sqrt(min_r2);
  out.e_perp_exit = energy * (s.psi_x * s.psi_x + s.psi_y * s.psi_y) +
                    field.potential_unchecked(s.x, s.y, string_offsets);
  out.channeled = !left_box && out.e_perp_entry < field.barrier(entry_string) &&
                  out.min_string_distance > kMinStringDistance;
  return out;
}

// ---------------------------------------------------------------------------

Histogram Histogram::uniform(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("histogram needs bins >= 1 and hi > lo");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  return h;
}

void Histogram::add(double v) {
  if (v < edges.front()) {
    ++underflow;
    return;
  }
  if (v >= edges.back()) {
    ++overflow;
    return;
  }
  auto it = std::upper_bound(edges.begin(), edges.end(), v);
  ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) + underflow + overflow;
}

BeamResult simulate_beam(const BeamConfig& beam, const ChannelField& field, unsigned workers,
                         const IntegratorOptions& options) {
  beam.validate();
  const auto& geom = field.geometry();
  const double hw = field.half_width();
  const std::size_t n_strings = geom.strings.size();

  BeamResult result;
  result.trajectories.resize(beam.n_particles);
  parallel_for(beam.n_particles, workers, [&](std::size_t i) {
    auto eng = rng::substream(beam.seed, i);
    std::uniform_real_distribution<double> uni(-hw, hw);
    std::normal_distribution<double> normal(0.0, 1.0);
    ProtonState p;
    p.energy = beam.energy;
    if (beam.entry == EntryDistribution::kUniform) {
      p.x = uni(eng);
      p.y = uni(eng);
    }
    const double gx = normal(eng);
    const double gy = normal(eng);
    p.psi_x = beam.tilt + beam.divergence * gx;
    p.psi_y = beam.divergence * gy;
    std::vector<Vec2> offsets;
    if (beam.thermal == ThermalMode::kFrozenStrings) {
      offsets.resize(n_strings);
      for (auto& o : offsets) {
        o.x = geom.thermal_amplitude * normal(eng);
        o.y = geom.thermal_amplitude * normal(eng);
      }
    }
    if (std::hypot(p.psi_x, p.psi_y) > kParaxialLimit) {
      // Far outside any channeling regime; recorded as dechanneled.
      TrajectoryResult r;
      r.exit = p;
      r.e_perp_entry = beam.energy * (p.psi_x * p.psi_x + p.psi_y * p.psi_y) +
                       field.potential_unchecked(p.x, p.y, offsets);
      r.e_perp_exit = r.e_perp_entry;
      result.trajectories[i] = r;
      return;
    }
    IntegratorOptions local;
    local.steps = options.steps;
    result.trajectories[i] = integrate_trajectory(p, field, offsets, local);
  });

  auto& sum = result.summary;
  const double psi_c = critical_angle(beam.energy, geom);
  sum.exit_angle_x = Histogram::uniform(-2.0 * psi_c, 2.0 * psi_c, 80);
  sum.exit_position_x = Histogram::uniform(-field.box_half_width(), field.box_half_width(), 80);
  sum.n_particles = beam.n_particles;
  double r2_sum = 0.0;
  for (const auto& t : result.trajectories) {
    if (!t.channeled) continue;
    ++sum.channeled;
    sum.exit_angle_x.add(t.exit.psi_x);
    sum.exit_position_x.add(t.exit.x);
    r2_sum += t.exit.x * t.exit.x + t.exit.y * t.exit.y;
  }
  sum.channeled_fraction =
      static_cast<double>(sum.channeled) / static_cast<double>(beam.n_particles);
  sum.rms_spot_radius =
      sum.channeled > 0 ? std::sqrt(r2_sum / static_cast<double>(sum.channeled)) : 0.0;
  return result;
}

double axis_oscillation_frequency(double energy, const ChannelField& field) {
  if (!(energy > 0)) throw DomainError("axis_oscillation_frequency: energy must be > 0");
  constexpr double h = 1e-3;
  const double k = (field.potential(h, 0.0) - 2.0 * field.potential(0.0, 0.0) +
                    field.potential(-h, 0.0)) /
                   (h * h);
  if (!(k > 0))
    throw DomainError("axis_oscillation_frequency: channel centre is not a potential minimum");
  const double v = proton_speed(energy);
  return std::sqrt(k * v * v / (2.0 * energy)) / (2.0 * constants::kPi);
}

}  // namespace channelion::channeling
