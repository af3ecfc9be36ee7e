#pragma once

// Paraxial proton transport in the continuum potential of an axial channel.
//
// Units: nm for lengths, rad for angles, eV for energies. Transverse motion
// obeys E_perp = E psi^2 + U(x, y), integrated along the depth z.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "channelion/constants.hpp"
#include "channelion/error.hpp"

namespace channelion::channeling {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Potential is clamped below this distance from a string.
inline constexpr double kMinStringDistance = 1e-4;

/// Thomas-Fermi screening radius 0.8853 a0 Z2^(-1/3).
double thomas_fermi_screening_radius(int z2);

/// Four strings at the corners of an axis-aligned square of the given side,
/// centred on the origin.
std::vector<Vec2> square_string_layout(double side);

/// Projected nearest-neighbour string spacing of the Si <100> axis,
/// a_Si * sqrt(2) / 4.
double si100_string_spacing();

struct ChannelGeometry {
  int z1 = 1;
  int z2 = 14;
  double string_period = constants::kSiLatticeConstant;  // d
  double screening_radius = thomas_fermi_screening_radius(14);
  std::vector<Vec2> strings = square_string_layout(si100_string_spacing());
  double thickness = 92.0;
  double thermal_amplitude = constants::kSiThermalAmplitude;
  std::array<double, 3> moliere_alphas{0.35, 0.55, 0.10};
  std::array<double, 3> moliere_betas{0.30, 1.20, 6.00};
  /// Distance from a string at which the dechanneling barrier is read.
  /// Defaults to thermal_amplitude + screening_radius.
  std::optional<double> barrier_distance;

  double effective_barrier_distance() const {
    return barrier_distance.value_or(thermal_amplitude + screening_radius);
  }

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct ProtonState {
  double x = 0.0;
  double y = 0.0;
  double psi_x = 0.0;
  double psi_y = 0.0;
  double energy = 2.0e6;
  double z = 0.0;

  /// Rejects non-paraxial angles (|psi| > 0.1 rad) and E <= 0.
  void validate() const;
};

enum class EntryDistribution { kUniform, kPoint };
enum class ThermalMode { kFrozenStrings, kStatic };

struct BeamConfig {
  double energy = 2.0e6;
  double tilt = 0.0;        // rad, applied along +x
  double divergence = 0.0;  // rad, Gaussian std per axis
  std::size_t n_particles = 1000;
  EntryDistribution entry = EntryDistribution::kUniform;
  std::uint64_t seed = 1;
  ThermalMode thermal = ThermalMode::kFrozenStrings;

  void validate() const;
};

struct TrajectoryResult {
  ProtonState exit;
  double e_perp_entry = 0.0;
  double e_perp_exit = 0.0;
  bool channeled = false;
  bool left_box = false;
  double min_string_distance = 0.0;
};

/// Thrown when the integrator meets a non-finite state.
class IntegratorError : public NumericalError {
 public:
  IntegratorError(const std::string& what, ProtonState last_good)
      : NumericalError(what), last_good_(last_good) {}
  const ProtonState& last_good_state() const noexcept { return last_good_; }

 private:
  ProtonState last_good_;
};

/// Molière string potential (2 Z1 Z2 e^2 / d) sum_i alpha_i K0(beta_i r / a).
/// Distances below kMinStringDistance are clamped.
double moliere_string_potential(double r, const ChannelGeometry& geom);

/// Radial derivative of moliere_string_potential; zero inside the clamp.
double moliere_string_potential_derivative(double r, const ChannelGeometry& geom);

/// psi_c = sqrt(2 Z1 Z2 e^2 / (d E)).
double critical_angle(double energy, const ChannelGeometry& geom);

/// Proton speed in nm/s from relativistic kinematics.
double proton_speed(double kinetic_energy);

/// Cubic-Hermite table of the string profile in t = ln r. Nodes carry exact
/// values and derivatives; the gradient returned is the exact derivative of
/// the interpolant, so leapfrog integration conserves a consistent energy.
class StringProfileTable {
 public:
  StringProfileTable(const ChannelGeometry& geom, double r_max, std::size_t nodes = 8192);

  /// Potential at squared distance r2.
  double value(double r2) const;
  /// Potential and (1/r) dU/dr at squared distance r2.
  void value_and_radial_slope(double r2, double& value, double& slope_over_r) const;

 private:
  double t_min_;
  double t_max_;
  double inv_h_;
  double h_;
  std::vector<double> u_;   // U at nodes
  std::vector<double> du_;  // dU/dt at nodes
};

/// Per-geometry precomputation: potential offset, box extents, barrier
/// heights and the interpolation table used by the integrator.
class ChannelField {
 public:
  explicit ChannelField(ChannelGeometry geom);

  const ChannelGeometry& geometry() const noexcept { return geom_; }
  /// Value subtracted so the minimum over the channel interior is 0.
  double offset() const noexcept { return offset_; }
  /// Half-size of the channel interior (bounding square of the strings).
  double half_width() const noexcept { return half_width_; }
  /// Half-size of the simulation box, 2 x half_width.
  double box_half_width() const noexcept { return 2.0 * half_width_; }
  bool in_box(double x, double y) const noexcept;

  /// Barrier height next to string `index`, read at the geometry's barrier
  /// distance on the line from that string towards the channel centre.
  double barrier(std::size_t index) const { return barriers_.at(index); }

  /// Exact potential (direct Bessel sums) with optional per-string
  /// displacements. Throws DomainError outside the box.
  double potential(double x, double y, std::span<const Vec2> string_offsets = {}) const;

  /// Same as potential() without the box check.
  double potential_unchecked(double x, double y, std::span<const Vec2> string_offsets = {}) const;

  /// Table-backed potential gradient, used by the integrator.
  Vec2 gradient(double x, double y, std::span<const Vec2> string_offsets = {}) const;
  /// Table-backed potential (offset applied).
  double table_potential(double x, double y, std::span<const Vec2> string_offsets = {}) const;

  /// Index of the string (after displacement) nearest to (x, y) and the
  /// squared distance to it.
  std::size_t nearest_string(double x, double y, std::span<const Vec2> string_offsets,
                             double* r2 = nullptr) const;

 private:
  ChannelGeometry geom_;
  double half_width_ = 0.0;
  double offset_ = 0.0;
  std::vector<double> barriers_;
  StringProfileTable table_;
};

/// Sum of string potentials at (x, y), shifted by the field's offset.
double channel_potential(double x, double y, const ChannelField& field);

struct IntegratorOptions {
  std::size_t steps = 4096;
  /// Called after every full step with the current state.
  std::function<void(const ProtonState&)> observer;
};

/// Kick-drift-kick leapfrog in z over the crystal thickness.
TrajectoryResult integrate_trajectory(const ProtonState& initial, const ChannelField& field,
                                      std::span<const Vec2> string_offsets = {},
                                      const IntegratorOptions& options = {});

struct Histogram {
  std::vector<double> edges;  // size bins + 1
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;

  static Histogram uniform(double lo, double hi, std::size_t bins);
  void add(double v);
  std::uint64_t total() const;
};

struct BeamSummary {
  std::size_t n_particles = 0;
  std::size_t channeled = 0;
  double channeled_fraction = 0.0;
  double rms_spot_radius = 0.0;  // over channeled particles, nm
  Histogram exit_angle_x;        // exit psi_x, rad
  Histogram exit_position_x;     // exit x, nm
};

struct BeamResult {
  std::vector<TrajectoryResult> trajectories;
  BeamSummary summary;
};

/// Monte-Carlo beam through the crystal. Particle i draws from
/// rng::substream(beam.seed, i): entry x, entry y (uniform mode), two
/// standard normals for the angles, then two normals per string for the
/// frozen thermal displacements.
BeamResult simulate_beam(const BeamConfig& beam, const ChannelField& field,
                         unsigned workers = 1, const IntegratorOptions& options = {});

/// Harmonic transverse frequency (Hz) near the channel centre from the
/// finite-difference curvature of U.
double axis_oscillation_frequency(double energy, const ChannelField& field);

}  // namespace channelion::channeling
