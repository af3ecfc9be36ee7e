#pragma once

// Electron - 1H - 29Si spin register. Basis |e> (x) |H> (x) |Si>, spin up
// (+1/2) first in each factor; all Hamiltonians are in rad/s.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "channelion/constants.hpp"
#include "channelion/quantum_state.hpp"

namespace channelion::spin {

enum class Axis { kX, kY, kZ };

/// Factor indices within the 3-spin register.
enum class Target : int { kElectron = 0, kProton = 1, kSilicon = 2 };

Target parse_target(std::string_view name);
std::string_view target_name(Target t);
Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis a);

/// Hyperfine inputs in MHz (converted to rad/s by SpinSystem::from_field).
struct HyperfineMHz {
  double a_h = 0.0;
  double b_h = 0.0;
  double a_si = constants::kHyperfineSi29MHz;
  /// Defaults to 0.3 |A_Si| when unset.
  std::optional<double> b_si;
};

struct SpinSystem {
  double b0 = 2.0;  // tesla
  double omega_e = 0.0;
  double omega_h = 0.0;
  double omega_si = 0.0;
  double a_h = 0.0;
  double b_h = 0.0;
  double a_si = 0.0;
  double b_si = 0.0;

  /// Zeeman frequencies from B0 (omega_e = g mu_B B / hbar, omega_n = gamma_n B)
  /// and hyperfine couplings converted from MHz (x 2 pi 1e6).
  static SpinSystem from_field(double b0, const HyperfineMHz& hyperfine = {});

  void validate() const;
};

/// S_axis = sigma_axis / 2 acting on `factor` of an n-factor qubit register.
CMatrix spin_operator(Axis axis, int factor, int n_factors);

/// omega_e S_z + omega_H I_z^H + omega_Si I_z^Si + S_z (x) sum_n (A_n I_z^n + B_n I_x^n).
CMatrix build_hamiltonian(const SpinSystem& sys);

/// exp(-i H t) from an eigendecomposition computed once.
class Propagator {
 public:
  explicit Propagator(const CMatrix& hamiltonian);
  CMatrix unitary(double t) const;
  Eigen::Index dim() const noexcept { return vectors_.rows(); }

 private:
  Eigen::VectorXd values_;
  CMatrix vectors_;
};

/// rho(t) = U rho U^dagger with U = exp(-i H t).
DensityMatrix evolve(const DensityMatrix& rho, const CMatrix& hamiltonian, double t);

struct FreeEvolution {
  double duration = 0.0;  // s
};

struct Rotation {
  Target target = Target::kElectron;
  Axis axis = Axis::kX;
  double angle = 0.0;  // rad
};

using PulseStep = std::variant<FreeEvolution, Rotation>;

struct PulseSequence {
  std::vector<PulseStep> steps;
  std::size_t repetitions = 1;
  /// Negate rotation angles on every other repetition.
  bool phase_inversion = false;

  void validate() const;

  /// (pi/2)_x - [tau - (pi)_y - tau]^n on `target`. With `close` a final
  /// (pi/2)_-x maps the refocused state back onto the z axis.
  static PulseSequence meiboom_gill(double tau, std::size_t n, Target target = Target::kElectron,
                                    bool close = false);
};

/// exp(-i angle S_axis) on the target factor only.
DensityMatrix apply_pulse(const DensityMatrix& rho, const Rotation& step);

struct ObservableSample {
  double t = 0.0;
  std::vector<double> sz;  // <S_z> per factor
};

struct SequenceResult {
  DensityMatrix state;
  std::vector<ObservableSample> trace;
};

/// Expectation values <S_z> of every factor.
std::vector<double> sz_expectations(const DensityMatrix& rho);

/// Applies the steps in order, `repetitions` times; records <S_z> after
/// the initial state and after every step.
SequenceResult run_sequence(const DensityMatrix& rho, const PulseSequence& seq,
                            const CMatrix& hamiltonian);

enum class ExchangeKind { kSymmetric, kAntisymmetric };

/// symmetric:     J (SxSx + SySy) + K (SxSy - SySx)
/// antisymmetric: J (SxSx - SySy) + K (SxSy + SySx)
CMatrix exchange_hamiltonian(ExchangeKind kind, double j, double k);

/// Partial trace over every factor not in `keep`.
DensityMatrix reduced_density_matrix(const DensityMatrix& rho, std::span<const int> keep);

/// Rotating-frame single spin: (detuning / 2) sigma_z + (rabi / 2) sigma_x.
CMatrix two_level_drive(double detuning, double rabi);

}  // namespace channelion::spin
