#include "channelion/spin_dynamics.hpp"

#include <cmath>
#include <string>

#include "channelion/constants.hpp"

namespace channelion::spin {

namespace {

constexpr double kMHzToRadPerSecond = 2.0 * constants::kPi * 1e6;

CMatrix pauli_half(Axis axis) {
  CMatrix s(2, 2);
  switch (axis) {
    case Axis::kX:
      s << 0.0, 0.5, 0.5, 0.0;
      break;
    case Axis::kY:
      s << 0.0, Complex(0.0, -0.5), Complex(0.0, 0.5), 0.0;
      break;
    case Axis::kZ:
      s << 0.5, 0.0, 0.0, -0.5;
      break;
  }
  return s;
}

CMatrix embed(const CMatrix& single, int factor, int n_factors) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int q = 0; q < n_factors; ++q)
    out = kron(out, q == factor ? single : CMatrix::Identity(2, 2));
  return out;
}

int factor_count(const DensityMatrix& rho) {
  const int n = rho.qubits();
  if (n < 1) throw ConfigError("state is not a qubit register");
  return n;
}

}  // namespace

Target parse_target(std::string_view name) {
  if (name == "e") return Target::kElectron;
  if (name == "H") return Target::kProton;
  if (name == "Si") return Target::kSilicon;
  throw ConfigError("unknown spin target '" + std::string(name) + "' (expected e, H or Si)");
}

std::string_view target_name(Target t) {
  switch (t) {
    case Target::kElectron:
      return "e";
    case Target::kProton:
      return "H";
    case Target::kSilicon:
      return "Si";
  }
  return "?";
}

Axis parse_axis(std::string_view name) {
  if (name == "x") return Axis::kX;
  if (name == "y") return Axis::kY;
  if (name == "z") return Axis::kZ;
  throw ConfigError("unknown rotation axis '" + std::string(name) + "'");
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::kX:
      return "x";
    case Axis::kY:
      return "y";
    case Axis::kZ:
      return "z";
  }
  return "?";
}

SpinSystem SpinSystem::from_field(double b0, const HyperfineMHz& hf) {
  SpinSystem s;
  s.b0 = b0;
  s.omega_e = constants::kElectronG * constants::kBohrMagneton * b0 / constants::kHbar;
  s.omega_h = constants::kGammaH * b0;
  s.omega_si = constants::kGammaSi29 * b0;
  s.a_h = hf.a_h * kMHzToRadPerSecond;
  s.b_h = hf.b_h * kMHzToRadPerSecond;
  s.a_si = hf.a_si * kMHzToRadPerSecond;
  s.b_si = hf.b_si ? *hf.b_si * kMHzToRadPerSecond : 0.3 * std::abs(s.a_si);
  s.validate();
  return s;
}

void SpinSystem::validate() const {
  for (double v : {b0, omega_e, omega_h, omega_si, a_h, b_h, a_si, b_si})
    if (!std::isfinite(v)) throw ConfigError("spin system parameters must be finite");
}

CMatrix spin_operator(Axis axis, int factor, int n_factors) {
  if (factor < 0 || factor >= n_factors)
    throw ConfigError("spin factor " + std::to_string(factor) + " out of range");
  return embed(pauli_half(axis), factor, n_factors);
}

CMatrix build_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const CMatrix sz = spin_operator(Axis::kZ, 0, 3);
  const CMatrix iz_h = spin_operator(Axis::kZ, 1, 3);
  const CMatrix ix_h = spin_operator(Axis::kX, 1, 3);
  const CMatrix iz_si = spin_operator(Axis::kZ, 2, 3);
  const CMatrix ix_si = spin_operator(Axis::kX, 2, 3);
  CMatrix h = sys.omega_e * sz + sys.omega_h * iz_h + sys.omega_si * iz_si;
  // The nuclear operators act on other factors, so S_z commutes with them
  // and the plain product is the tensor product.
  h += sz * (sys.a_h * iz_h + sys.b_h * ix_h + sys.a_si * iz_si + sys.b_si * ix_si);
  return h;
}

Propagator::Propagator(const CMatrix& hamiltonian) {
  if (hamiltonian.rows() != hamiltonian.cols())
    throw ConfigError("Hamiltonian must be square");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (hamiltonian + hamiltonian.adjoint()));
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

CMatrix Propagator::unitary(double t) const {
  CVector phases(values_.size());
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    phases(i) = std::exp(Complex(0.0, -values_(i) * t));
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

namespace {

DensityMatrix conjugate(const DensityMatrix& rho, const CMatrix& u) {
  CMatrix out = u * rho.matrix() * u.adjoint();
  return DensityMatrix(std::move(out));
}

DensityMatrix evolve_with(const DensityMatrix& rho, const Propagator& prop, double t) {
  if (!(t >= 0)) throw DomainError("evolve: time must be >= 0");
  if (prop.dim() != rho.dim()) throw ConfigError("evolve: dimension mismatch");
  if (t == 0.0) return rho;
  return conjugate(rho, prop.unitary(t));
}

}  // namespace

DensityMatrix evolve(const DensityMatrix& rho, const CMatrix& hamiltonian, double t) {
  if (hamiltonian.rows() != rho.dim() || hamiltonian.cols() != rho.dim())
    throw ConfigError("evolve: dimension mismatch between state and Hamiltonian");
  return evolve_with(rho, Propagator(hamiltonian), t);
}

DensityMatrix apply_pulse(const DensityMatrix& rho, const Rotation& step) {
  const int n = factor_count(rho);
  const int factor = static_cast<int>(step.target);
  if (factor >= n)
    throw ConfigError("apply_pulse: target '" + std::string(target_name(step.target)) +
                      "' not present in a " + std::to_string(n) + "-spin state");
  if (!std::isfinite(step.angle)) throw ConfigError("apply_pulse: angle must be finite");
  // exp(-i theta sigma/2) = cos(theta/2) I - i sin(theta/2) sigma
  const CMatrix sigma = 2.0 * pauli_half(step.axis);
  const CMatrix r = std::cos(0.5 * step.angle) * CMatrix::Identity(2, 2) -
                    Complex(0.0, std::sin(0.5 * step.angle)) * sigma;
  return conjugate(rho, embed(r, factor, n));
}

void PulseSequence::validate() const {
  for (const auto& s : steps) {
    if (const auto* f = std::get_if<FreeEvolution>(&s)) {
      if (!(f->duration >= 0) || !std::isfinite(f->duration))
        throw ConfigError("free evolution duration must be finite and >= 0");
    } else if (!std::isfinite(std::get<Rotation>(s).angle)) {
      throw ConfigError("rotation angle must be finite");
    }
  }
}

PulseSequence PulseSequence::meiboom_gill(double tau, std::size_t n, Target target, bool close) {
  PulseSequence seq;
  seq.steps.push_back(Rotation{target, Axis::kX, constants::kPi / 2});
  for (std::size_t i = 0; i < n; ++i) {
    seq.steps.push_back(FreeEvolution{tau});
    seq.steps.push_back(Rotation{target, Axis::kY, constants::kPi});
    seq.steps.push_back(FreeEvolution{tau});
  }
  if (close) seq.steps.push_back(Rotation{target, Axis::kX, -constants::kPi / 2});
  return seq;
}

std::vector<double> sz_expectations(const DensityMatrix& rho) {
  const int n = factor_count(rho);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q)
    out[static_cast<std::size_t>(q)] =
        (rho.matrix() * spin_operator(Axis::kZ, q, n)).trace().real();
  return out;
}

SequenceResult run_sequence(const DensityMatrix& rho, const PulseSequence& seq,
                            const CMatrix& hamiltonian) {
  seq.validate();
  if (hamiltonian.rows() != rho.dim()) throw ConfigError("run_sequence: dimension mismatch");
  const Propagator prop(hamiltonian);
  SequenceResult result{rho, {}};
  double t = 0.0;
  result.trace.push_back({t, sz_expectations(rho)});
  for (std::size_t rep = 0; rep < seq.repetitions; ++rep) {
    const double sign = (seq.phase_inversion && rep % 2 == 1) ? -1.0 : 1.0;
    for (const auto& step : seq.steps) {
      if (const auto* f = std::get_if<FreeEvolution>(&step)) {
        result.state = evolve_with(result.state, prop, f->duration);
        t += f->duration;
      } else {
        Rotation r = std::get<Rotation>(step);
        r.angle *= sign;
        result.state = apply_pulse(result.state, r);
      }
      result.trace.push_back({t, sz_expectations(result.state)});
    }
  }
  return result;
}

CMatrix exchange_hamiltonian(ExchangeKind kind, double j, double k) {
  if (!std::isfinite(j) || !std::isfinite(k)) throw ConfigError("exchange couplings must be finite");
  const CMatrix sx1 = spin_operator(Axis::kX, 0, 2), sy1 = spin_operator(Axis::kY, 0, 2);
  const CMatrix sx2 = spin_operator(Axis::kX, 1, 2), sy2 = spin_operator(Axis::kY, 1, 2);
  if (kind == ExchangeKind::kSymmetric)
    return j * (sx1 * sx2 + sy1 * sy2) + k * (sx1 * sy2 - sy1 * sx2);
  return j * (sx1 * sx2 - sy1 * sy2) + k * (sx1 * sy2 + sy1 * sx2);
}

DensityMatrix reduced_density_matrix(const DensityMatrix& rho, std::span<const int> keep) {
  return DensityMatrix(partial_trace(rho.matrix(), keep));
}

CMatrix two_level_drive(double detuning, double rabi) {
  CMatrix h(2, 2);
  h << 0.5 * detuning, 0.5 * rabi, 0.5 * rabi, -0.5 * detuning;
  return h;
}

}  // namespace channelion::spin
