#pragma once

#include <complex>
#include <span>

#include <Eigen/Dense>

#include "channelion/error.hpp"

namespace channelion {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Normalised state vector (norm within 1e-10 of 1).
class PureState {
 public:
  explicit PureState(CVector amplitudes);

  const CVector& amplitudes() const noexcept { return v_; }
  Eigen::Index dim() const noexcept { return v_.size(); }
  Complex operator[](Eigen::Index i) const { return v_(i); }
  Complex inner(const PureState& other) const { return v_.dot(other.v_); }
  CMatrix projector() const { return v_ * v_.adjoint(); }

 private:
  CVector v_;
};

/// Hermitian, unit-trace, positive semidefinite matrix over n qubits.
/// Construction validates: max |rho - rho^dagger| < 1e-10,
/// |tr rho - 1| < 1e-10 and lambda_min >= -1e-8.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m);
  explicit DensityMatrix(const PureState& psi);

  static DensityMatrix maximally_mixed(Eigen::Index dim);

  const CMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  int qubits() const noexcept;
  double purity() const;
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  CMatrix m_;
};

struct StateDiagnostics {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
};

StateDiagnostics diagnose(const CMatrix& m);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Square root of a Hermitian PSD matrix; negative eigenvalues are clipped.
CMatrix psd_sqrt(const CMatrix& m);

/// Trace distance-like maximum entry difference.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

/// Partial trace keeping the listed qubit factors (factor 0 is the most
/// significant bit of the basis index). Keep order is normalised to
/// ascending.
CMatrix partial_trace(const CMatrix& m, std::span<const int> keep);

}  // namespace channelion
