#include "channelion/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace channelion::entangle {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

CVector basis4(double c00, double c01, double c10, double c11) {
  CVector v(4);
  v << c00, c01, c10, c11;
  return v;
}

double binary_entropy(double x) {
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(x) + term(1.0 - x);
}

}  // namespace

PureState bell_state(Bell which) {
  const double s = kInvSqrt2;
  switch (which) {
    case Bell::kPhiPlus:
      return PureState(basis4(0, s, s, 0));
    case Bell::kPhiMinus:
      return PureState(basis4(0, s, -s, 0));
    case Bell::kPsiPlus:
      return PureState(basis4(s, 0, 0, s));
    case Bell::kPsiMinus:
      return PureState(basis4(s, 0, 0, -s));
  }
  throw ConfigError("unknown Bell state");
}

DensityMatrix werner_state(const WernerParams& params) {
  if (!(params.p >= 0.0 && params.p <= 1.0))
    throw DomainError("werner_state: p must lie in [0, 1]");
  if (params.sign != 1 && params.sign != -1) throw DomainError("werner_state: sign must be +1 or -1");
  CVector phi = CVector::Zero(4);
  phi(0) = kInvSqrt2;
  phi(3) = static_cast<double>(params.sign) * std::polar(kInvSqrt2, params.phi);
  CMatrix m = (1.0 - params.p) / 4.0 * CMatrix::Identity(4, 4) + params.p * phi * phi.adjoint();
  return DensityMatrix(std::move(m));
}

double concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw StateError("concurrence: expects a two-qubit state");
  // sigma_y (x) sigma_y
  CMatrix yy = CMatrix::Zero(4, 4);
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const CMatrix& r = rho.matrix();
  // The lambda_i are the singular values of sqrt(rho) (yy) sqrt(rho)*, whose
  // Gram matrix is sqrt(rho) rho~ sqrt(rho). Taking them directly avoids the
  // square root of near-zero eigenvalues.
  const CMatrix sq = psd_sqrt(r);
  const CMatrix a = sq * yy * sq.conjugate();
  Eigen::JacobiSVD<CMatrix> svd(a);
  Eigen::VectorXd lam = svd.singularValues();
  std::sort(lam.data(), lam.data() + lam.size(), std::greater<>());
  return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

double entanglement_of_formation(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("entanglement_of_formation: C must lie in [0, 1]");
  return binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

int minimum_fock_cutoff(double abs_alpha) {
  return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 6.0 * abs_alpha + 10.0));
}

PureState cat_state(const CatStateParams& params) {
  const double a = std::abs(params.alpha);
  const int cutoff = params.truncation.value_or(minimum_fock_cutoff(a));
  if (cutoff < minimum_fock_cutoff(a))
    throw DomainError("cat_state: truncation " + std::to_string(cutoff) +
                      " below |alpha|^2 + 6|alpha| + 10");
  const bool even = params.parity == Parity::kEven;
  const double norm2 = 2.0 * (1.0 + (even ? 1.0 : -1.0) * std::exp(-2.0 * a * a));
  if (!even && !(a > 0.0)) throw DomainError("cat_state: odd cat with alpha = 0 has zero norm");
  const double inv_norm = 1.0 / std::sqrt(norm2);

  CVector v = CVector::Zero(cutoff + 1);
  // Coherent amplitudes e^{-|a|^2/2} alpha^n / sqrt(n!) by recurrence.
  Complex c = std::exp(-0.5 * a * a);
  for (int n = 0; n <= cutoff; ++n) {
    if (n > 0) c *= params.alpha / std::sqrt(static_cast<double>(n));
    const bool keep = (n % 2 == 0) == even;
    if (keep) v(n) = 2.0 * c * inv_norm;
  }
  return PureState(std::move(v));
}

double coherent_concurrence(double psi1_amp, double psi2_amp) {
  if (!(psi1_amp >= 0.0) || !(psi2_amp >= 0.0))
    throw DomainError("coherent_concurrence: amplitudes must be >= 0");
  return std::sqrt(-std::expm1(-4.0 * psi1_amp * psi1_amp) * -std::expm1(-4.0 * psi2_amp * psi2_amp));
}

PureState tripartite_state() {
  // index = q1 q2 q3 (q1 most significant)
  CVector v = CVector::Zero(8);
  // |e>(|i> + |g>)|0_c>  ->  |0>(|0> + |1>)|1>
  v(0b001) += 0.5;
  v(0b011) += 0.5;
  // |g>(|i> - |g>)|1_c>  ->  |1>(|0> - |1>)|0>
  v(0b100) += 0.5;
  v(0b110) -= 0.5;
  return PureState(std::move(v));
}

PureState cavity_state() { return PureState(basis4(kInvSqrt2, 0, 0, kInvSqrt2)); }

double entanglement_entropy(const PureState& psi, std::span<const int> keep) {
  const CMatrix r = partial_trace(psi.projector(), keep);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()(i);
    if (l > 1e-15) s -= l * std::log2(l);
  }
  return s;
}

}  // namespace channelion::entangle
