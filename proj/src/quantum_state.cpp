#include "channelion/quantum_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace channelion {

namespace {

constexpr double kNormTol = 1e-10;
constexpr double kHermitianTol = 1e-10;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = 1e-8;

int log2_exact(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++n;
  }
  return d == dim ? n : -1;
}

}  // namespace

PureState::PureState(CVector amplitudes) : v_(std::move(amplitudes)) {
  if (v_.size() == 0) throw StateError("pure state must have dimension >= 1");
  if (!v_.allFinite()) throw StateError("pure state has non-finite amplitudes");
  const double n = v_.norm();
  if (std::abs(n - 1.0) > kNormTol)
    throw StateError("pure state norm " + std::to_string(n) + " differs from 1");
}

StateDiagnostics diagnose(const CMatrix& m) {
  StateDiagnostics d;
  d.hermiticity_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

DensityMatrix::DensityMatrix(CMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 2 || log2_exact(m_.rows()) < 1)
    throw StateError("density matrix must be square with dimension 2^n, n >= 1");
  if (!m_.allFinite()) throw StateError("density matrix has non-finite entries");
  const auto d = diagnose(m_);
  if (d.hermiticity_error > kHermitianTol) throw StateError("density matrix is not Hermitian");
  if (d.trace_error > kTraceTol)
    throw StateError("density matrix trace differs from 1 by " + std::to_string(d.trace_error));
  if (d.min_eigenvalue < -kPsdTol)
    throw StateError("density matrix has eigenvalue " + std::to_string(d.min_eigenvalue));
  // Exact Hermiticity downstream.
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

DensityMatrix::DensityMatrix(const PureState& psi) : DensityMatrix(psi.projector()) {}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

int DensityMatrix::qubits() const noexcept { return log2_exact(dim()); }

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

CMatrix partial_trace(const CMatrix& m, std::span<const int> keep) {
  const int n = log2_exact(m.rows());
  if (n < 1 || m.rows() != m.cols()) throw ConfigError("partial_trace: matrix is not an n-qubit operator");
  if (keep.empty()) throw ConfigError("partial_trace: keep set is empty");
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
    throw ConfigError("partial_trace: duplicate subsystem label");
  for (int k : kept)
    if (k < 0 || k >= n)
      throw ConfigError("partial_trace: subsystem " + std::to_string(k) + " out of range");
  std::vector<int> traced;
  for (int q = 0; q < n; ++q)
    if (!std::binary_search(kept.begin(), kept.end(), q)) traced.push_back(q);

  const int nk = static_cast<int>(kept.size());
  const int nt = static_cast<int>(traced.size());
  auto bit = [n](int q) { return Eigen::Index{1} << (n - 1 - q); };
  auto compose = [&](Eigen::Index kidx, Eigen::Index tidx) {
    Eigen::Index full = 0;
    for (int i = 0; i < nk; ++i)
      if (kidx & (Eigen::Index{1} << (nk - 1 - i))) full |= bit(kept[i]);
    for (int i = 0; i < nt; ++i)
      if (tidx & (Eigen::Index{1} << (nt - 1 - i))) full |= bit(traced[i]);
    return full;
  };
  const Eigen::Index dk = Eigen::Index{1} << nk;
  const Eigen::Index dt = Eigen::Index{1} << nt;
  CMatrix out = CMatrix::Zero(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r)
    for (Eigen::Index c = 0; c < dk; ++c) {
      Complex acc = 0.0;
      for (Eigen::Index t = 0; t < dt; ++t) acc += m(compose(r, t), compose(c, t));
      out(r, c) = acc;
    }
  return out;
}

}  // namespace channelion
