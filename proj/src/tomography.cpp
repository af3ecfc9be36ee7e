#include "channelion/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "channelion/parallel.hpp"
#include "channelion/rng.hpp"

namespace channelion::tomo {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

CVector single_qubit(char label) {
  CVector v(2);
  switch (label) {
    case 'H':
      v << 1.0, 0.0;
      break;
    case 'V':
      v << 0.0, 1.0;
      break;
    case 'D':
      v << kInvSqrt2, kInvSqrt2;
      break;
    case 'L':
      v << kInvSqrt2, Complex(0.0, kInvSqrt2);
      break;
    case 'R':
      v << kInvSqrt2, Complex(0.0, -kInvSqrt2);
      break;
    default:
      throw ConfigError(std::string("unknown polarisation label ") + label);
  }
  return v;
}

CMatrix pauli(int a) {
  CMatrix s(2, 2);
  switch (a) {
    case 0:
      s << 1.0, 0.0, 0.0, 1.0;
      break;
    case 1:
      s << 0.0, 1.0, 1.0, 0.0;
      break;
    case 2:
      s << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
      break;
    case 3:
      s << 1.0, 0.0, 0.0, -1.0;
      break;
    default:
      throw ConfigError("pauli index out of range");
  }
  return s;
}

double prob(const CMatrix& projector, const CMatrix& rho) {
  return std::max(0.0, (projector * rho).trace().real());
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

CMatrix pauli_product(int a, int b) { return kron(pauli(a), pauli(b)); }

ProjectorSet::ProjectorSet(std::vector<std::string> labels, std::vector<CMatrix> ops)
    : labels_(std::move(labels)), ops_(std::move(ops)) {
  if (labels_.size() != ops_.size() || ops_.size() != kNumProjectors)
    throw ConfigError("projector set must contain 16 labelled projectors");
  design_.resize(kNumProjectors, kNumProjectors);
  for (std::size_t j = 0; j < kNumProjectors; ++j)
    for (int k = 0; k < 16; ++k)
      design_(static_cast<Eigen::Index>(j), k) =
          (ops_[j] * pauli_product(k / 4, k % 4)).trace().real() / 4.0;
}

const ProjectorSet& ProjectorSet::standard() {
  static const ProjectorSet set = [] {
    const std::array<const char*, kNumProjectors> names{"HH", "HV", "VV", "VH", "RH", "RV",
                                                        "DV", "DH", "DR", "DD", "RD", "HD",
                                                        "VD", "VL", "HL", "RL"};
    std::vector<std::string> labels;
    std::vector<CMatrix> ops;
    for (const char* n : names) {
      const CVector psi = kron(single_qubit(n[0]), single_qubit(n[1]));
      labels.emplace_back(n);
      ops.push_back(psi * psi.adjoint());
    }
    return ProjectorSet(std::move(labels), std::move(ops));
  }();
  return set;
}

std::size_t ProjectorSet::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("unknown projector label " + label);
  return static_cast<std::size_t>(it - labels_.begin());
}

Eigen::MatrixXd ProjectorSet::gram() const {
  Eigen::MatrixXd g(size(), size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (ops_[i] * ops_[j]).trace().real();
  return g;
}

double ProjectorSet::gram_condition_number() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram());
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

void TomographyRecord::validate(const ProjectorSet& projectors) const {
  if (counts.size() != projectors.size())
    throw ConfigError("tomography record has " + std::to_string(counts.size()) +
                      " counts, expected " + std::to_string(projectors.size()));
  if (!labels.empty()) {
    if (labels.size() != projectors.size()) throw ConfigError("tomography record label count mismatch");
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] != projectors.label(j))
        throw ConfigError("tomography record label " + labels[j] + " at position " +
                          std::to_string(j) + " does not match projector " + projectors.label(j));
  }
}

std::vector<double> expected_counts(const DensityMatrix& rho, double n_scale,
                                    const ProjectorSet& projectors) {
  if (rho.dim() != 4) throw StateError("expected_counts: expects a two-qubit state");
  std::vector<double> m(projectors.size());
  for (std::size_t j = 0; j < projectors.size(); ++j)
    m[j] = n_scale * prob(projectors.projector(j), rho.matrix());
  return m;
}

TomographyRecord simulate_counts(const DensityMatrix& rho, double n_scale, std::uint64_t seed,
                                 const ProjectorSet& projectors) {
  if (!(n_scale >= 1.0)) throw DomainError("simulate_counts: N must be >= 1");
  const auto means = expected_counts(rho, n_scale, projectors);
  TomographyRecord rec;
  rec.labels = projectors.labels();
  rec.n_scale = n_scale;
  rec.seed = seed;
  rec.truth = rho;
  rec.counts.resize(means.size());
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j] <= 0.0) continue;
    auto eng = rng::substream(seed, j);
    std::poisson_distribution<std::int64_t> dist(means[j]);
    rec.counts[j] = static_cast<std::uint64_t>(dist(eng));
  }
  return rec;
}

CMatrix linear_reconstruct_probabilities(std::span<const double> probabilities,
                                         const ProjectorSet& projectors) {
  if (probabilities.size() != projectors.size())
    throw ConfigError("linear reconstruction needs one probability per projector");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(projectors.design());
  if (!lu.isInvertible()) throw NumericalError("linear reconstruction: design matrix is singular");
  Eigen::VectorXd s(static_cast<Eigen::Index>(probabilities.size()));
  for (std::size_t j = 0; j < probabilities.size(); ++j)
    s(static_cast<Eigen::Index>(j)) = probabilities[j];
  const Eigen::VectorXd r = lu.solve(s);
  CMatrix rho = CMatrix::Zero(4, 4);
  for (int k = 0; k < 16; ++k) rho += r(k) / 4.0 * pauli_product(k / 4, k % 4);
  return rho;
}

LinearReconstruction linear_reconstruct(const TomographyRecord& record,
                                        const ProjectorSet& projectors) {
  record.validate(projectors);
  double flux = 0.0;
  for (const char* l : {"HH", "HV", "VH", "VV"})
    flux += static_cast<double>(record.counts[projectors.index_of(l)]);
  if (!(flux > 0.0))
    throw NumericalError("linear reconstruction: no counts in the HH/HV/VH/VV flux projectors");
  std::vector<double> p(record.counts.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = static_cast<double>(record.counts[j]) / flux;
  CMatrix rho = linear_reconstruct_probabilities(p, projectors);
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw NumericalError("linear reconstruction: non-positive trace");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  LinearReconstruction out;
  out.rho = rho;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.negative_eigenvalues = out.min_eigenvalue < 0.0;
  return out;
}

DensityMatrix project_to_density_matrix(const CMatrix& hermitian) {
  CMatrix h = 0.5 * (hermitian + hermitian.adjoint());
  const double tr = h.trace().real();
  if (!(tr > 0.0)) throw NumericalError("project_to_density_matrix: non-positive trace");
  h /= tr;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  // Eigenvalues ascending; shift the negative mass onto the remaining ones.
  Eigen::VectorXd mu = es.eigenvalues();
  const Eigen::Index d = mu.size();
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(d);
  double acc = 0.0;
  Eigen::Index i = 0;
  for (; i < d; ++i) {
    const double remaining = static_cast<double>(d - i);
    if (mu(i) + acc / remaining >= 0.0) break;
    acc += mu(i);
  }
  const double shift = i < d ? acc / static_cast<double>(d - i) : 0.0;
  for (Eigen::Index k = i; k < d; ++k) lam(k) = mu(k) + shift;
  CMatrix out = es.eigenvectors() * lam.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  out /= out.trace().real();
  return DensityMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Maximum likelihood

namespace {

constexpr int kParams = 16;

// Upper-triangular T: 4 real diagonal entries then 6 complex entries above
// the diagonal (row-major), as (re, im) pairs.
CMatrix unpack(const Eigen::VectorXd& th) {
  CMatrix t = CMatrix::Zero(4, 4);
  int k = 0;
  for (int i = 0; i < 4; ++i) t(i, i) = th(k++);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      t(i, j) = Complex(th(k), th(k + 1));
      k += 2;
    }
  return t;
}

Eigen::VectorXd pack(const CMatrix& t) {
  Eigen::VectorXd th(kParams);
  int k = 0;
  for (int i = 0; i < 4; ++i) th(k++) = t(i, i).real();
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      th(k++) = t(i, j).real();
      th(k++) = t(i, j).imag();
    }
  return th;
}

class Objective {
 public:
  Objective(const TomographyRecord& rec, const ProjectorSet& ps) : ps_(ps) {
    counts_.resize(ps.size());
    for (std::size_t j = 0; j < ps.size(); ++j) {
      counts_[j] = static_cast<double>(rec.counts[j]);
      total_ += counts_[j];
    }
    sum_p_ = CMatrix::Zero(4, 4);
    for (std::size_t j = 0; j < ps.size(); ++j) sum_p_ += ps.projector(j);
  }

  double total() const { return total_; }

  // Negative profile log-likelihood per count plus a scale penalty
  // (|T|_F^2 - 1)^2; the likelihood is invariant under T -> cT.
  double value(const Eigen::VectorXd& th, Eigen::VectorXd* grad) const {
    const CMatrix t = unpack(th);
    const CMatrix m = t.adjoint() * t;
    const double q_total = (sum_p_ * m).trace().real();
    if (!(q_total > 0.0)) return std::numeric_limits<double>::infinity();
    double ll = -total_ * std::log(q_total);
    CMatrix g = -(total_ / q_total) * sum_p_;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] == 0.0) continue;
      const double q = (ps_.projector(j) * m).trace().real();
      if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
      ll += counts_[j] * std::log(q);
      g += (counts_[j] / q) * ps_.projector(j);
    }
    const double norm2 = th.squaredNorm();
    const double f = -ll / total_ + (norm2 - 1.0) * (norm2 - 1.0);
    if (grad) {
      // d(ll) = 2 Re Tr(G T^dagger dT); X = G T^dagger, dll/dT_ab <-> X_ba.
      const CMatrix x = g * t.adjoint();
      Eigen::VectorXd d(kParams);
      int k = 0;
      for (int i = 0; i < 4; ++i) d(k++) = 2.0 * x(i, i).real();
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
          d(k++) = 2.0 * x(j, i).real();
          d(k++) = -2.0 * x(j, i).imag();
        }
      *grad = -d / total_ + 4.0 * (norm2 - 1.0) * th;
    }
    return f;
  }

  double log_likelihood_per_count(const CMatrix& rho) const {
    double ll = 0.0;
    const double q_total = (sum_p_ * rho).trace().real();
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] == 0.0) continue;
      ll += counts_[j] * std::log(prob(ps_.projector(j), rho) / q_total);
    }
    return ll / total_;
  }

 private:
  const ProjectorSet& ps_;
  std::vector<double> counts_;
  double total_ = 0.0;
  CMatrix sum_p_;
};

CMatrix initial_factor(const TomographyRecord& record, const ProjectorSet& projectors) {
  CMatrix start = CMatrix::Identity(4, 4) / 4.0;
  try {
    const auto lin = linear_reconstruct(record, projectors);
    start = 0.9 * project_to_density_matrix(lin.rho).matrix() + 0.1 * start;
  } catch (const Error&) {
    // fall back to the maximally mixed state
  }
  Eigen::LLT<CMatrix> llt(start);
  // start = L L^dagger = T^dagger T with T = L^dagger (upper triangular).
  CMatrix t = llt.matrixL().toDenseMatrix().adjoint();
  return t / std::sqrt((t.adjoint() * t).trace().real());
}

}  // namespace

MleResult mle_reconstruct(const TomographyRecord& record, const ProjectorSet& projectors,
                          const MleOptions& options) {
  record.validate(projectors);
  const Objective obj(record, projectors);
  if (!(obj.total() > 0.0)) throw NumericalError("mle_reconstruct: record has no counts");

  Eigen::VectorXd th = pack(initial_factor(record, projectors));
  Eigen::VectorXd g(kParams);
  double f = obj.value(th, &g);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(kParams, kParams);

  std::size_t it = 0;
  bool converged = g.norm() < options.gradient_tolerance;
  while (!converged && it < options.max_iterations) {
    ++it;
    Eigen::VectorXd dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Eigen::VectorXd th_new, g_new(kParams);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      th_new = th + step * dir;
      f_new = obj.value(th_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (hinv.isIdentity()) break;  // no descent even along -g
      hinv.setIdentity();
      continue;
    }
    const Eigen::VectorXd s = th_new - th;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho_k = 1.0 / sy;
      const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(kParams, kParams);
      hinv = (ident - rho_k * s * y.transpose()) * hinv * (ident - rho_k * y * s.transpose()) +
             rho_k * s * s.transpose();
    }
    th = th_new;
    g = g_new;
    f = f_new;
    converged = g.norm() < options.gradient_tolerance;
  }

  const CMatrix t = unpack(th);
  CMatrix m = t.adjoint() * t;
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint()).eval();
  MleResult out{DensityMatrix(m), it, g.norm(), obj.log_likelihood_per_count(m), converged};
  return out;
}

// ---------------------------------------------------------------------------

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ConfigError("uhlmann_fidelity: dimension mismatch");
  const CMatrix sr = psd_sqrt(rho.matrix());
  const CMatrix inner = sr * sigma.matrix() * sr;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

double uhlmann_fidelity(const DensityMatrix& rho, const PureState& psi) {
  if (rho.dim() != psi.dim()) throw ConfigError("uhlmann_fidelity: dimension mismatch");
  const Complex f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

double poisson_log_pmf(std::uint64_t c, double m) {
  const double cd = static_cast<double>(c);
  if (m <= 0.0) return c == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return cd * std::log(m) - m - std::lgamma(cd + 1.0);
}

Likelihood poisson_likelihood(double p, std::span<const std::uint64_t> counts,
                              std::span<const double> means_k, std::span<const double> means_i) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("poisson_likelihood: p must lie in [0, 1]");
  if (means_k.size() != counts.size() || means_i.size() != counts.size())
    throw ConfigError("poisson_likelihood: counts and means differ in length");
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double total = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (!(means_k[j] > 0.0) || !(means_i[j] > 0.0))
      throw DomainError("poisson_likelihood: means must be > 0");
    const double lk = poisson_log_pmf(counts[j], means_k[j]);
    const double li = poisson_log_pmf(counts[j], means_i[j]);
    const double den = log_sum_exp(lk, li);
    if (!std::isfinite(den)) throw NumericalError("poisson_likelihood: degenerate model (zero denominator)");
    total += log_sum_exp(log_p + lk, log_q + li) - den;
  }
  return {total, std::exp(total)};
}

std::vector<double> posterior_weights(std::span<const DensityMatrix> candidates,
                                      const TomographyRecord& record,
                                      const ProjectorSet& projectors) {
  if (candidates.empty()) throw ConfigError("posterior_weights: need at least one candidate");
  record.validate(projectors);
  std::vector<double> logw(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto means = expected_counts(candidates[i], record.n_scale, projectors);
    double l = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) l += poisson_log_pmf(record.counts[j], means[j]);
    logw[i] = l;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(top)) throw NumericalError("posterior_weights: all likelihoods vanish");
  double z = 0.0;
  for (double& l : logw) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logw) l /= z;
  return logw;
}

FidelityStats mc_fidelity(const DensityMatrix& truth, const PureState& target, double n_scale,
                          std::uint64_t seed, const McOptions& options) {
  if (options.iterations == 0) throw ConfigError("mc_fidelity: iterations must be >= 1");
  if (truth.dim() != 4 || target.dim() != 4) throw StateError("mc_fidelity: expects two-qubit states");
  const auto& ps = ProjectorSet::standard();
  const std::size_t n = options.iterations;

  FidelityStats st;
  st.iterations = n;
  st.fidelities.resize(n);
  std::vector<std::optional<DensityMatrix>> recon(options.posterior_weighting ? n : 0);
  std::vector<char> converged(n, 0);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const auto rec = simulate_counts(truth, n_scale, rng::derive(seed, {i}), ps);
    const auto mle = mle_reconstruct(rec, ps, options.mle);
    st.fidelities[i] = uhlmann_fidelity(mle.rho, target);
    converged[i] = mle.converged ? 1 : 0;
    if (options.posterior_weighting) recon[i] = mle.rho;
  });
  st.non_converged = static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));

  if (options.posterior_weighting) {
    std::vector<DensityMatrix> cands;
    cands.reserve(n);
    for (auto& r : recon) cands.push_back(*r);
    const auto reference =
        simulate_counts(truth, n_scale, rng::derive(seed, {std::numeric_limits<std::uint64_t>::max()}), ps);
    st.weights = posterior_weights(cands, reference, ps);
  } else {
    st.weights.assign(n, 1.0 / static_cast<double>(n));
  }
  for (std::size_t i = 0; i < n; ++i) st.mean += st.weights[i] * st.fidelities[i];
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = st.fidelities[i] - st.mean;
    var += st.weights[i] * d * d;
  }
  st.std_dev = std::sqrt(var);
  return st;
}

}  // namespace channelion::tomo
