#pragma once

// Two-qubit polarisation state tomography from 16 coincidence projectors,
// with Poisson count simulation, linear and maximum-likelihood
// reconstruction and Monte-Carlo fidelity statistics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "channelion/quantum_state.hpp"

namespace channelion::tomo {

inline constexpr std::size_t kNumProjectors = 16;

/// Rank-1 projectors |ab><ab| over single-qubit states H = |0>, V = |1>,
/// D = (H+V)/sqrt2, L = (H+iV)/sqrt2, R = (H-iV)/sqrt2.
class ProjectorSet {
 public:
  /// HH HV VV VH RH RV DV DH DR DD RD HD VD VL HL RL.
  static const ProjectorSet& standard();

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t j) const { return labels_.at(j); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const CMatrix& projector(std::size_t j) const { return ops_.at(j); }
  std::size_t index_of(const std::string& label) const;

  /// 16 x 16 real measurement-design matrix A with
  /// Tr(P_j rho) = sum_k A_jk r_k and rho = sum_k r_k sigma_k / 4 over the
  /// Pauli products sigma_k = sigma_a (x) sigma_b (k = 4a + b).
  const Eigen::MatrixXd& design() const noexcept { return design_; }
  /// Gram matrix G_jk = Tr(P_j P_k).
  Eigen::MatrixXd gram() const;
  /// 2-norm condition number of the Gram matrix.
  double gram_condition_number() const;

  ProjectorSet(std::vector<std::string> labels, std::vector<CMatrix> ops);

 private:
  std::vector<std::string> labels_;
  std::vector<CMatrix> ops_;
  Eigen::MatrixXd design_;
};

/// Pauli product sigma_a (x) sigma_b, a, b in {0: I, 1: X, 2: Y, 3: Z}.
CMatrix pauli_product(int a, int b);

struct TomographyRecord {
  std::vector<std::string> labels;
  std::vector<std::uint64_t> counts;
  double n_scale = 0.0;
  std::uint64_t seed = 0;
  std::optional<DensityMatrix> truth;

  /// Throws ConfigError unless counts and labels match the projector set.
  void validate(const ProjectorSet& projectors) const;
};

/// N Tr(P_j rho) for every projector.
std::vector<double> expected_counts(const DensityMatrix& rho, double n_scale,
                                    const ProjectorSet& projectors = ProjectorSet::standard());

/// c_j ~ Poisson(N Tr(P_j rho)); projector j draws from rng::substream(seed, j).
TomographyRecord simulate_counts(const DensityMatrix& rho, double n_scale, std::uint64_t seed,
                                 const ProjectorSet& projectors = ProjectorSet::standard());

struct LinearReconstruction {
  CMatrix rho;  // Hermitian, unit trace, possibly not PSD
  double min_eigenvalue = 0.0;
  bool negative_eigenvalues = false;
};

/// Inverts the design matrix against c_j / N_hat, where
/// N_hat = c_HH + c_HV + c_VH + c_VV, then rescales to unit trace.
LinearReconstruction linear_reconstruct(const TomographyRecord& record,
                                        const ProjectorSet& projectors = ProjectorSet::standard());

/// Same inversion for given projector probabilities (no flux estimate).
CMatrix linear_reconstruct_probabilities(std::span<const double> probabilities,
                                         const ProjectorSet& projectors = ProjectorSet::standard());

/// Closest unit-trace PSD matrix in eigenvalue (Frobenius) sense.
DensityMatrix project_to_density_matrix(const CMatrix& hermitian);

struct MleOptions {
  std::size_t max_iterations = 10000;
  double gradient_tolerance = 1e-8;
};

struct MleResult {
  DensityMatrix rho;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;  // per count, up to a constant
  bool converged = false;
};

/// Poisson maximum likelihood over rho = T^dagger T / Tr(T^dagger T) with T
/// upper triangular (real diagonal), the total flux profiled out. BFGS
/// with step-halving line search.
MleResult mle_reconstruct(const TomographyRecord& record,
                          const ProjectorSet& projectors = ProjectorSet::standard(),
                          const MleOptions& options = {});

/// (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
/// <psi|rho|psi>.
double uhlmann_fidelity(const DensityMatrix& rho, const PureState& psi);

/// log of m^c e^{-m} / c!.
double poisson_log_pmf(std::uint64_t c, double m);

struct Likelihood {
  double log_value = 0.0;
  double value = 0.0;
};

/// prod_j [p D(c_j, mk_j) + (1-p) D(c_j, mi_j)] / [D(c_j, mk_j) + D(c_j, mi_j)],
/// evaluated in log space.
Likelihood poisson_likelihood(double p, std::span<const std::uint64_t> counts,
                              std::span<const double> means_k, std::span<const double> means_i);

/// Normalised posterior weights of candidate states given one record:
/// w_i proportional to prod_j D(c_j, N Tr(P_j rho_i)), uniform prior.
std::vector<double> posterior_weights(std::span<const DensityMatrix> candidates,
                                      const TomographyRecord& record,
                                      const ProjectorSet& projectors = ProjectorSet::standard());

struct McOptions {
  std::size_t iterations = 10000;
  bool posterior_weighting = false;
  unsigned workers = 1;
  MleOptions mle;
};

struct FidelityStats {
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t iterations = 0;
  std::size_t non_converged = 0;
  std::vector<double> fidelities;
  std::vector<double> weights;
};

/// Repeats simulate_counts -> mle_reconstruct -> fidelity against `target`.
/// Iteration i uses seed rng::derive(seed, {i}). Weighted mean and spread
/// sum_i w_i F_i and sqrt(sum_i w_i (F_i - F)^2); weights are 1/iters, or
/// posterior weights of each reconstruction given a reference record drawn
/// from `truth` when posterior_weighting is set.
FidelityStats mc_fidelity(const DensityMatrix& truth, const PureState& target, double n_scale,
                          std::uint64_t seed, const McOptions& options = {});

}  // namespace channelion::tomo
