#pragma once

#include <complex>
#include <optional>
#include <span>

#include "channelion/quantum_state.hpp"

namespace channelion::entangle {

/// Labels follow the register convention |m_s m_t>, |0> = spin up:
///   Phi+- = (|01> +- |10>)/sqrt2,   Psi+- = (|00> +- |11>)/sqrt2.
/// Note that Phi and Psi are swapped relative to the usual textbook naming.
enum class Bell { kPhiPlus, kPhiMinus, kPsiPlus, kPsiMinus };

PureState bell_state(Bell which);

struct WernerParams {
  double p = 1.0;
  double phi = 0.0;
  /// +1 or -1: selects |HH> + e^{i phi}|VV> or |HH> - e^{i phi}|VV>.
  int sign = +1;
};

/// (1 - p) I/4 + p |Phi><Phi| with |Phi> = (|HH> +- e^{i phi} |VV>)/sqrt2,
/// H = |0>, V = |1>.
DensityMatrix werner_state(const WernerParams& params);

/// Wootters concurrence of a two-qubit state.
double concurrence(const DensityMatrix& rho);

/// h((1 + sqrt(1 - C^2)) / 2) with the base-2 binary entropy h.
double entanglement_of_formation(double c);

enum class Parity { kEven, kOdd };

struct CatStateParams {
  std::complex<double> alpha = 0.0;
  Parity parity = Parity::kEven;
  /// Highest Fock level kept; defaults to minimum_fock_cutoff(|alpha|).
  std::optional<int> truncation;
};

/// Smallest cutoff satisfying n_max >= |alpha|^2 + 6|alpha| + 10.
int minimum_fock_cutoff(double abs_alpha);

/// (|alpha> +- |-alpha>) / sqrt(2 (1 +- exp(-2|alpha|^2))) on Fock levels
/// 0..n_max. Not renormalised after truncation.
PureState cat_state(const CatStateParams& params);

/// sqrt((1 - exp(-4|psi1|^2)) (1 - exp(-4|psi2|^2))).
double coherent_concurrence(double psi1_amp, double psi2_amp);

/// Three-qubit state (1/2){|e>(|i> + |g>)|0_c> + |g>(|i> - |g>)|1_c>}
/// with each factor's first-listed label mapped to |0>: e, i and the
/// cavity label 1 -> |0>; g and cavity 0 -> |1>.
PureState tripartite_state();

/// (|e,0> + |g,1>)/sqrt2 with e = |0> and the cavity photon number as the
/// second qubit.
PureState cavity_state();

/// Von Neumann entropy (bits) of the reduced state on `keep`.
double entanglement_entropy(const PureState& psi, std::span<const int> keep);

}  // namespace channelion::entangle
