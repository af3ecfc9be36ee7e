#pragma once

// Entanglement distribution mapped onto classical bond percolation, plus
// entanglement swapping and repeater time scaling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "channelion/error.hpp"

namespace channelion::percolation {

enum class Lattice { kSquare, kTriangular, kHoneycomb, kExplicit };

Lattice parse_lattice(std::string_view name);
std::string_view lattice_name(Lattice l);

/// Probability of converting p|00> + sqrt(1-p^2)|11> into a singlet by
/// local operations: min(1, 2(1 - max(p^2, 1-p^2))).
double singlet_conversion_probability(double p);

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double amplitude = 0.0;  // Schmidt amplitude p of the shared pair
};

class EntanglementNetwork {
 public:
  /// side x side lattice, node (x, y) = y * side + x. Triangular adds the
  /// (x, y)-(x+1, y+1) diagonals to the square lattice; honeycomb is the
  /// brick-wall embedding with vertical bonds where x + y is even.
  static EntanglementNetwork lattice(Lattice kind, std::size_t side, double amplitude);

  /// Explicit graph; spanning means `terminals` end up in one cluster.
  static EntanglementNetwork graph(std::size_t nodes, std::vector<Edge> edges,
                                   std::pair<std::size_t, std::size_t> terminals);

  Lattice kind() const noexcept { return kind_; }
  std::size_t side() const noexcept { return side_; }
  std::size_t nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::pair<std::size_t, std::size_t>& terminals() const noexcept { return terminals_; }

  /// Replaces every edge amplitude.
  void set_uniform_amplitude(double p);

 private:
  EntanglementNetwork() = default;
  void validate() const;

  Lattice kind_ = Lattice::kExplicit;
  std::size_t side_ = 0;
  std::size_t nodes_ = 0;
  std::vector<Edge> edges_;
  std::pair<std::size_t, std::size_t> terminals_{0, 0};
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t v);
  /// Returns true when the two sets were distinct.
  bool unite(std::size_t a, std::size_t b);
  std::size_t size_of(std::size_t v) { return size_[find(v)]; }
  std::size_t components() const noexcept { return components_; }
  void reset();

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t components_ = 0;
};

struct TrialStats {
  bool spanning = false;
  double largest_fraction = 0.0;
  std::size_t clusters = 0;
};

struct PercolationResult {
  std::vector<TrialStats> trials;
  double spanning_frequency = 0.0;
  double mean_largest_fraction = 0.0;
  /// Pairwise connectivity of `sample_nodes` in the first trial.
  std::vector<std::size_t> sample_nodes;
  std::vector<std::vector<bool>> connectivity;
};

/// Opens each edge with its singlet conversion probability. Trial t draws
/// one uniform per edge, in edge order, from rng::substream(seed, t).
PercolationResult percolate(const EntanglementNetwork& net, std::size_t trials,
                            std::uint64_t seed, unsigned workers = 1);

/// Same trial structure with every edge open with probability q. Equal
/// seeds share the uniforms across q, so the spanning indicator of each
/// trial is nondecreasing in q.
PercolationResult percolate_uniform(const EntanglementNetwork& net, double q, std::size_t trials,
                                    std::uint64_t seed, unsigned workers = 1);

/// Cluster labels (smallest node index per cluster) for a given open-edge
/// mask.
std::vector<std::size_t> cluster_labels(const EntanglementNetwork& net,
                                        const std::vector<bool>& open);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes out of n at z standard errors.
WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z = 1.96);

struct ThresholdPoint {
  double q = 0.0;
  double spanning_frequency = 0.0;
  WilsonInterval ci;
};

struct ThresholdEstimate {
  double threshold = 0.0;
  double standard_error = 0.0;
  std::vector<ThresholdPoint> points;  // sorted by q
  std::vector<std::string> warnings;
};

struct ThresholdOptions {
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t trials = 400;
  std::size_t bisection_steps = 6;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

/// Spanning-probability crossing of 1/2 for a uniform-bond lattice family:
/// grid sweep, then bisection inside the bracketing interval.
ThresholdEstimate estimate_threshold(Lattice kind, std::size_t side,
                                     const ThresholdOptions& options = {});

enum class SwapModel { kIndependent, kPreserveSchmidt };

SwapModel parse_swap_model(std::string_view name);
std::string_view swap_model_name(SwapModel m);

/// End-to-end probability of joining two links by a swap.
double q_swap(double a, double b, SwapModel model = SwapModel::kIndependent);
double chain_probability(const std::vector<double>& links,
                         SwapModel model = SwapModel::kIndependent);

/// Lengths in metres.
struct RepeaterConfig {
  double total_length = 0.0;         // L
  double segment_length = 0.0;       // L0
  double attenuation_length = 0.0;   // L_att
  std::optional<double> epsilon;     // defaults to L0 / L
  double eta = 1.0;

  double effective_epsilon() const { return epsilon.value_or(segment_length / total_length); }
  void validate() const;
};

struct RepeaterTiming {
  double success_probability = 0.0;  // eps^2 eta^2 exp(-L0 / L_att)
  double t_cc = 0.0;                 // L0 / c, seconds
  double t_segment = 0.0;
  double t_total = 0.0;              // t_segment (L / L0)^2
};

RepeaterTiming repeater_time(const RepeaterConfig& cfg);

}  // namespace channelion::percolation
