#include "channelion/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "channelion/parallel.hpp"
#include "channelion/rng.hpp"

namespace channelion::percolation {

namespace {

constexpr double kSpeedOfLightMetresPerSecond = 299792458.0;
constexpr double k2Pow53 = 9007199254740992.0;

double unit_uniform(rng::Engine& eng) {
  return static_cast<double>(eng() >> 11) / k2Pow53;
}

void check_amplitude(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("edge amplitude must lie in [0, 1]");
}

void check_probability(double q, const char* what) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError(std::string(what) + " must lie in [0, 1]");
}

std::vector<std::size_t> sample_nodes_for(const EntanglementNetwork& net) {
  const std::size_t k = std::min<std::size_t>(8, net.nodes());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = i * net.nodes() / k;
  return out;
}

bool spans(const EntanglementNetwork& net, UnionFind& uf) {
  if (net.kind() == Lattice::kExplicit)
    return uf.find(net.terminals().first) == uf.find(net.terminals().second);
  const std::size_t s = net.side();
  std::vector<char> left_roots(net.nodes(), 0);
  for (std::size_t y = 0; y < s; ++y) left_roots[uf.find(y * s)] = 1;
  for (std::size_t y = 0; y < s; ++y)
    if (left_roots[uf.find(y * s + s - 1)]) return true;
  return false;
}

// Trial t opens edge e when its uniform falls below threshold(e).
template <class Threshold>
PercolationResult run_trials(const EntanglementNetwork& net, std::size_t trials,
                             std::uint64_t seed, unsigned workers, Threshold threshold) {
  if (trials == 0) throw ConfigError("percolation needs at least one trial");
  PercolationResult res;
  res.trials.resize(trials);
  res.sample_nodes = sample_nodes_for(net);
  const auto& edges = net.edges();
  parallel_for(trials, workers, [&](std::size_t t) {
    auto eng = rng::substream(seed, t);
    UnionFind uf(net.nodes());
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (unit_uniform(eng) < threshold(e)) uf.unite(edges[e].a, edges[e].b);
    TrialStats st;
    st.spanning = spans(net, uf);
    st.clusters = uf.components();
    std::size_t largest = 0;
    for (std::size_t v = 0; v < net.nodes(); ++v)
      if (uf.find(v) == v) largest = std::max(largest, uf.size_of(v));
    st.largest_fraction = static_cast<double>(largest) / static_cast<double>(net.nodes());
    res.trials[t] = st;
    if (t == 0) {
      const auto& sn = res.sample_nodes;
      res.connectivity.assign(sn.size(), std::vector<bool>(sn.size(), false));
      for (std::size_t i = 0; i < sn.size(); ++i)
        for (std::size_t j = 0; j < sn.size(); ++j)
          res.connectivity[i][j] = uf.find(sn[i]) == uf.find(sn[j]);
    }
  });
  std::size_t spanning = 0;
  double largest = 0.0;
  for (const auto& st : res.trials) {
    spanning += st.spanning ? 1 : 0;
    largest += st.largest_fraction;
  }
  res.spanning_frequency = static_cast<double>(spanning) / static_cast<double>(trials);
  res.mean_largest_fraction = largest / static_cast<double>(trials);
  return res;
}

}  // namespace

Lattice parse_lattice(std::string_view name) {
  if (name == "square") return Lattice::kSquare;
  if (name == "triangular") return Lattice::kTriangular;
  if (name == "honeycomb") return Lattice::kHoneycomb;
  if (name == "explicit") return Lattice::kExplicit;
  throw ConfigError("unknown lattice '" + std::string(name) + "'");
}

std::string_view lattice_name(Lattice l) {
  switch (l) {
    case Lattice::kSquare:
      return "square";
    case Lattice::kTriangular:
      return "triangular";
    case Lattice::kHoneycomb:
      return "honeycomb";
    case Lattice::kExplicit:
      return "explicit";
  }
  return "?";
}

double singlet_conversion_probability(double p) {
  check_amplitude(p);
  const double p2 = p * p;
  return std::min(1.0, 2.0 * (1.0 - std::max(p2, 1.0 - p2)));
}

EntanglementNetwork EntanglementNetwork::lattice(Lattice kind, std::size_t side, double amplitude) {
  if (kind == Lattice::kExplicit) throw ConfigError("explicit networks need an edge list");
  if (side < 2) throw ConfigError("lattice side must be >= 2 for a spanning criterion");
  check_amplitude(amplitude);
  EntanglementNetwork net;
  net.kind_ = kind;
  net.side_ = side;
  net.nodes_ = side * side;
  auto id = [side](std::size_t x, std::size_t y) { return y * side + x; };
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      if (x + 1 < side) net.edges_.push_back({id(x, y), id(x + 1, y), amplitude});
      const bool vertical = kind != Lattice::kHoneycomb || (x + y) % 2 == 0;
      if (y + 1 < side && vertical) net.edges_.push_back({id(x, y), id(x, y + 1), amplitude});
      if (kind == Lattice::kTriangular && x + 1 < side && y + 1 < side)
        net.edges_.push_back({id(x, y), id(x + 1, y + 1), amplitude});
    }
  net.terminals_ = {0, net.nodes_ - 1};
  net.validate();
  return net;
}

EntanglementNetwork EntanglementNetwork::graph(std::size_t nodes, std::vector<Edge> edges,
                                               std::pair<std::size_t, std::size_t> terminals) {
  EntanglementNetwork net;
  net.kind_ = Lattice::kExplicit;
  net.nodes_ = nodes;
  net.edges_ = std::move(edges);
  net.terminals_ = terminals;
  net.validate();
  return net;
}

void EntanglementNetwork::set_uniform_amplitude(double p) {
  check_amplitude(p);
  for (auto& e : edges_) e.amplitude = p;
}

void EntanglementNetwork::validate() const {
  if (nodes_ < 2) throw ConfigError("network needs at least two nodes");
  if (terminals_.first >= nodes_ || terminals_.second >= nodes_)
    throw ConfigError("network terminal out of range");
  if (terminals_.first == terminals_.second) throw ConfigError("network terminals must differ");
  UnionFind uf(nodes_);
  for (const auto& e : edges_) {
    if (e.a >= nodes_ || e.b >= nodes_) throw ConfigError("edge endpoint out of range");
    if (e.a == e.b) throw ConfigError("self-loop edges are not allowed");
    check_amplitude(e.amplitude);
    uf.unite(e.a, e.b);
  }
  if (uf.components() != 1) throw ConfigError("network graph must be connected");
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n) { reset(); }

void UnionFind::reset() {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  std::fill(size_.begin(), size_.end(), std::size_t{1});
  components_ = parent_.size();
}

std::size_t UnionFind::find(std::size_t v) {
  std::size_t root = v;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[v] != root) {
    const std::size_t next = parent_[v];
    parent_[v] = root;
    v = next;
  }
  return root;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --components_;
  return true;
}

PercolationResult percolate(const EntanglementNetwork& net, std::size_t trials,
                            std::uint64_t seed, unsigned workers) {
  std::vector<double> probs(net.edges().size());
  for (std::size_t e = 0; e < probs.size(); ++e)
    probs[e] = singlet_conversion_probability(net.edges()[e].amplitude);
  return run_trials(net, trials, seed, workers, [&](std::size_t e) { return probs[e]; });
}

PercolationResult percolate_uniform(const EntanglementNetwork& net, double q, std::size_t trials,
                                    std::uint64_t seed, unsigned workers) {
  check_probability(q, "bond probability");
  return run_trials(net, trials, seed, workers, [q](std::size_t) { return q; });
}

std::vector<std::size_t> cluster_labels(const EntanglementNetwork& net,
                                        const std::vector<bool>& open) {
  if (open.size() != net.edges().size()) throw ConfigError("open mask must match edge count");
  UnionFind uf(net.nodes());
  for (std::size_t e = 0; e < open.size(); ++e)
    if (open[e]) uf.unite(net.edges()[e].a, net.edges()[e].b);
  std::vector<std::size_t> smallest(net.nodes(), net.nodes());
  for (std::size_t v = 0; v < net.nodes(); ++v) {
    auto& s = smallest[uf.find(v)];
    s = std::min(s, v);
  }
  std::vector<std::size_t> labels(net.nodes());
  for (std::size_t v = 0; v < net.nodes(); ++v) labels[v] = smallest[uf.find(v)];
  return labels;
}

WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) throw ConfigError("wilson_interval: n must be >= 1");
  if (k > n) throw ConfigError("wilson_interval: k exceeds n");
  const double nd = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double centre = (ph + z2 / (2.0 * nd)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nd + z2 / (4.0 * nd * nd)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ThresholdEstimate estimate_threshold(Lattice kind, std::size_t side,
                                     const ThresholdOptions& options) {
  if (kind == Lattice::kExplicit) throw ConfigError("threshold estimation needs a lattice family");
  if (side < 2) throw ConfigError("threshold estimation needs a lattice side >= 2");
  if (options.grid.size() < 2) throw ConfigError("threshold grid needs at least two points");
  if (options.trials == 0) throw ConfigError("threshold estimation needs trials >= 1");
  for (double q : options.grid) check_probability(q, "grid point");

  const auto net = EntanglementNetwork::lattice(kind, side, 1.0);
  const double n = static_cast<double>(options.trials);
  ThresholdEstimate est;
  auto evaluate = [&](double q) {
    const auto r = percolate_uniform(net, q, options.trials, options.seed, options.workers);
    const auto k = static_cast<std::size_t>(std::llround(r.spanning_frequency * n));
    ThresholdPoint pt{q, r.spanning_frequency, wilson_interval(k, options.trials)};
    est.points.push_back(pt);
    return pt;
  };
  auto by_q = [](const ThresholdPoint& a, const ThresholdPoint& b) { return a.q < b.q; };

  std::vector<double> grid = options.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double q : grid) evaluate(q);
  std::sort(est.points.begin(), est.points.end(), by_q);

  const double sigma_half = 0.5 / std::sqrt(n);
  for (std::size_t i = 1; i < est.points.size(); ++i) {
    const auto& a = est.points[i - 1];
    const auto& b = est.points[i];
    if (b.spanning_frequency + 3.0 * std::sqrt(2.0) * sigma_half < a.spanning_frequency)
      est.warnings.push_back("spanning frequency decreases between q = " + std::to_string(a.q) +
                             " and q = " + std::to_string(b.q));
  }

  auto bracket = [&]() -> std::pair<ThresholdPoint, ThresholdPoint> {
    const auto& p = est.points;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i - 1].spanning_frequency < 0.5 && p[i].spanning_frequency >= 0.5) return {p[i - 1], p[i]};
    throw NumericalError("threshold estimation: spanning frequency does not cross 1/2 on the grid");
  };

  auto [lo, hi] = bracket();
  for (std::size_t s = 0; s < options.bisection_steps; ++s) {
    const auto mid = evaluate(0.5 * (lo.q + hi.q));
    if (mid.spanning_frequency < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  std::sort(est.points.begin(), est.points.end(), by_q);

  const double df = hi.spanning_frequency - lo.spanning_frequency;
  est.threshold = df > 0 ? lo.q + (0.5 - lo.spanning_frequency) * (hi.q - lo.q) / df
                         : 0.5 * (lo.q + hi.q);

  // Slope of the spanning curve from a least-squares line over the points in
  // the transition window; the standard error maps the binomial spread at
  // frequency 1/2 onto q.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : est.points) {
    if (p.spanning_frequency < 0.1 || p.spanning_frequency > 0.9) continue;
    sx += p.q;
    sy += p.spanning_frequency;
    sxx += p.q * p.q;
    sxy += p.q * p.spanning_frequency;
    ++m;
  }
  double slope = 0.0;
  if (m >= 2) {
    const double md = static_cast<double>(m);
    const double den = md * sxx - sx * sx;
    if (den > 0) slope = (md * sxy - sx * sy) / den;
  }
  if (!(slope > 0)) slope = df > 0 ? df / (hi.q - lo.q) : 0.0;
  est.standard_error = slope > 0 ? sigma_half / slope : 0.5 * (hi.q - lo.q);
  est.standard_error = std::max(est.standard_error, 0.5 * (hi.q - lo.q));
  return est;
}

SwapModel parse_swap_model(std::string_view name) {
  if (name == "independent") return SwapModel::kIndependent;
  if (name == "preserve-schmidt") return SwapModel::kPreserveSchmidt;
  throw ConfigError("unknown swap model '" + std::string(name) + "'");
}

std::string_view swap_model_name(SwapModel m) {
  return m == SwapModel::kIndependent ? "independent" : "preserve-schmidt";
}

double q_swap(double a, double b, SwapModel model) {
  check_probability(a, "link probability");
  check_probability(b, "link probability");
  if (model == SwapModel::kIndependent) return a * b;
  if (a != b) throw ConfigError("preserve-schmidt swap needs equal link probabilities");
  return a;
}

double chain_probability(const std::vector<double>& links, SwapModel model) {
  if (links.empty()) throw ConfigError("chain needs at least one link");
  double p = links.front();
  check_probability(p, "link probability");
  for (std::size_t i = 1; i < links.size(); ++i) p = q_swap(p, links[i], model);
  return p;
}

void RepeaterConfig::validate() const {
  if (!(segment_length > 0)) throw ConfigError("repeater: segment length L0 must be > 0");
  if (!(total_length >= segment_length)) throw ConfigError("repeater: L must be >= L0");
  if (!(attenuation_length > 0)) throw ConfigError("repeater: attenuation length must be > 0");
  const double eps = effective_epsilon();
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("repeater: epsilon must lie in [0, 1]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("repeater: eta must lie in [0, 1]");
}

RepeaterTiming repeater_time(const RepeaterConfig& cfg) {
  cfg.validate();
  const double eps = cfg.effective_epsilon();
  if (eps == 0.0 || cfg.eta == 0.0)
    throw DomainError("repeater: zero excitation or detection efficiency gives infinite time");
  RepeaterTiming t;
  t.success_probability =
      eps * eps * cfg.eta * cfg.eta * std::exp(-cfg.segment_length / cfg.attenuation_length);
  t.t_cc = cfg.segment_length / kSpeedOfLightMetresPerSecond;
  t.t_segment = t.t_cc / t.success_probability;
  const double ratio = cfg.total_length / cfg.segment_length;
  t.t_total = t.t_segment * ratio * ratio;
  return t;
}

}  // namespace channelion::percolation
