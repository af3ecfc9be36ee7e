#pragma once

// Direct-evaluation references for Poisson probabilities and graph
// clustering.

#include <cmath>
#include <cstdint>
#include <queue>
#include <utility>
#include <vector>

namespace oracle {

/// m^c e^{-m} / c! as a running product in long double, for moderate c.
inline long double poisson_pmf(std::uint64_t c, long double m) {
  long double p = std::exp(-m);
  for (std::uint64_t k = 1; k <= c; ++k) p *= m / static_cast<long double>(k);
  return p;
}

/// prod_j [p D_k + (1-p) D_i] / [D_k + D_i] evaluated factor by factor.
inline long double likelihood(double p, const std::vector<std::uint64_t>& c,
                              const std::vector<double>& mk, const std::vector<double>& mi) {
  long double f = 1.0L;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const long double dk = poisson_pmf(c[j], mk[j]);
    const long double di = poisson_pmf(c[j], mi[j]);
    f *= (p * dk + (1.0L - p) * di) / (dk + di);
  }
  return f;
}

/// Cluster labels (smallest node index) by breadth-first search.
inline std::vector<std::size_t> bfs_labels(std::size_t n,
                                           const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::size_t> label(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != n) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = s;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto w : adj[v])
        if (label[w] == n) {
          label[w] = s;
          q.push(w);
        }
    }
  }
  return label;
}

}  // namespace oracle
