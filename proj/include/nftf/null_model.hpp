#pragma once

// Erdős–Rényi G(n, m) null model for the clustering coefficient and the
// small-world verdict built on it.
//
// Reproducibility: replicate r draws from std::mt19937_64 seeded with
// replicate_seed(seed, r) = splitmix64(splitmix64(seed) + r). Bounded
// integers use Lemire's multiply-and-reject on raw 64-bit engine output, so
// samples are identical on every platform and standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "nftf/graph.hpp"
#include "nftf/parallel.hpp"

namespace nftf {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r) {
  return splitmix64(splitmix64(seed) + r);
}

/// Uniform integer in [0, bound) from a 64-bit engine. bound > 0.
template <typename Engine>
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  u128 product = u128(rng()) * bound;
  auto low = std::uint64_t(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = u128(rng()) * bound;
      low = std::uint64_t(product);
    }
  }
  return std::uint64_t(product >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
template <typename Engine>
double uniform_unit(Engine& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t max_simple_edges(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Undirected pair for index k in [0, n(n-1)/2), row-major over u < v.
inline std::pair<std::uint32_t, std::uint32_t> pair_from_index(std::uint64_t n, std::uint64_t k) {
  // row u starts at u*(2n-u-1)/2
  std::uint64_t lo = 0, hi = n - 1;
  while (lo + 1 < hi) {
    const std::uint64_t mid = (lo + hi) / 2;
    if (mid * (2 * n - mid - 1) / 2 <= k) lo = mid;
    else hi = mid;
  }
  const std::uint64_t start = lo * (2 * n - lo - 1) / 2;
  return {std::uint32_t(lo), std::uint32_t(lo + 1 + (k - start))};
}

/// One G(n, m) sample: m distinct undirected edges, no self-loops, as
/// sorted adjacency lists. Uses Floyd's subset sampling over pair indices.
template <typename Engine>
Adjacency sample_gnm(std::uint64_t n, std::uint64_t m, Engine& rng) {
  const std::uint64_t total = max_simple_edges(n);
  if (m > total) throw std::invalid_argument("G(n,m): m exceeds n(n-1)/2");
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(m * 2);
  std::vector<std::uint64_t> picks;
  picks.reserve(m);
  for (std::uint64_t j = total - m; j < total; ++j) {
    const std::uint64_t t = uniform_below(rng, j + 1);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    picks.push_back(pick);
  }
  Adjacency adj(n);
  for (auto k : picks) {
    const auto [u, v] = pair_from_index(n, k);
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

struct NullModelResult {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  std::uint64_t replicates = 0;
  double mean_clustering = 0;
  double std_clustering = 0;  // population standard deviation
  std::uint64_t seed = 0;
};

inline NullModelResult er_null_model(std::uint64_t n, std::uint64_t m, std::uint64_t replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("er_null_model: replicates must be >= 1");
  if (m > max_simple_edges(n)) throw std::invalid_argument("er_null_model: m exceeds n(n-1)/2");

  std::vector<double> cc(replicates, 0.0);
  parallel_for(replicates, [&](std::size_t r) {
    std::mt19937_64 rng(replicate_seed(seed, r));
    cc[r] = mean_local_clustering(sample_gnm(n, m, rng)).value_or(0.0);
  });

  NullModelResult out{n, m, replicates, 0, 0, seed};
  double sum = 0;
  for (double c : cc) sum += c;
  out.mean_clustering = sum / double(replicates);
  double sq = 0;
  for (double c : cc) sq += (c - out.mean_clustering) * (c - out.mean_clustering);
  out.std_clustering = std::sqrt(sq / double(replicates));
  return out;
}

struct SmallWorldReport {
  GraphMetrics observed;
  NullModelResult null_model;
  double clustering_ratio = 0;  // +inf when the null mean is 0 and observed > 0
  double ratio_threshold = 5;
  bool verdict = false;
};

inline constexpr double kDefaultSmallWorldThreshold = 5.0;

inline double clustering_ratio(double observed, double null_mean) {
  if (null_mean > 0) return observed / null_mean;
  return observed > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

/// Compares the observed clustering with G(n, m) samples where n is the
/// node count and m the edge count of the undirected simple projection.
inline SmallWorldReport small_world_report(const TransferGraph& g, std::uint64_t replicates, std::uint64_t seed,
                                           double ratio_threshold = kDefaultSmallWorldThreshold) {
  if (g.edges.empty()) throw std::invalid_argument("small_world_report: graph has no edges");
  SmallWorldReport rep;
  rep.observed = graph_metrics(g);
  const auto ig = detail::index_graph(g);
  std::uint64_t m = 0;
  for (const auto& nb : ig.undirected) m += nb.size();
  m /= 2;
  rep.null_model = er_null_model(ig.ids.size(), m, replicates, seed);
  rep.clustering_ratio = clustering_ratio(rep.observed.clustering_coefficient.value_or(0.0), rep.null_model.mean_clustering);
  rep.ratio_threshold = ratio_threshold;
  rep.verdict = rep.clustering_ratio >= ratio_threshold && rep.observed.average_path_length.has_value();
  return rep;
}

}  // namespace nftf
