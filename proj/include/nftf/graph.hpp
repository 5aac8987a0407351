#pragma once

// Directed weighted transfer graph between accounts and its structural
// metrics. Degree, density and component counts use the directed graph;
// path lengths, clustering, transitivity and assortativity use its
// undirected simple projection (direction and self-loops dropped).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nftf/ledger.hpp"
#include "nftf/types.hpp"

namespace nftf {

struct TransferGraph {
  std::set<AccountId> nodes;
  std::map<std::pair<AccountId, AccountId>, std::uint64_t> edges;  // (from, to) -> transfers

  void add_transfer(const AccountId& from, const AccountId& to, std::uint64_t count = 1) {
    nodes.insert(from);
    nodes.insert(to);
    edges[{from, to}] += count;
  }

  std::uint64_t total_weight() const {
    std::uint64_t w = 0;
    for (const auto& [_, c] : edges) w += c;
    return w;
  }

  friend bool operator==(const TransferGraph&, const TransferGraph&) = default;
};

inline TransferGraph build_transfer_graph(const Ledger& ledger) {
  TransferGraph g;
  for (const auto& [_, h] : ledger.histories)
    for (const auto& ev : h.events)
      if (ev.kind == EventKind::Transfer) g.add_transfer(ev.actor, *ev.to);
  return g;
}

/// "from to weight" per line, edges in (from, to) order.
inline void write_edge_list(std::ostream& out, const TransferGraph& g) {
  for (const auto& [e, w] : g.edges) out << e.first.str() << ' ' << e.second.str() << ' ' << w << '\n';
}

// ---------------------------------------------------------------------------
// Undirected simple adjacency

/// Sorted neighbor lists over node indices 0..n-1.
using Adjacency = std::vector<std::vector<std::uint32_t>>;

/// Mean local clustering coefficient; nodes of degree < 2 contribute 0.
/// Absent for an empty graph.
inline std::optional<double> mean_local_clustering(const Adjacency& adj) {
  if (adj.empty()) return std::nullopt;
  std::vector<char> mark(adj.size(), 0);
  double sum = 0;
  for (std::size_t v = 0; v < adj.size(); ++v) {
    const auto& nv = adj[v];
    const std::size_t d = nv.size();
    if (d < 2) continue;
    for (auto u : nv) mark[u] = 1;
    std::uint64_t links = 0;
    for (auto u : nv)
      for (auto w : adj[u])
        if (mark[w]) ++links;
    for (auto u : nv) mark[u] = 0;
    // each neighbor-neighbor link was seen from both ends
    sum += double(links / 2) / (double(d) * double(d - 1) / 2.0);
  }
  return sum / double(adj.size());
}

namespace detail {

struct IndexedGraph {
  std::vector<AccountId> ids;  // sorted
  std::vector<std::pair<std::uint32_t, std::uint32_t>> directed;
  Adjacency undirected;
};

inline IndexedGraph index_graph(const TransferGraph& g) {
  IndexedGraph ig;
  ig.ids.assign(g.nodes.begin(), g.nodes.end());
  std::map<AccountId, std::uint32_t> pos;
  for (std::uint32_t i = 0; i < ig.ids.size(); ++i) pos[ig.ids[i]] = i;
  std::vector<std::set<std::uint32_t>> nb(ig.ids.size());
  for (const auto& [e, _] : g.edges) {
    const auto a = pos.at(e.first), b = pos.at(e.second);
    ig.directed.emplace_back(a, b);
    if (a != b) {
      nb[a].insert(b);
      nb[b].insert(a);
    }
  }
  ig.undirected.resize(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) ig.undirected[i].assign(nb[i].begin(), nb[i].end());
  return ig;
}

/// Weak components as label per node; labels numbered by smallest member.
inline std::vector<std::uint32_t> component_labels(const Adjacency& adj) {
  constexpr auto kNone = std::uint32_t(-1);
  std::vector<std::uint32_t> label(adj.size(), kNone);
  std::uint32_t next = 0;
  for (std::uint32_t s = 0; s < adj.size(); ++s) {
    if (label[s] != kNone) continue;
    std::vector<std::uint32_t> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto u : adj[v])
        if (label[u] == kNone) {
          label[u] = next;
          stack.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

/// Members of the largest component; ties go to the component holding the
/// smallest node index (= smallest account id).
inline std::vector<std::uint32_t> largest_component_nodes(const Adjacency& adj) {
  const auto label = component_labels(adj);
  if (label.empty()) return {};
  const auto ncomp = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::size_t> size(ncomp, 0);
  for (auto l : label) ++size[l];
  // labels are assigned in order of smallest member, so the first maximum wins
  const auto best = std::uint32_t(std::max_element(size.begin(), size.end()) - size.begin());
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < label.size(); ++v)
    if (label[v] == best) out.push_back(v);
  return out;
}

struct PathStats {
  std::uint64_t diameter = 0;
  std::uint64_t length_sum = 0;  // over unordered pairs
  std::uint64_t pairs = 0;
};

/// All-pairs BFS restricted to `members` (a connected node set).
inline PathStats path_stats(const Adjacency& adj, const std::vector<std::uint32_t>& members) {
  PathStats ps;
  std::vector<std::int64_t> dist(adj.size(), -1);
  std::queue<std::uint32_t> q;
  for (auto s : members) {
    for (auto v : members) dist[v] = -1;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto u : adj[v])
        if (dist[u] < 0) {
          dist[u] = dist[v] + 1;
          q.push(u);
        }
    }
    for (auto v : members) {
      if (v <= s) continue;
      ps.length_sum += std::uint64_t(dist[v]);
      ps.diameter = std::max(ps.diameter, std::uint64_t(dist[v]));
      ++ps.pairs;
    }
  }
  return ps;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics

struct GraphMetrics {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;  // distinct directed pairs
  std::uint64_t connected_components = 0;
  std::optional<double> average_degree;
  std::uint64_t max_degree = 0;
  std::optional<std::uint64_t> diameter;
  std::optional<double> average_path_length;
  std::optional<double> density;
  std::optional<double> clustering_coefficient;
  std::optional<double> degree_assortativity;
  double transitivity = 0;
};

inline GraphMetrics graph_metrics(const TransferGraph& g) {
  const auto ig = detail::index_graph(g);
  const auto& adj = ig.undirected;
  GraphMetrics m;
  m.nodes = ig.ids.size();
  m.edges = ig.directed.size();
  if (m.nodes == 0) return m;

  const auto labels = detail::component_labels(adj);
  m.connected_components = *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<std::uint64_t> total_degree(m.nodes, 0);
  for (const auto& [a, b] : ig.directed) {
    ++total_degree[a];
    ++total_degree[b];
  }
  m.max_degree = *std::max_element(total_degree.begin(), total_degree.end());
  m.average_degree = 2.0 * double(m.edges) / double(m.nodes);
  if (m.nodes >= 2) m.density = double(m.edges) / (double(m.nodes) * double(m.nodes - 1));

  const auto lcc = detail::largest_component_nodes(adj);
  if (lcc.size() >= 2) {
    const auto ps = detail::path_stats(adj, lcc);
    m.diameter = ps.diameter;
    m.average_path_length = double(ps.length_sum) / double(ps.pairs);
  }

  m.clustering_coefficient = mean_local_clustering(adj);

  std::uint64_t closed = 0, triples = 0;  // closed = 3 x triangles
  std::vector<char> mark(adj.size(), 0);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    const std::uint64_t d = adj[v].size();
    if (d >= 2) triples += d * (d - 1) / 2;
    for (auto u : adj[v]) mark[u] = 1;
    std::uint64_t links = 0;
    for (auto u : adj[v])
      for (auto w : adj[u])
        if (mark[w]) ++links;
    for (auto u : adj[v]) mark[u] = 0;
    closed += links / 2;
  }
  m.transitivity = triples == 0 ? 0.0 : double(closed) / double(triples);

  // Pearson correlation of undirected degrees over both orientations of
  // every undirected edge, from exact integer moments.
  i128 cnt = 0, sx = 0, sxx = 0, sxy = 0;
  for (std::size_t v = 0; v < adj.size(); ++v) {
    const i128 dv = i128(adj[v].size());
    for (auto u : adj[v]) {
      ++cnt;
      sx += dv;
      sxx += dv * dv;
      sxy += dv * i128(adj[u].size());
    }
  }
  const i128 var = cnt * sxx - sx * sx;
  if (cnt > 0 && var > 0) m.degree_assortativity = double(cnt * sxy - sx * sx) / double(var);
  return m;
}

/// Induced subgraph on the largest weak component.
inline TransferGraph largest_component(const TransferGraph& g) {
  if (g.nodes.empty()) throw std::invalid_argument("largest_component: empty graph");
  const auto ig = detail::index_graph(g);
  std::set<AccountId> keep;
  for (auto v : detail::largest_component_nodes(ig.undirected)) keep.insert(ig.ids[v]);
  TransferGraph out;
  out.nodes = keep;
  for (const auto& [e, w] : g.edges)
    if (keep.count(e.first) && keep.count(e.second)) out.edges[e] = w;
  return out;
}

/// Sizes of all weak components, largest first.
inline std::vector<std::size_t> component_sizes(const TransferGraph& g) {
  const auto ig = detail::index_graph(g);
  const auto labels = detail::component_labels(ig.undirected);
  std::map<std::uint32_t, std::size_t> size;
  for (auto l : labels) ++size[l];
  std::vector<std::size_t> out;
  for (const auto& [_, s] : size) out.push_back(s);
  std::sort(out.rbegin(), out.rend());
  return out;
}

// ---------------------------------------------------------------------------
// APL progression

/// Accounts ordered by the time of their first transfer (as sender or
/// recipient), ties by account id. Only accounts present in `g` are listed.
inline std::vector<AccountId> first_transfer_order(const Ledger& ledger, const TransferGraph& g) {
  std::map<AccountId, Timestamp> first;
  auto seen = [&](const AccountId& a, Timestamp t) {
    auto [it, inserted] = first.emplace(a, t);
    if (!inserted && t < it->second) it->second = t;
  };
  for (const auto& [_, h] : ledger.histories)
    for (const auto& ev : h.events)
      if (ev.kind == EventKind::Transfer) {
        seen(ev.actor, ev.ts);
        seen(*ev.to, ev.ts);
      }
  std::vector<AccountId> order;
  for (const auto& id : g.nodes) order.push_back(id);
  std::stable_sort(order.begin(), order.end(), [&](const AccountId& a, const AccountId& b) {
    const auto ia = first.find(a), ib = first.find(b);
    const bool ha = ia != first.end(), hb = ib != first.end();
    if (ha != hb) return ha;
    if (ha && ia->second != ib->second) return ia->second < ib->second;
    return a < b;
  });
  return order;
}

struct AplPoint {
  std::size_t node_count = 0;
  double apl = 0;
  friend bool operator==(const AplPoint&, const AplPoint&) = default;
};

/// Adds nodes in `order` one at a time (with edges to already-added nodes)
/// and records the APL of the current largest weak component. Steps where
/// that component has no path yet produce no point.
inline std::vector<AplPoint> apl_progression(const TransferGraph& g, const std::vector<AccountId>& order) {
  if (order.size() != g.nodes.size() || std::set<AccountId>(order.begin(), order.end()) != g.nodes)
    throw std::invalid_argument("apl_progression: order is not a permutation of the graph's nodes");

  const auto ig = detail::index_graph(g);
  std::map<AccountId, std::uint32_t> pos;
  for (std::uint32_t i = 0; i < ig.ids.size(); ++i) pos[ig.ids[i]] = i;

  // Adjacency over the full index space; unadded nodes stay isolated and
  // are excluded from component selection.
  Adjacency partial(ig.ids.size());
  std::vector<char> added(ig.ids.size(), 0);
  std::vector<AplPoint> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto v = pos.at(order[k]);
    added[v] = 1;
    for (auto u : ig.undirected[v])
      if (added[u]) {
        partial[v].insert(std::upper_bound(partial[v].begin(), partial[v].end(), u), u);
        partial[u].insert(std::upper_bound(partial[u].begin(), partial[u].end(), v), v);
      }
    const auto labels = detail::component_labels(partial);
    std::map<std::uint32_t, std::vector<std::uint32_t>> comps;
    for (std::uint32_t i = 0; i < labels.size(); ++i)
      if (added[i]) comps[labels[i]].push_back(i);
    const std::vector<std::uint32_t>* best = nullptr;
    for (const auto& [_, members] : comps)
      if (!best || members.size() > best->size()) best = &members;
    if (!best || best->size() < 2) continue;
    const auto ps = detail::path_stats(partial, *best);
    out.push_back({k + 1, double(ps.length_sum) / double(ps.pairs)});
  }
  return out;
}

}  // namespace nftf
