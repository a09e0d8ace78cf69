#pragma once

// Data refinement: trim existing edges whose endpoint embeddings are
// dissimilar, add missing edges whose endpoints are highly similar. Operates
// on one sub-network (DD or WW) at a time; inclusion (DW) edges are never
// refined.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bite/embed.hpp"
#include "bite/graph.hpp"

namespace bite {

struct RefineConfig {
  double t_high = 0.95;  // add non-edges with cosine strictly above this
  double t_low = 0.5;    // trim edges with cosine strictly below this
  std::size_t max_added_per_node = std::numeric_limits<std::size_t>::max();
};

namespace detail {

inline std::pair<NodeId, NodeId> canonical_pair(NodeId a, NodeId b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace detail

/// Output = (input edges with cosine ≥ t_low) ∪ (non-edges with cosine >
/// t_high, capped per node by descending similarity, ties broken by
/// lexicographic id pair). The candidate universe is every id in the table;
/// only same-kind pairs are considered. Exact all-pairs scan — no
/// approximation, so results are deterministic. Self-loops never appear.
/// Kept edges keep their weight; added edges get weight 1.
inline std::vector<Edge> refine_edges(std::span<const Edge> edges, const EmbeddingTable& table,
                                      const RefineConfig& cfg) {
  if (!(cfg.t_low < cfg.t_high))
    throw std::invalid_argument("refine_edges: t_low must be < t_high");
  if (cfg.t_high <= 0.0 || cfg.t_high > 1.0 || cfg.t_low < 0.0 || cfg.t_low >= 1.0)
    throw std::invalid_argument("refine_edges: thresholds out of range");

  // Existing edge set, canonicalized; first occurrence's weight wins.
  std::map<std::pair<NodeId, NodeId>, double> existing;
  for (const Edge& e : edges) {
    table.at(e.src);  // throws on a node the table does not cover
    table.at(e.dst);
    if (e.src == e.dst) continue;
    existing.emplace(detail::canonical_pair(e.src, e.dst), e.weight);
  }

  std::vector<Edge> out;
  for (const auto& [pair, weight] : existing)
    if (cosine(table.at(pair.first), table.at(pair.second)) >= cfg.t_low)
      out.push_back({pair.first, pair.second, weight});

  // Candidate additions over all same-kind non-edges.
  std::vector<NodeId> ids;
  ids.reserve(table.vectors.size());
  for (const auto& [id, vec] : table.vectors) ids.push_back(id);

  struct Candidate {
    double sim;
    NodeId a, b;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (ids[i].kind != ids[j].kind) continue;
      if (existing.contains({ids[i], ids[j]})) continue;  // ids sorted => canonical
      const double sim = cosine(table.at(ids[i]), table.at(ids[j]));
      if (sim > cfg.t_high) cands.push_back({sim, ids[i], ids[j]});
    }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
  });

  std::map<NodeId, std::size_t> added;
  for (const Candidate& c : cands) {
    if (added[c.a] >= cfg.max_added_per_node || added[c.b] >= cfg.max_added_per_node) continue;
    ++added[c.a];
    ++added[c.b];
    out.push_back({c.a, c.b, 1.0});
  }

  std::sort(out.begin(), out.end());
  return out;
}

struct RefineReport {
  std::size_t added = 0;
  std::size_t removed = 0;
  std::size_t retained = 0;
  friend bool operator==(const RefineReport&, const RefineReport&) = default;
};

/// Set difference counts between two edge lists, compared as canonical
/// unordered pairs (weights ignored).
inline RefineReport refine_report(std::span<const Edge> before, std::span<const Edge> after) {
  std::set<std::pair<NodeId, NodeId>> b, a;
  for (const Edge& e : before) b.insert(detail::canonical_pair(e.src, e.dst));
  for (const Edge& e : after) a.insert(detail::canonical_pair(e.src, e.dst));
  RefineReport r;
  for (const auto& p : a)
    b.contains(p) ? ++r.retained : ++r.added;
  for (const auto& p : b)
    if (!a.contains(p)) ++r.removed;
  return r;
}

}  // namespace bite
