#pragma once

// Bi-typed graph data model: document nodes, word nodes and three typed edge
// sets (document-document, word-word, document-word). Each per-type edge set
// is kept canonical and undirected: DD/WW edges store the smaller index
// first, DW edges store (document, word). Self-loops are never stored; they
// enter only through the renormalization step.

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bite/linalg.hpp"

namespace bite {

enum class NodeKind { Document, Word };

struct NodeId {
  std::size_t index = 0;
  NodeKind kind = NodeKind::Document;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline NodeId doc_node(std::size_t i) { return {i, NodeKind::Document}; }
inline NodeId word_node(std::size_t i) { return {i, NodeKind::Word}; }

enum class EdgeType { DD = 0, WW = 1, DW = 2 };

inline constexpr std::array<EdgeType, 3> kEdgeTypes = {EdgeType::DD, EdgeType::WW, EdgeType::DW};

inline const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::DD: return "dd";
    case EdgeType::WW: return "ww";
    case EdgeType::DW: return "dw";
  }
  return "?";
}

struct Edge {
  NodeId src, dst;
  double weight = 1.0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge dd_edge(std::size_t a, std::size_t b, double w = 1.0) {
  return {doc_node(a), doc_node(b), w};
}
inline Edge ww_edge(std::size_t a, std::size_t b, double w = 1.0) {
  return {word_node(a), word_node(b), w};
}
inline Edge dw_edge(std::size_t d, std::size_t w, double weight = 1.0) {
  return {doc_node(d), word_node(w), weight};
}

/// Index of a node in the joint (documents first, then words) ordering.
inline std::size_t joint_index(NodeId id, std::size_t n_docs) {
  return id.kind == NodeKind::Document ? id.index : n_docs + id.index;
}

class BiTypedGraph {
 public:
  BiTypedGraph() = default;
  BiTypedGraph(std::size_t n_docs, std::size_t n_words) : n_docs_(n_docs), n_words_(n_words) {}

  std::size_t doc_count() const { return n_docs_; }
  std::size_t word_count() const { return n_words_; }
  std::size_t joint_count() const { return n_docs_ + n_words_; }

  /// Canonical undirected edge list for one type, sorted.
  const std::vector<Edge>& edges(EdgeType t) const { return edges_[static_cast<int>(t)]; }
  std::size_t edge_count(EdgeType t) const { return edges(t).size(); }

  friend bool operator==(const BiTypedGraph&, const BiTypedGraph&) = default;

 private:
  friend BiTypedGraph build_graph(std::size_t, std::size_t, std::span<const Edge>,
                                  std::span<const Edge>, std::span<const Edge>);

  std::size_t n_docs_ = 0, n_words_ = 0;
  std::array<std::vector<Edge>, 3> edges_;
};

namespace detail {

inline void check_endpoint(NodeId id, NodeKind want, std::size_t n_docs, std::size_t n_words,
                           EdgeType t) {
  if (id.kind != want)
    throw std::invalid_argument(std::string("build_graph: ") + edge_type_name(t) +
                                " edge endpoint has the wrong node kind");
  const std::size_t limit = want == NodeKind::Document ? n_docs : n_words;
  if (id.index >= limit)
    throw std::out_of_range(std::string("build_graph: ") + edge_type_name(t) +
                            " edge endpoint index " + std::to_string(id.index) +
                            " out of range");
}

}  // namespace detail

/// Assemble a bi-typed graph from per-type edge lists. Edges are symmetrized
/// into canonical undirected form and deduplicated (first occurrence keeps
/// its weight). Self-loops are dropped. Endpoint kinds must match the list:
/// DD connects two documents, WW two words, DW one of each (either order).
inline BiTypedGraph build_graph(std::size_t n_docs, std::size_t n_words,
                                std::span<const Edge> dd, std::span<const Edge> ww,
                                std::span<const Edge> dw) {
  BiTypedGraph g(n_docs, n_words);

  auto add_same_kind = [&](EdgeType t, NodeKind kind, std::span<const Edge> list) {
    std::map<std::pair<std::size_t, std::size_t>, double> canon;
    for (const Edge& e : list) {
      detail::check_endpoint(e.src, kind, n_docs, n_words, t);
      detail::check_endpoint(e.dst, kind, n_docs, n_words, t);
      if (e.src.index == e.dst.index) continue;
      auto key = std::minmax(e.src.index, e.dst.index);
      canon.emplace(std::pair{key.first, key.second}, e.weight);
    }
    auto& out = g.edges_[static_cast<int>(t)];
    out.reserve(canon.size());
    for (const auto& [key, w] : canon)
      out.push_back({{key.first, kind}, {key.second, kind}, w});
  };

  add_same_kind(EdgeType::DD, NodeKind::Document, dd);
  add_same_kind(EdgeType::WW, NodeKind::Word, ww);

  std::map<std::pair<std::size_t, std::size_t>, double> canon;
  for (const Edge& e : dw) {
    NodeId d = e.src, w = e.dst;
    if (d.kind == NodeKind::Word && w.kind == NodeKind::Document) std::swap(d, w);
    detail::check_endpoint(d, NodeKind::Document, n_docs, n_words, EdgeType::DW);
    detail::check_endpoint(w, NodeKind::Word, n_docs, n_words, EdgeType::DW);
    canon.emplace(std::pair{d.index, w.index}, e.weight);
  }
  auto& out = g.edges_[static_cast<int>(EdgeType::DW)];
  out.reserve(canon.size());
  for (const auto& [key, w] : canon) out.push_back(dw_edge(key.first, key.second, w));

  return g;
}

/// Renormalized adjacency of one typed sub-network:
/// D̃^{-1/2} (A + I) D̃^{-1/2} with D̃ the degree of A + I.
struct NormalizedAdjacency {
  EdgeType edge_type = EdgeType::DD;
  SparseMatrix matrix;

  std::size_t rows() const { return matrix.rows; }
  std::size_t cols() const { return matrix.cols; }
};

namespace detail {

// entries must describe a symmetric A (both directions present, no diagonal).
inline SparseMatrix renormalize(std::size_t n, std::vector<SparseMatrix::Entry> entries) {
  std::vector<double> degree(n, 1.0);  // start from the injected self-loop
  for (const auto& e : entries) degree[e.i] += e.v;
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  for (auto& e : entries) e.v *= inv_sqrt[e.i] * inv_sqrt[e.j];
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
  return SparseMatrix::from_coo(n, n, std::move(entries));
}

inline std::vector<SparseMatrix::Entry> typed_entries(const BiTypedGraph& g, EdgeType t,
                                                      std::size_t doc_offset,
                                                      std::size_t word_offset) {
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(2 * g.edge_count(t));
  for (const Edge& e : g.edges(t)) {
    auto place = [&](NodeId id) {
      return id.kind == NodeKind::Document ? doc_offset + id.index : word_offset + id.index;
    };
    const std::size_t a = place(e.src), b = place(e.dst);
    entries.push_back({a, b, e.weight});
    entries.push_back({b, a, e.weight});
  }
  return entries;
}

}  // namespace detail

/// Renormalized adjacency over the type's natural index space: documents for
/// DD, words for WW, and the joint documents-then-words space for DW (the
/// bipartite block is embedded in the joint square matrix first, so degree
/// mass is shared across both kinds).
inline NormalizedAdjacency normalize(const BiTypedGraph& g, EdgeType t) {
  std::size_t n = 0;
  std::vector<SparseMatrix::Entry> entries;
  switch (t) {
    case EdgeType::DD:
      n = g.doc_count();
      entries = detail::typed_entries(g, t, 0, 0);
      break;
    case EdgeType::WW:
      n = g.word_count();
      entries = detail::typed_entries(g, t, 0, 0);
      break;
    case EdgeType::DW:
      n = g.joint_count();
      entries = detail::typed_entries(g, t, 0, g.doc_count());
      break;
  }
  if (n == 0) throw std::invalid_argument("normalize: node count for the edge type is zero");
  return {t, detail::renormalize(n, std::move(entries))};
}

/// Same normalization, always over the joint (docs + words) space. Nodes the
/// sub-network does not touch are isolated there and come out as bare
/// self-loops with entry 1, so a convolution with this matrix passes their
/// rows through unchanged.
inline NormalizedAdjacency joint_normalized(const BiTypedGraph& g, EdgeType t) {
  const std::size_t n = g.joint_count();
  if (n == 0) throw std::invalid_argument("joint_normalized: empty graph");
  return {t, detail::renormalize(n, detail::typed_entries(g, t, 0, g.doc_count()))};
}

struct DegreeStats {
  std::size_t node_count = 0;
  std::size_t min_degree = 0;
  std::size_t max_degree = 0;
  double mean_degree = 0.0;
  std::size_t isolated = 0;
};

/// Degree summary per edge type. DD counts document degrees, WW word degrees,
/// DW degrees of every node in the joint space.
inline std::map<EdgeType, DegreeStats> degree_stats(const BiTypedGraph& g) {
  std::map<EdgeType, DegreeStats> out;
  for (EdgeType t : kEdgeTypes) {
    std::size_t n = 0, doc_offset = 0, word_offset = 0;
    switch (t) {
      case EdgeType::DD: n = g.doc_count(); break;
      case EdgeType::WW: n = g.word_count(); break;
      case EdgeType::DW:
        n = g.joint_count();
        word_offset = g.doc_count();
        break;
    }
    std::vector<std::size_t> degree(n, 0);
    for (const Edge& e : g.edges(t)) {
      auto place = [&](NodeId id) {
        return id.kind == NodeKind::Document ? doc_offset + id.index : word_offset + id.index;
      };
      ++degree[place(e.src)];
      ++degree[place(e.dst)];
    }
    DegreeStats s;
    s.node_count = n;
    if (n > 0) {
      s.min_degree = degree[0];
      double sum = 0.0;
      for (std::size_t d : degree) {
        s.min_degree = std::min(s.min_degree, d);
        s.max_degree = std::max(s.max_degree, d);
        if (d == 0) ++s.isolated;
        sum += static_cast<double>(d);
      }
      s.mean_degree = sum / static_cast<double>(n);
    }
    out.emplace(t, s);
  }
  return out;
}

}  // namespace bite
