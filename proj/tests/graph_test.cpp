#include "bite/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace bite;

namespace {

TEST(BuildGraph, CanonicalizesAndDeduplicates) {
  const std::vector<Edge> dd = {dd_edge(2, 1), dd_edge(1, 2, 9.0), dd_edge(0, 0), dd_edge(0, 1)};
  const std::vector<Edge> ww = {ww_edge(1, 0)};
  const std::vector<Edge> dw = {{word_node(0), doc_node(2), 3.0}};
  const BiTypedGraph g = build_graph(3, 2, dd, ww, dw);

  // self-loop dropped, duplicate keeps the first weight, endpoints ordered
  ASSERT_EQ(g.edge_count(EdgeType::DD), 2u);
  EXPECT_EQ(g.edges(EdgeType::DD)[0], dd_edge(0, 1));
  EXPECT_EQ(g.edges(EdgeType::DD)[1], dd_edge(1, 2));
  EXPECT_DOUBLE_EQ(g.edges(EdgeType::DD)[1].weight, 1.0);

  ASSERT_EQ(g.edge_count(EdgeType::WW), 1u);
  EXPECT_EQ(g.edges(EdgeType::WW)[0], ww_edge(0, 1));

  ASSERT_EQ(g.edge_count(EdgeType::DW), 1u);
  EXPECT_EQ(g.edges(EdgeType::DW)[0].src, doc_node(2));
  EXPECT_EQ(g.edges(EdgeType::DW)[0].dst, word_node(0));
  EXPECT_DOUBLE_EQ(g.edges(EdgeType::DW)[0].weight, 3.0);
}

TEST(BuildGraph, RejectsWrongKindsAndRanges) {
  const std::vector<Edge> bad_kind = {{doc_node(0), word_node(0), 1.0}};
  EXPECT_THROW(build_graph(2, 2, bad_kind, {}, {}), std::invalid_argument);

  const std::vector<Edge> bad_range = {dd_edge(0, 5)};
  EXPECT_THROW(build_graph(2, 2, bad_range, {}, {}), std::out_of_range);

  const std::vector<Edge> bad_word = {dw_edge(0, 2)};
  EXPECT_THROW(build_graph(2, 2, {}, {}, bad_word), std::out_of_range);
}

TEST(BuildGraph, EmptyGraphIsFine) {
  const BiTypedGraph g = build_graph(0, 0, {}, {}, {});
  EXPECT_EQ(g.joint_count(), 0u);
  EXPECT_EQ(g.edge_count(EdgeType::DD), 0u);
}

TEST(EdgeTypeName, Names) {
  EXPECT_STREQ(edge_type_name(EdgeType::DD), "dd");
  EXPECT_STREQ(edge_type_name(EdgeType::WW), "ww");
  EXPECT_STREQ(edge_type_name(EdgeType::DW), "dw");
}

TEST(JointIndex, DocsThenWords) {
  EXPECT_EQ(joint_index(doc_node(3), 10), 3u);
  EXPECT_EQ(joint_index(word_node(3), 10), 13u);
}

// Path over three documents: degrees with self-loops are 2, 3, 2.
TEST(Normalize, HandComputedPath) {
  const std::vector<Edge> dd = {dd_edge(0, 1), dd_edge(1, 2)};
  const BiTypedGraph g = build_graph(3, 0, dd, {}, {});
  const Matrix a = oracle::to_dense(normalize(g, EdgeType::DD).matrix);

  const double s6 = 1.0 / std::sqrt(6.0);
  EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 1), s6, 1e-15);
  EXPECT_NEAR(a(1, 0), s6, 1e-15);
  EXPECT_NEAR(a(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a(1, 2), s6, 1e-15);
  EXPECT_NEAR(a(2, 2), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 2), 0.0, 1e-15);
}

TEST(Normalize, ZeroNodeSpaceThrows) {
  const BiTypedGraph g = build_graph(2, 0, {}, {}, {});
  EXPECT_THROW(normalize(g, EdgeType::WW), std::invalid_argument);
}

TEST(Normalize, RowSumsMatchHandValues) {
  // on a k-regular graph every row of D̃^{-1/2}(A+I)D̃^{-1/2} sums to exactly 1
  const std::vector<Edge> cyc = {dd_edge(0, 1), dd_edge(1, 2), dd_edge(2, 3), dd_edge(3, 0)};
  const BiTypedGraph g1 = build_graph(4, 0, cyc, {}, {});
  const Matrix a1 = oracle::to_dense(normalize(g1, EdgeType::DD).matrix);
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) sum += a1(i, j);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }

  // on a star the hub row exceeds 1 while leaf rows stay below it:
  // hub 1/4 + 3/(2√2), leaves 1/2 + 1/(2√2)
  const std::vector<Edge> star = {dd_edge(0, 1), dd_edge(0, 2), dd_edge(0, 3)};
  const BiTypedGraph g2 = build_graph(4, 0, star, {}, {});
  const Matrix a2 = oracle::to_dense(normalize(g2, EdgeType::DD).matrix);
  double hub = 0.0, leaf = 0.0;
  for (std::size_t j = 0; j < 4; ++j) hub += a2(0, j);
  for (std::size_t j = 0; j < 4; ++j) leaf += a2(1, j);
  EXPECT_NEAR(hub, 0.25 + 3.0 / (2.0 * std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(leaf, 0.5 + 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
}

std::vector<std::tuple<std::size_t, std::size_t, double>> as_triples(
    std::span<const Edge> edges, std::size_t doc_offset, std::size_t word_offset) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> out;
  for (const Edge& e : edges) {
    auto place = [&](NodeId id) {
      return id.kind == NodeKind::Document ? doc_offset + id.index : word_offset + id.index;
    };
    out.emplace_back(place(e.src), place(e.dst), e.weight);
  }
  return out;
}

BiTypedGraph random_graph(std::mt19937& rng) {
  std::uniform_int_distribution<std::size_t> nd(1, 12), nw(1, 8);
  std::uniform_real_distribution<double> wdist(0.25, 4.0);
  const std::size_t docs = nd(rng), words = nw(rng);
  std::uniform_int_distribution<std::size_t> pd(0, docs - 1), pw(0, words - 1);
  std::vector<Edge> dd, ww, dw;
  for (std::size_t k = 0; k < 2 * docs; ++k) {
    const std::size_t a = pd(rng), b = pd(rng);
    if (a != b) dd.push_back(dd_edge(a, b, wdist(rng)));
  }
  for (std::size_t k = 0; k < 2 * words; ++k) {
    const std::size_t a = pw(rng), b = pw(rng);
    if (a != b) ww.push_back(ww_edge(a, b, wdist(rng)));
  }
  for (std::size_t k = 0; k < docs + words; ++k) dw.push_back(dw_edge(pd(rng), pw(rng), wdist(rng)));
  return build_graph(docs, words, dd, ww, dw);
}

TEST(Normalize, MatchesDenseReferenceOnRandomGraphs) {
  std::mt19937 rng(20240229);
  for (int trial = 0; trial < 20; ++trial) {
    const BiTypedGraph g = random_graph(rng);
    {
      const Matrix got = oracle::to_dense(normalize(g, EdgeType::DD).matrix);
      const Matrix want =
          oracle::dense_renormalized(g.doc_count(), as_triples(g.edges(EdgeType::DD), 0, 0));
      EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
    {
      const Matrix got = oracle::to_dense(normalize(g, EdgeType::WW).matrix);
      const Matrix want =
          oracle::dense_renormalized(g.word_count(), as_triples(g.edges(EdgeType::WW), 0, 0));
      EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
    {
      const Matrix got = oracle::to_dense(normalize(g, EdgeType::DW).matrix);
      const Matrix want = oracle::dense_renormalized(
          g.joint_count(), as_triples(g.edges(EdgeType::DW), 0, g.doc_count()));
      EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
  }
}

TEST(JointNormalized, UntouchedNodesPassThrough) {
  // word nodes are isolated in the DD sub-network: their joint rows must be
  // exactly a unit self-loop
  const std::vector<Edge> dd = {dd_edge(0, 1)};
  const BiTypedGraph g = build_graph(2, 3, dd, {}, {});
  const NormalizedAdjacency adj = joint_normalized(g, EdgeType::DD);
  ASSERT_EQ(adj.rows(), 5u);
  const Matrix a = oracle::to_dense(adj.matrix);
  for (std::size_t w = 2; w < 5; ++w) {
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_DOUBLE_EQ(a(w, j), w == j ? 1.0 : 0.0) << "row " << w << " col " << j;
  }
  // the document block matches the natural-space normalization
  const Matrix small = oracle::to_dense(normalize(g, EdgeType::DD).matrix);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a(i, j), small(i, j));
}

TEST(JointNormalized, MatchesDenseReferenceOnRandomGraphs) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const BiTypedGraph g = random_graph(rng);
    for (EdgeType t : kEdgeTypes) {
      const Matrix got = oracle::to_dense(joint_normalized(g, t).matrix);
      const Matrix want = oracle::dense_renormalized(
          g.joint_count(), as_triples(g.edges(t), 0, g.doc_count()));
      EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
  }
}

TEST(DegreeStats, HandCounts) {
  const std::vector<Edge> dd = {dd_edge(0, 1), dd_edge(0, 2)};
  const std::vector<Edge> dw = {dw_edge(0, 0), dw_edge(1, 0)};
  const BiTypedGraph g = build_graph(3, 2, dd, {}, dw);
  const auto stats = degree_stats(g);

  const DegreeStats& sdd = stats.at(EdgeType::DD);
  EXPECT_EQ(sdd.node_count, 3u);
  EXPECT_EQ(sdd.min_degree, 1u);
  EXPECT_EQ(sdd.max_degree, 2u);
  EXPECT_NEAR(sdd.mean_degree, 4.0 / 3.0, 1e-15);
  EXPECT_EQ(sdd.isolated, 0u);

  const DegreeStats& sww = stats.at(EdgeType::WW);
  EXPECT_EQ(sww.node_count, 2u);
  EXPECT_EQ(sww.isolated, 2u);

  const DegreeStats& sdw = stats.at(EdgeType::DW);
  EXPECT_EQ(sdw.node_count, 5u);
  EXPECT_EQ(sdw.max_degree, 2u);  // word 0 touches both docs
  EXPECT_EQ(sdw.isolated, 2u);    // doc 2 and word 1
}

TEST(Normalize, DeterministicAcrossBuilds) {
  std::mt19937 rng(99);
  const BiTypedGraph g1 = random_graph(rng);
  std::mt19937 rng2(99);
  const BiTypedGraph g2 = random_graph(rng2);
  ASSERT_TRUE(g1 == g2);
  const NormalizedAdjacency a1 = normalize(g1, EdgeType::DW);
  const NormalizedAdjacency a2 = normalize(g2, EdgeType::DW);
  EXPECT_EQ(a1.matrix.val, a2.matrix.val);
  EXPECT_EQ(a1.matrix.col, a2.matrix.col);
  EXPECT_EQ(a1.matrix.row_ptr, a2.matrix.row_ptr);
}

}  // namespace
