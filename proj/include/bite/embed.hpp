#pragma once

// Embedding vectors for documents and phrases: ingested from files or
// computed by deterministic built-ins (TF-IDF for documents, PPMI plus a
// truncated eigendecomposition for phrases). Refinement only ever consumes
// an EmbeddingTable, so externally trained vectors drop in unchanged.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bite/corpus.hpp"
#include "bite/graph.hpp"
#include "bite/io.hpp"
#include "bite/linalg.hpp"

namespace bite {

struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<NodeId, std::vector<double>> vectors;

  bool contains(NodeId id) const { return vectors.contains(id); }

  const std::vector<double>& at(NodeId id) const {
    auto it = vectors.find(id);
    if (it == vectors.end())
      throw std::runtime_error("missing embedding for node " +
                               std::string(id.kind == NodeKind::Document ? "doc:" : "word:") +
                               std::to_string(id.index));
    return it->second;
  }
};

/// u·v / (‖u‖‖v‖); 0 when either norm is 0.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// ---- file ingestion --------------------------------------------------------
//
// File ids are global: documents keep their index, words are offset by
// n_docs. A words-only table round-trips with n_docs = 0.

inline EmbeddingTable load_embeddings(const std::string& path, std::span<const NodeId> expected,
                                      std::size_t n_docs) {
  const std::vector<EmbeddingRow> rows = parse_embedding_file(path);
  std::map<long, const EmbeddingRow*> by_id;
  for (const EmbeddingRow& r : rows) by_id.emplace(r.id, &r);

  EmbeddingTable table;
  table.dim = rows.empty() ? 0 : rows.front().values.size();
  for (NodeId id : expected) {
    const long file_id = static_cast<long>(joint_index(id, n_docs));
    auto it = by_id.find(file_id);
    if (it == by_id.end())
      throw std::runtime_error(path + ": missing embedding for expected id " +
                               std::to_string(file_id));
    table.vectors.emplace(id, it->second->values);
  }
  return table;
}

inline void save_embeddings(const std::string& path, const EmbeddingTable& table,
                            std::size_t n_docs) {
  std::vector<EmbeddingRow> rows;
  rows.reserve(table.vectors.size());
  for (const auto& [id, vec] : table.vectors)
    rows.push_back({static_cast<long>(joint_index(id, n_docs)), vec});
  std::sort(rows.begin(), rows.end(),
            [](const EmbeddingRow& a, const EmbeddingRow& b) { return a.id < b.id; });
  write_embedding_file(path, rows);
}

// ---- built-in document embeddings ------------------------------------------

/// TF-IDF rows over the phrase vocabulary: tf(d,w) · log(N/df(w)), then each
/// row L2-normalized. Term frequencies come from the same greedy segmentation
/// used everywhere else. All-zero rows stay zero.
inline EmbeddingTable tfidf_doc_embeddings(std::span<const Document> corpus,
                                           std::span<const Phrase> phrases) {
  if (phrases.empty())
    throw std::invalid_argument("tfidf_doc_embeddings: empty phrase vocabulary");
  const std::size_t p = phrases.size();
  const double n = static_cast<double>(corpus.size());
  PhraseMatcher matcher(phrases);

  std::vector<std::vector<double>> tf(corpus.size(), std::vector<double>(p, 0.0));
  std::vector<std::size_t> df(p, 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t k : matcher.segment(corpus[i].tokens)) tf[i][k] += 1.0;
    for (std::size_t k = 0; k < p; ++k)
      if (tf[i][k] > 0.0) ++df[k];
  }

  EmbeddingTable table;
  table.dim = p;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::vector<double> row(p, 0.0);
    double norm2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (tf[i][k] == 0.0) continue;
      row[k] = tf[i][k] * std::log(n / static_cast<double>(df[k]));
      norm2 += row[k] * row[k];
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : row) v *= inv;
    }
    table.vectors.emplace(corpus[i].doc_id, std::move(row));
  }
  return table;
}

// ---- built-in phrase embeddings --------------------------------------------

/// Window co-occurrence counts over greedy-segmented phrase sequences,
/// mapped to PPMI. Symmetric; kept separate from the embedding step so tests
/// can pin hand-computed values.
inline Matrix ppmi_matrix(std::span<const Document> corpus, std::span<const Phrase> phrases,
                          std::size_t window) {
  if (window < 1) throw std::invalid_argument("ppmi_matrix: window must be >= 1");
  const std::size_t p = phrases.size();
  PhraseMatcher matcher(phrases);

  Matrix counts(p, p);
  for (const Document& d : corpus) {
    const std::vector<std::size_t> seq = matcher.segment(d.tokens);
    for (std::size_t i = 0; i < seq.size(); ++i)
      for (std::size_t j = i + 1; j < seq.size() && j - i <= window; ++j) {
        counts(seq[i], seq[j]) += 1.0;
        counts(seq[j], seq[i]) += 1.0;
      }
  }

  std::vector<double> row_sum(p, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      row_sum[i] += counts(i, j);
      total += counts(i, j);
    }

  Matrix ppmi(p, p);
  if (total == 0.0) return ppmi;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      if (counts(i, j) == 0.0) continue;
      const double pmi = std::log(counts(i, j) * total / (row_sum[i] * row_sum[j]));
      if (pmi > 0.0) ppmi(i, j) = pmi;
    }
  return ppmi;
}

/// Phrase vectors: eigendecompose the symmetric PPMI matrix, keep the dim
/// components of largest |eigenvalue|, column k = eigvec_k · √|λ_k|.
/// Components with negligible |λ| are skipped, so a phrase with an all-zero
/// PPMI row gets an all-zero vector. Deterministic: the eigensolver signs
/// each vector so its largest-magnitude entry is positive.
inline EmbeddingTable ppmi_word_embeddings(std::span<const Document> corpus,
                                           std::span<const Phrase> phrases, std::size_t window,
                                           std::size_t dim) {
  const std::size_t p = phrases.size();
  if (p < 2) throw std::invalid_argument("ppmi_word_embeddings: vocabulary smaller than 2");
  if (dim < 1 || dim > p)
    throw std::invalid_argument("ppmi_word_embeddings: dim must be in [1, vocabulary size]");

  const Matrix ppmi = ppmi_matrix(corpus, phrases, window);
  SymmetricEigen eig = symmetric_eigen(ppmi);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(eig.values[a]) > std::abs(eig.values[b]);
  });

  const double tiny = 1e-12 * std::max(1.0, frobenius_norm(ppmi));
  Matrix emb(p, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double lambda = eig.values[order[k]];
    if (std::abs(lambda) <= tiny) continue;  // leave the column zero
    const double scale = std::sqrt(std::abs(lambda));
    for (std::size_t i = 0; i < p; ++i) emb(i, k) = scale * eig.vectors(i, order[k]);
  }

  EmbeddingTable table;
  table.dim = dim;
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<double> row(dim);
    for (std::size_t k = 0; k < dim; ++k) row[k] = emb(i, k);
    table.vectors.emplace(phrases[i].phrase_id, std::move(row));
  }
  return table;
}

}  // namespace bite
