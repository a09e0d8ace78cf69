#include "bite/embed.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace bite;

namespace {

std::filesystem::path tmp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

Document doc(std::size_t id, std::vector<std::string> tokens) {
  return {doc_node(id), std::move(tokens)};
}

std::vector<Phrase> make_phrases(const std::vector<std::vector<std::string>>& words) {
  std::vector<Phrase> out;
  for (std::size_t k = 0; k < words.size(); ++k) out.push_back({word_node(k), words[k], 0});
  return out;
}

TEST(Cosine, HandValuesAndEdgeCases) {
  const std::vector<double> a = {1.0, 0.0}, b = {0.0, 2.0}, c = {3.0, 0.0}, z = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, z), 0.0);  // zero norm -> 0 by definition
  const std::vector<double> d = {-1.0, 0.0};
  EXPECT_DOUBLE_EQ(cosine(a, d), -1.0);
  const std::vector<double> short_v = {1.0};
  EXPECT_THROW(cosine(a, short_v), std::invalid_argument);
}

TEST(EmbeddingTable, MissingIdThrows) {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors[doc_node(0)] = {1.0, 0.0};
  EXPECT_NO_THROW(t.at(doc_node(0)));
  EXPECT_THROW(t.at(doc_node(1)), std::runtime_error);
  EXPECT_THROW(t.at(word_node(0)), std::runtime_error);
  EXPECT_TRUE(t.contains(doc_node(0)));
  EXPECT_FALSE(t.contains(word_node(0)));
}

TEST(LoadSaveEmbeddings, RoundTrip) {
  EmbeddingTable t;
  t.dim = 3;
  t.vectors[doc_node(0)] = {1.0, 0.5, -0.25};
  t.vectors[doc_node(1)] = {0.0, 1e-17, 2.0};
  t.vectors[word_node(0)] = {-1.0, 3.0, 0.125};

  const auto path = tmp_file("bite_embed_roundtrip.tsv");
  const std::vector<NodeId> ids = {doc_node(0), doc_node(1), word_node(0)};
  save_embeddings(path.string(), t, 2);
  const EmbeddingTable back = load_embeddings(path.string(), ids, 2);
  EXPECT_EQ(back.dim, 3u);
  ASSERT_EQ(back.vectors.size(), 3u);
  for (const auto& [id, vec] : t.vectors) EXPECT_EQ(back.at(id), vec);
  std::filesystem::remove(path);
}

TEST(LoadEmbeddings, MissingIdAndBadRows) {
  const auto path = tmp_file("bite_embed_bad.tsv");
  {
    std::ofstream out(path);
    out << "0\t1.0\t2.0\n";
  }
  const std::vector<NodeId> want_two = {doc_node(0), doc_node(1)};
  EXPECT_THROW(load_embeddings(path.string(), want_two, 2), std::runtime_error);

  {
    std::ofstream out(path);
    out << "0\t1.0\t2.0\n1\t3.0\n";  // inconsistent dimension
  }
  EXPECT_THROW(load_embeddings(path.string(), want_two, 2), std::runtime_error);

  {
    std::ofstream out(path);
    out << "0\t1.0\tnan\n";
  }
  const std::vector<NodeId> want_one = {doc_node(0)};
  EXPECT_THROW(load_embeddings(path.string(), want_one, 1), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Tfidf, HandComputedValues) {
  // doc0 segments to a,a,b; doc1 to a. idf(a)=log(1)=0, idf(b)=log(2).
  const std::vector<Document> corpus = {doc(0, {"a", "a", "b"}), doc(1, {"a"})};
  const auto phrases = make_phrases({{"a"}, {"b"}});
  const EmbeddingTable t = tfidf_doc_embeddings(corpus, phrases);
  EXPECT_EQ(t.dim, 2u);
  const std::vector<double>& r0 = t.at(doc_node(0));
  EXPECT_NEAR(r0[0], 0.0, 1e-15);
  EXPECT_NEAR(r0[1], 1.0, 1e-15);  // L2-normalized single nonzero
  const std::vector<double>& r1 = t.at(doc_node(1));
  EXPECT_DOUBLE_EQ(r1[0], 0.0);  // idf 0 wipes the only term
  EXPECT_DOUBLE_EQ(r1[1], 0.0);
}

TEST(Tfidf, EmptyVocabularyThrows) {
  const std::vector<Document> corpus = {doc(0, {"a"})};
  EXPECT_THROW(tfidf_doc_embeddings(corpus, {}), std::invalid_argument);
}

TEST(PpmiMatrix, HandComputedValues) {
  const std::vector<Document> corpus = {doc(0, {"a", "b"})};
  const auto phrases = make_phrases({{"a"}, {"b"}});
  const Matrix m = ppmi_matrix(corpus, phrases, 1);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  EXPECT_NEAR(m(0, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(m(1, 0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.0);
}

TEST(PpmiMatrix, WindowLimitsPairs) {
  const std::vector<Document> corpus = {doc(0, {"a", "b", "c"})};
  const auto phrases = make_phrases({{"a"}, {"b"}, {"c"}});
  const Matrix narrow = ppmi_matrix(corpus, phrases, 1);
  EXPECT_DOUBLE_EQ(narrow(0, 2), 0.0);  // distance 2 is outside window 1
  const Matrix wide = ppmi_matrix(corpus, phrases, 2);
  EXPECT_GT(wide(0, 2), 0.0);
  EXPECT_THROW(ppmi_matrix(corpus, phrases, 0), std::invalid_argument);
}

TEST(PpmiEmbeddings, InterchangeableWordsAlign) {
  // a and b occur in identical contexts, never together: their vectors match
  // up to sign conventions, so cosine is ±1; here rows are equal so it's 1.
  std::vector<Document> corpus;
  for (std::size_t i = 0; i < 6; ++i) {
    corpus.push_back(doc(2 * i, {"x", "a", "y"}));
    corpus.push_back(doc(2 * i + 1, {"x", "b", "y"}));
  }
  const auto phrases = make_phrases({{"a"}, {"b"}, {"x"}, {"y"}});
  const EmbeddingTable t = ppmi_word_embeddings(corpus, phrases, 2, 4);
  EXPECT_EQ(t.dim, 4u);
  EXPECT_NEAR(cosine(t.at(word_node(0)), t.at(word_node(1))), 1.0, 1e-9);
  // a vs x co-occur directly but with different contexts: strictly weaker
  EXPECT_LT(cosine(t.at(word_node(0)), t.at(word_node(2))), 0.999);
}

TEST(PpmiEmbeddings, GramMatrixMatchesAbsoluteSpectrum) {
  // E·Eᵀ must equal V·|Λ|·Vᵀ when every component is kept
  const std::vector<Document> corpus = {doc(0, {"a", "b", "c", "a", "c"}),
                                        doc(1, {"b", "c", "b", "a"})};
  const auto phrases = make_phrases({{"a"}, {"b"}, {"c"}});
  const Matrix m = ppmi_matrix(corpus, phrases, 2);
  const SymmetricEigen e = symmetric_eigen(m);
  Matrix want(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        want(i, j) += e.vectors(i, k) * std::abs(e.values[k]) * e.vectors(j, k);

  const EmbeddingTable t = ppmi_word_embeddings(corpus, phrases, 2, 3);
  Matrix got(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      got(i, j) = [&] {
        double dot = 0.0;
        const auto& vi = t.at(word_node(i));
        const auto& vj = t.at(word_node(j));
        for (std::size_t k = 0; k < vi.size(); ++k) dot += vi[k] * vj[k];
        return dot;
      }();
  EXPECT_LT(max_abs_diff(got, want), 1e-10);
}

TEST(PpmiEmbeddings, IsolatedWordGetsZeroVector) {
  // "z" never co-occurs: its PPMI row is zero so its vector must be zero
  const std::vector<Document> corpus = {doc(0, {"a", "b"}), doc(1, {"z"})};
  const auto phrases = make_phrases({{"a"}, {"b"}, {"z"}});
  const EmbeddingTable t = ppmi_word_embeddings(corpus, phrases, 1, 2);
  for (double v : t.at(word_node(2))) EXPECT_DOUBLE_EQ(v, 0.0);
  // and cosine against anything is 0 by the zero-norm rule
  EXPECT_DOUBLE_EQ(cosine(t.at(word_node(2)), t.at(word_node(0))), 0.0);
}

TEST(PpmiEmbeddings, Validation) {
  const std::vector<Document> corpus = {doc(0, {"a"})};
  const auto one = make_phrases({{"a"}});
  EXPECT_THROW(ppmi_word_embeddings(corpus, one, 1, 1), std::invalid_argument);
  const auto two = make_phrases({{"a"}, {"b"}});
  EXPECT_THROW(ppmi_word_embeddings(corpus, two, 1, 0), std::invalid_argument);
  EXPECT_THROW(ppmi_word_embeddings(corpus, two, 1, 3), std::invalid_argument);
}

TEST(PpmiEmbeddings, Deterministic) {
  const std::vector<Document> corpus = {doc(0, {"a", "b", "c", "a"}), doc(1, {"c", "b"})};
  const auto phrases = make_phrases({{"a"}, {"b"}, {"c"}});
  const EmbeddingTable t1 = ppmi_word_embeddings(corpus, phrases, 2, 2);
  const EmbeddingTable t2 = ppmi_word_embeddings(corpus, phrases, 2, 2);
  for (const auto& [id, vec] : t1.vectors) EXPECT_EQ(t2.at(id), vec);
}

}  // namespace
