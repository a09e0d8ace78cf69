#include "bite/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace bite;

namespace {

class TempFile {
 public:
  explicit TempFile(const char* name)
      : path_(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() { std::filesystem::remove(path_); }
  const std::string& str() const {
    cached_ = path_.string();
    return cached_;
  }
  void fill(const std::string& content) const {
    std::ofstream out(path_, std::ios::binary);
    out << content;
  }

 private:
  std::filesystem::path path_;
  mutable std::string cached_;
};

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  const double cases[] = {0.0,       -0.0,   0.1,       1.0 / 3.0, 1e300,
                          -2.5e-308, 1e-17,  123456789.0, 5e-4,    1.0};
  for (double v : cases) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  for (int i = 0; i < 200; ++i) {
    const double v = d(rng);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v) << v;
  }
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(ParseErrorType, CarriesFileAndLine) {
  const ParseError e("some/file.tsv", 42, "boom");
  EXPECT_EQ(e.file(), "some/file.tsv");
  EXPECT_EQ(e.line(), 42u);
  EXPECT_STREQ(e.what(), "some/file.tsv:42: boom");
}

TEST(EdgeList, ParsesCommentsBlanksAndDefaults) {
  TempFile f("bite_io_edges.tsv");
  f.fill("# header comment\n\n0\t1\n2\t3\t2.5\n   \n4\t5\t-1\n");
  const std::vector<EdgeRow> rows = parse_edge_list(f.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].src, 0);
  EXPECT_EQ(rows[0].dst, 1);
  EXPECT_DOUBLE_EQ(rows[0].weight, 1.0);  // omitted weight defaults to 1
  EXPECT_DOUBLE_EQ(rows[1].weight, 2.5);
  EXPECT_DOUBLE_EQ(rows[2].weight, -1.0);
}

TEST(EdgeList, ErrorsNameFileAndLine) {
  TempFile f("bite_io_edges_bad.tsv");
  f.fill("0\t1\n0\tx\n");
  try {
    parse_edge_list(f.str());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }

  f.fill("0\n");
  EXPECT_THROW(parse_edge_list(f.str()), ParseError);
  f.fill("0\t1\t2\t3\n");
  EXPECT_THROW(parse_edge_list(f.str()), ParseError);
  EXPECT_THROW(parse_edge_list("/nonexistent/bite.tsv"), ParseError);
}

TEST(EdgeList, WriteParseRoundTrip) {
  TempFile f("bite_io_edges_rt.tsv");
  const std::vector<EdgeRow> rows = {{0, 1, 1.0}, {5, 2, 0.125}, {7, 7, 3.0}};
  write_edge_list(f.str(), rows);
  EXPECT_EQ(parse_edge_list(f.str()), rows);
}

TEST(Manifest, RoundTripAndValidation) {
  TempFile f("bite_io_manifest.tsv");
  const std::vector<ManifestRow> rows = {
      {0, "doc", "physics"}, {1, "doc", std::nullopt}, {2, "word", std::nullopt}};
  write_manifest(f.str(), rows);
  EXPECT_EQ(parse_manifest(f.str()), rows);

  f.fill("0\tdoc\n0\tword\n");
  EXPECT_THROW(parse_manifest(f.str()), ParseError);  // duplicate id
  f.fill("0\tpotato\n");
  EXPECT_THROW(parse_manifest(f.str()), ParseError);  // unknown kind
}

TEST(CorpusFile, KeepsTabsInsideText) {
  TempFile f("bite_io_corpus.tsv");
  f.fill("0\thello world\n1\ttabbed\tstays\n2\t\n");
  const std::vector<CorpusRow> rows = parse_corpus_file(f.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].text, "hello world");
  EXPECT_EQ(rows[1].text, "tabbed\tstays");
  EXPECT_EQ(rows[2].text, "");

  write_corpus_file(f.str(), rows);
  EXPECT_EQ(parse_corpus_file(f.str()), rows);
}

TEST(LabelFile, RoundTrip) {
  TempFile f("bite_io_labels.tsv");
  const std::vector<LabelRow> rows = {{0, "cs"}, {3, "math"}};
  write_label_file(f.str(), rows);
  EXPECT_EQ(parse_label_file(f.str()), rows);
  f.fill("0\n");
  EXPECT_THROW(parse_label_file(f.str()), ParseError);
}

TEST(EmbeddingFile, RoundTripIsExact) {
  TempFile f("bite_io_embed.tsv");
  const std::vector<EmbeddingRow> rows = {{0, {0.1, -0.0, 1e-17}}, {2, {1.0 / 3.0, 2.0, -5.5}}};
  write_embedding_file(f.str(), rows);
  const std::vector<EmbeddingRow> back = parse_embedding_file(f.str());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].id, rows[i].id);
    ASSERT_EQ(back[i].values.size(), rows[i].values.size());
    for (std::size_t j = 0; j < rows[i].values.size(); ++j)
      EXPECT_EQ(back[i].values[j], rows[i].values[j]);  // bitwise identical
  }
}

TEST(EmbeddingFile, Validation) {
  TempFile f("bite_io_embed_bad.tsv");
  f.fill("0\t1.0\t2.0\n1\t3.0\n");  // width changes
  EXPECT_THROW(parse_embedding_file(f.str()), ParseError);
  f.fill("0\t1.0\n0\t2.0\n");  // duplicate id
  EXPECT_THROW(parse_embedding_file(f.str()), ParseError);
  f.fill("0\tinf\n");
  EXPECT_THROW(parse_embedding_file(f.str()), ParseError);
  f.fill("0\n");
  EXPECT_THROW(parse_embedding_file(f.str()), ParseError);
}

TEST(VocabFile, RoundTripAndValidation) {
  TempFile f("bite_io_vocab.tsv");
  const std::vector<std::string> rows = {"data_mining", "graph", "text_mining"};
  write_vocab_file(f.str(), rows);
  EXPECT_EQ(parse_vocab_file(f.str()), rows);

  f.fill("data_mining\ndata_mining\n");
  EXPECT_THROW(parse_vocab_file(f.str()), ParseError);  // duplicate
  f.fill("two words\n");
  EXPECT_THROW(parse_vocab_file(f.str()), ParseError);  // embedded space
}

TEST(ResultsFile, RoundTrip) {
  TempFile f("bite_io_results.tsv");
  const std::vector<ResultRow> rows = {{"gcn", 0, 0.5, 0.25}, {"ra", 4, 0.875, 1.0 / 3.0}};
  write_results_tsv(f.str(), rows);
  EXPECT_EQ(parse_results_tsv(f.str()), rows);
}

TEST(SummaryFile, RoundTrip) {
  TempFile f("bite_io_summary.tsv");
  const std::vector<SummaryRow> rows = {{"b", 5, 0.8, 0.01, 0.75, 0.02}};
  write_summary_tsv(f.str(), rows);
  EXPECT_EQ(parse_summary_tsv(f.str()), rows);
}

TEST(ConfigFile, ParsesSectionsAndRejectsJunk) {
  TempFile f("bite_io_config.cfg");
  f.fill("# experiment settings\ntrain.lr = 0.05\nmodel.heads=2\n  refine.t_high =\t0.9\n");
  const auto cfg = parse_config_file(f.str());
  ASSERT_EQ(cfg.size(), 3u);
  EXPECT_EQ(cfg.at("train.lr"), "0.05");
  EXPECT_EQ(cfg.at("model.heads"), "2");
  EXPECT_EQ(cfg.at("refine.t_high"), "0.9");

  f.fill("nodot = 1\n");
  EXPECT_THROW(parse_config_file(f.str()), ParseError);  // key needs a section
  f.fill("train.lr = 1\ntrain.lr = 2\n");
  EXPECT_THROW(parse_config_file(f.str()), ParseError);  // duplicate key
  f.fill("just_a_key_no_value\n");
  EXPECT_THROW(parse_config_file(f.str()), ParseError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempFile f("bite_io_ckpt.bin");
  Matrix a(2, 3), b(1, 1);
  a(0, 0) = 0.1;
  a(0, 1) = -0.0;
  a(0, 2) = std::numeric_limits<double>::denorm_min();
  a(1, 0) = 1e300;
  a(1, 1) = -1.0 / 3.0;
  a(1, 2) = 42.0;
  b(0, 0) = 5e-324;
  const NamedMatrices entries = {{"layer0.w_dd", a}, {"w1", b}};
  write_checkpoint(f.str(), entries);
  const NamedMatrices back = read_checkpoint(f.str());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].first, "layer0.w_dd");
  ASSERT_TRUE(back[0].second.same_shape(a));
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(std::memcmp(&back[0].second.data()[i], &a.data()[i], sizeof(double)), 0);
  EXPECT_EQ(back[1].first, "w1");
  EXPECT_EQ(back[1].second(0, 0), 5e-324);
}

TEST(Checkpoint, RejectsCorruption) {
  TempFile f("bite_io_ckpt_bad.bin");
  f.fill("NOTMAGIC????????????????");
  EXPECT_THROW(read_checkpoint(f.str()), std::runtime_error);

  // truncated: valid magic+version but the payload is cut short
  Matrix a(4, 4);
  const NamedMatrices entries = {{"w0", a}};
  write_checkpoint(f.str(), entries);
  std::string bytes;
  {
    std::ifstream in(f.str(), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  f.fill(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_checkpoint(f.str()), std::runtime_error);
  EXPECT_THROW(read_checkpoint("/nonexistent/bite.ckpt"), std::runtime_error);
}

}  // namespace
