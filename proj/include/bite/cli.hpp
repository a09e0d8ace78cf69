#pragma once

// Command-line driver: prepare / refine / train / eval / ablation over a
// bundle directory of TSV artifacts. Every command is deterministic given
// (inputs, config, seed) — re-running overwrites outputs with identical
// bytes. Settings resolve as: built-in default < config file < explicit
// flag. The bundle root falls back to $BITE_DATA_DIR when --bundle is
// omitted.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bite/corpus.hpp"
#include "bite/embed.hpp"
#include "bite/graph.hpp"
#include "bite/io.hpp"
#include "bite/model.hpp"
#include "bite/refine.hpp"
#include "bite/train.hpp"

namespace bite {

// ---- bundle layout ----------------------------------------------------------
//
// manifest.tsv   id<TAB>kind[<TAB>label]; docs 0..D-1 first, then words D..D+W-1
// edges_dd.tsv, edges_ww.tsv, edges_dw.tsv   global-id edge lists
// vocab.tsv      phrase names; line k is word node D+k
// tokens.tsv     doc_id<TAB>space-joined tokens (post-tokenization corpus)
// features.tsv   doc_id<TAB>feature row (word-node features are one-hot,
//                reconstructed on load)
// edges_dd.refined.tsv / edges_ww.refined.tsv / refine_report.tsv   (refine)

namespace detail {

inline std::filesystem::path bundle_file(const std::filesystem::path& dir, const char* name) {
  return dir / name;
}

inline std::vector<Edge> edges_from_rows(std::span<const EdgeRow> rows, EdgeType type,
                                         std::size_t n_docs, std::size_t n_words,
                                         const std::string& file) {
  const long docs = static_cast<long>(n_docs);
  const long total = static_cast<long>(n_docs + n_words);
  auto classify = [&](long id) {
    if (id < 0 || id >= total)
      throw std::runtime_error(file + ": node id " + std::to_string(id) + " out of range");
    return id < docs ? NodeKind::Document : NodeKind::Word;
  };
  std::vector<Edge> edges;
  edges.reserve(rows.size());
  for (const EdgeRow& r : rows) {
    const NodeKind ks = classify(r.src), kd = classify(r.dst);
    auto as_node = [&](long id, NodeKind k) {
      return k == NodeKind::Document ? doc_node(static_cast<std::size_t>(id))
                                     : word_node(static_cast<std::size_t>(id - docs));
    };
    Edge e{as_node(r.src, ks), as_node(r.dst, kd), r.weight};
    const bool ok = (type == EdgeType::DD && ks == NodeKind::Document && kd == NodeKind::Document) ||
                    (type == EdgeType::WW && ks == NodeKind::Word && kd == NodeKind::Word) ||
                    (type == EdgeType::DW && ks != kd);
    if (!ok)
      throw std::runtime_error(file + ": edge " + std::to_string(r.src) + "-" +
                               std::to_string(r.dst) + " has wrong node kinds for type " +
                               edge_type_name(type));
    edges.push_back(e);
  }
  return edges;
}

inline std::vector<EdgeRow> rows_from_edges(std::span<const Edge> edges, std::size_t n_docs) {
  std::vector<EdgeRow> rows;
  rows.reserve(edges.size());
  for (const Edge& e : edges)
    rows.push_back({static_cast<long>(joint_index(e.src, n_docs)),
                    static_cast<long>(joint_index(e.dst, n_docs)), e.weight});
  return rows;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

// ---- bundle -----------------------------------------------------------------

struct Bundle {
  std::filesystem::path dir;
  std::size_t n_docs = 0;
  std::size_t n_words = 0;
  std::vector<Document> docs;
  std::vector<Phrase> phrases;
  BiTypedGraph graph{0, 0};
  BiTypedGraph refined{0, 0};
  bool has_refined = false;  // refined edge files were present
  Matrix features;           // joint (docs then words) × vocabulary
  std::vector<int> labels;   // per doc; −1 = unlabeled
  std::vector<std::string> label_names;
};

inline Bundle load_bundle(const std::string& dir_in) {
  namespace fs = std::filesystem;
  Bundle b;
  b.dir = fs::path(dir_in);
  const auto need = [&](const char* name) {
    fs::path p = detail::bundle_file(b.dir, name);
    if (!fs::exists(p)) throw std::runtime_error("bundle is missing " + p.string());
    return p.string();
  };

  // Manifest fixes the node space: docs first, then words, both dense.
  const std::vector<ManifestRow> manifest = parse_manifest(need("manifest.tsv"));
  for (const ManifestRow& r : manifest) {
    if (r.kind == "doc") {
      if (static_cast<std::size_t>(r.id) != b.n_docs || b.n_words > 0)
        throw std::runtime_error("manifest.tsv: doc ids must be dense and precede words");
      ++b.n_docs;
      if (r.label) {
        b.labels.push_back(0);  // resolved below
        b.label_names.push_back(*r.label);
      } else {
        b.labels.push_back(-1);
      }
    } else {
      if (static_cast<std::size_t>(r.id) != b.n_docs + b.n_words)
        throw std::runtime_error("manifest.tsv: word ids must be dense after docs");
      ++b.n_words;
    }
  }
  {  // label strings -> class indices, sorted for a stable mapping
    std::set<std::string> uniq(b.label_names.begin(), b.label_names.end());
    b.label_names.assign(uniq.begin(), uniq.end());
    std::size_t li = 0;
    for (const ManifestRow& r : manifest)
      if (r.kind == "doc") {
        if (r.label)
          b.labels[li] = static_cast<int>(
              std::distance(b.label_names.begin(),
                            std::find(b.label_names.begin(), b.label_names.end(), *r.label)));
        ++li;
      }
  }

  // Vocabulary and tokenized corpus.
  const std::vector<std::string> vocab = parse_vocab_file(need("vocab.tsv"));
  if (vocab.size() != b.n_words)
    throw std::runtime_error("vocab.tsv: " + std::to_string(vocab.size()) +
                             " phrases but manifest has " + std::to_string(b.n_words) +
                             " word nodes");
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    Phrase p;
    p.phrase_id = word_node(k);
    std::size_t start = 0;
    for (std::size_t us = vocab[k].find('_'); us != std::string::npos;
         us = vocab[k].find('_', start)) {
      p.words.push_back(vocab[k].substr(start, us - start));
      start = us + 1;
    }
    p.words.push_back(vocab[k].substr(start));
    b.phrases.push_back(std::move(p));
  }

  const std::vector<CorpusRow> tokens = parse_corpus_file(need("tokens.tsv"));
  if (tokens.size() != b.n_docs) throw std::runtime_error("tokens.tsv: wrong document count");
  b.docs.resize(b.n_docs);
  for (const CorpusRow& r : tokens) {
    if (r.doc_id < 0 || static_cast<std::size_t>(r.doc_id) >= b.n_docs)
      throw std::runtime_error("tokens.tsv: doc id out of range");
    Document& d = b.docs[static_cast<std::size_t>(r.doc_id)];
    d.doc_id = doc_node(static_cast<std::size_t>(r.doc_id));
    std::istringstream in(r.text);
    std::string tok;
    while (in >> tok) d.tokens.push_back(tok);
  }

  // Features: stored document rows plus reconstructed one-hot word rows.
  const std::vector<EmbeddingRow> feat = parse_embedding_file(need("features.tsv"));
  if (feat.size() != b.n_docs) throw std::runtime_error("features.tsv: wrong document count");
  const std::size_t p = b.n_words;
  if (!feat.empty() && feat.front().values.size() != p)
    throw std::runtime_error("features.tsv: feature width must equal vocabulary size");
  b.features = Matrix(b.n_docs + p, p);
  for (const EmbeddingRow& r : feat) {
    if (r.id < 0 || static_cast<std::size_t>(r.id) >= b.n_docs)
      throw std::runtime_error("features.tsv: doc id out of range");
    for (std::size_t j = 0; j < p; ++j)
      b.features(static_cast<std::size_t>(r.id), j) = r.values[j];
  }
  for (std::size_t k = 0; k < p; ++k) b.features(b.n_docs + k, k) = 1.0;

  // Edges.
  auto load_edges = [&](const char* name, EdgeType t) {
    const std::string path = need(name);
    return detail::edges_from_rows(parse_edge_list(path), t, b.n_docs, b.n_words, path);
  };
  const std::vector<Edge> dd = load_edges("edges_dd.tsv", EdgeType::DD);
  const std::vector<Edge> ww = load_edges("edges_ww.tsv", EdgeType::WW);
  const std::vector<Edge> dw = load_edges("edges_dw.tsv", EdgeType::DW);
  b.graph = build_graph(b.n_docs, b.n_words, dd, ww, dw);

  namespace dt = detail;
  const bool rdd = fs::exists(dt::bundle_file(b.dir, "edges_dd.refined.tsv"));
  const bool rww = fs::exists(dt::bundle_file(b.dir, "edges_ww.refined.tsv"));
  if (rdd || rww) {
    const std::vector<Edge> rd =
        rdd ? load_edges("edges_dd.refined.tsv", EdgeType::DD) : dd;
    const std::vector<Edge> rw =
        rww ? load_edges("edges_ww.refined.tsv", EdgeType::WW) : ww;
    b.refined = build_graph(b.n_docs, b.n_words, rd, rw, dw);
    b.has_refined = true;
  } else {
    b.refined = b.graph;
  }
  return b;
}

/// Built-in refinement fallback used when a variant needs the refined graph
/// but no refined edge files exist: default thresholds, TF-IDF document
/// embeddings and PPMI phrase embeddings. Deterministic.
inline void ensure_refined(Bundle& b) {
  if (b.has_refined) return;
  RefineConfig cfg;  // defaults: 0.95 / 0.5, unbounded cap
  const EmbeddingTable doc_table = tfidf_doc_embeddings(b.docs, b.phrases);
  std::vector<Edge> dd = refine_edges(b.graph.edges(EdgeType::DD), doc_table, cfg);
  std::vector<Edge> ww(b.graph.edges(EdgeType::WW).begin(), b.graph.edges(EdgeType::WW).end());
  if (b.phrases.size() >= 2) {
    const std::size_t dim = std::min<std::size_t>(64, b.phrases.size());
    const EmbeddingTable word_table = ppmi_word_embeddings(b.docs, b.phrases, 5, dim);
    ww = refine_edges(ww, word_table, cfg);
  }
  b.refined = build_graph(b.n_docs, b.n_words, dd, ww,
                          std::span<const Edge>(b.graph.edges(EdgeType::DW)));
  b.has_refined = true;
}

// ---- settings: default < config file < flag ---------------------------------

class Settings {
 public:
  Settings() = default;

  void load_config(const std::string& path) {
    static const std::set<std::string> known = {
        "prepare.max_n",    "prepare.min_freq",  "refine.edge_type", "refine.t_high",
        "refine.t_low",     "refine.cap",        "refine.window",    "refine.dim",
        "model.hidden_dim", "model.heads",       "model.dropout",    "train.lr",
        "train.epochs",     "train.patience",    "train.weight_decay", "train.seed",
        "ablation.variants", "ablation.seeds"};
    for (auto& [key, value] : parse_config_file(path)) {
      if (!known.contains(key))
        throw std::runtime_error(path + ": invalid config key '" + key + "'");
      values_[key] = value;
    }
  }

  template <class T>
  T get(unsigned flag_count, T flag_value, const std::string& key, T fallback) const {
    if (flag_count > 0) return flag_value;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_as<T>(it->second, key);
  }

 private:
  template <class T>
  static T parse_as(const std::string& s, const std::string& key) {
    std::istringstream in(s);
    T v;
    if constexpr (std::is_same_v<T, std::string>) {
      v = s;
    } else {
      in >> v;
      if (in.fail() || !in.eof())
        throw std::runtime_error("config value for '" + key + "' is malformed: '" + s + "'");
    }
    return v;
  }

  std::map<std::string, std::string> values_;
};

inline std::string resolve_bundle_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BITE_DATA_DIR"); env && *env) return env;
  throw std::runtime_error("no bundle directory: pass --bundle or set BITE_DATA_DIR");
}

// ---- prepare -----------------------------------------------------------------

struct PrepareArgs {
  std::string corpus_path;
  std::string citations_path;
  std::string labels_path;     // optional
  std::string vocab_path;      // optional: overrides mining
  std::string stopwords_path;  // optional
  std::string out_dir;
  std::size_t max_n = 3;
  std::size_t min_freq = 2;
};

inline int cmd_prepare(const PrepareArgs& args) {
  namespace fs = std::filesystem;

  std::vector<CorpusRow> raw = parse_corpus_file(args.corpus_path);
  std::sort(raw.begin(), raw.end(),
            [](const CorpusRow& a, const CorpusRow& b) { return a.doc_id < b.doc_id; });
  std::map<long, std::size_t> dense;  // original id -> dense index
  for (std::size_t i = 0; i < raw.size(); ++i) dense.emplace(raw[i].doc_id, i);

  std::set<std::string> stopwords = default_stopwords();
  if (!args.stopwords_path.empty()) {
    stopwords.clear();
    detail::for_each_data_line(args.stopwords_path,
                               [&](std::string_view line, std::size_t) {
                                 stopwords.insert(std::string(line));
                               });
  }

  std::vector<Document> docs;
  for (std::size_t i = 0; i < raw.size(); ++i)
    docs.push_back({doc_node(i), tokenize(raw[i].text, stopwords)});

  std::vector<Phrase> phrases;
  if (!args.vocab_path.empty()) {
    // Fixed vocabulary: frequencies come from re-segmenting this corpus.
    const std::vector<std::string> names = parse_vocab_file(args.vocab_path);
    for (std::size_t k = 0; k < names.size(); ++k) {
      Phrase p;
      p.phrase_id = word_node(k);
      std::size_t start = 0;
      for (std::size_t us = names[k].find('_'); us != std::string::npos;
           us = names[k].find('_', start)) {
        p.words.push_back(names[k].substr(start, us - start));
        start = us + 1;
      }
      p.words.push_back(names[k].substr(start));
      phrases.push_back(std::move(p));
    }
    PhraseMatcher m(phrases);
    for (const Document& d : docs)
      for (std::size_t k : m.segment(d.tokens)) ++phrases[k].frequency;
  } else {
    phrases = mine_phrases(docs, args.max_n, args.min_freq);
  }

  const std::size_t n_docs = docs.size();
  const std::size_t n_words = phrases.size();

  // Citations reference original corpus ids; remap to dense indices.
  std::vector<Edge> dd;
  for (const EdgeRow& r : parse_edge_list(args.citations_path)) {
    auto si = dense.find(r.src);
    auto di = dense.find(r.dst);
    if (si == dense.end() || di == dense.end())
      throw std::runtime_error(args.citations_path + ": edge references unknown doc id " +
                               std::to_string(si == dense.end() ? r.src : r.dst));
    dd.push_back(dd_edge(si->second, di->second, r.weight));
  }
  const std::vector<Edge> ww = build_word_network(phrases);
  const std::vector<Edge> dw = build_inclusion_edges(docs, phrases);
  const BiTypedGraph graph = build_graph(n_docs, n_words, dd, ww, dw);
  const Matrix features = bag_of_words_features(docs, phrases);

  // Labels, keyed by original corpus id.
  std::map<std::size_t, std::string> label_of;
  if (!args.labels_path.empty()) {
    for (const LabelRow& r : parse_label_file(args.labels_path)) {
      auto it = dense.find(r.doc_id);
      if (it == dense.end())
        throw std::runtime_error(args.labels_path + ": label references unknown doc id " +
                                 std::to_string(r.doc_id));
      label_of[it->second] = r.label;
    }
  }

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  std::vector<ManifestRow> manifest;
  for (std::size_t i = 0; i < n_docs; ++i) {
    ManifestRow r{static_cast<long>(i), "doc", std::nullopt};
    if (auto it = label_of.find(i); it != label_of.end()) r.label = it->second;
    manifest.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < n_words; ++k)
    manifest.push_back({static_cast<long>(n_docs + k), "word", std::nullopt});
  write_manifest((out / "manifest.tsv").string(), manifest);

  for (EdgeType t : kEdgeTypes) {
    const std::string name = std::string("edges_") + edge_type_name(t) + ".tsv";
    write_edge_list((out / name).string(),
                    detail::rows_from_edges(graph.edges(t), n_docs));
  }

  std::vector<std::string> names;
  for (const Phrase& p : phrases) names.push_back(p.name());
  write_vocab_file((out / "vocab.tsv").string(), names);

  std::vector<CorpusRow> token_rows;
  for (std::size_t i = 0; i < n_docs; ++i) {
    std::string joined;
    for (std::size_t k = 0; k < docs[i].tokens.size(); ++k) {
      if (k) joined += ' ';
      joined += docs[i].tokens[k];
    }
    token_rows.push_back({static_cast<long>(i), std::move(joined)});
  }
  write_corpus_file((out / "tokens.tsv").string(), token_rows);

  std::vector<EmbeddingRow> feat_rows;
  for (std::size_t i = 0; i < n_docs; ++i) {
    EmbeddingRow r;
    r.id = static_cast<long>(i);
    r.values.assign(features.row(i), features.row(i) + features.cols());
    feat_rows.push_back(std::move(r));
  }
  write_embedding_file((out / "features.tsv").string(), feat_rows);

  std::cout << "prepared bundle at " << out.string() << ": " << n_docs << " docs, " << n_words
            << " words, " << graph.edge_count(EdgeType::DD) << " dd / "
            << graph.edge_count(EdgeType::WW) << " ww / " << graph.edge_count(EdgeType::DW)
            << " dw edges\n";
  return 0;
}

// ---- refine ------------------------------------------------------------------

struct RefineArgs {
  std::string bundle;
  std::string edge_type = "both";  // dd | ww | both
  std::string embeddings_path;     // optional external table (single type only)
  RefineConfig cfg;
  std::size_t window = 5;  // built-in PPMI options
  std::size_t dim = 0;     // 0 = min(64, vocabulary)
};

inline int cmd_refine(const RefineArgs& args) {
  if (args.edge_type != "dd" && args.edge_type != "ww" && args.edge_type != "both")
    throw std::runtime_error("refine: --edge-type must be dd, ww, or both");
  if (!args.embeddings_path.empty() && args.edge_type == "both")
    throw std::runtime_error("refine: --embeddings requires a single --edge-type");

  Bundle b = load_bundle(args.bundle);
  std::ofstream report =
      detail::create_text((b.dir / "refine_report.tsv").string());
  report << "# edge_type\tbefore\tafter\tadded\tremoved\tretained\n";

  auto run_one = [&](EdgeType t) {
    std::span<const Edge> before = b.graph.edges(t);
    EmbeddingTable table;
    if (!args.embeddings_path.empty()) {
      std::vector<NodeId> expected;
      if (t == EdgeType::DD)
        for (std::size_t i = 0; i < b.n_docs; ++i) expected.push_back(doc_node(i));
      else
        for (std::size_t k = 0; k < b.n_words; ++k) expected.push_back(word_node(k));
      table = load_embeddings(args.embeddings_path, expected, b.n_docs);
    } else if (t == EdgeType::DD) {
      table = tfidf_doc_embeddings(b.docs, b.phrases);
    } else {
      if (b.phrases.size() < 2)
        throw std::runtime_error("refine: built-in ww refinement needs >= 2 phrases");
      const std::size_t dim =
          args.dim > 0 ? args.dim : std::min<std::size_t>(64, b.phrases.size());
      table = ppmi_word_embeddings(b.docs, b.phrases, args.window, dim);
    }
    const std::vector<Edge> after = refine_edges(before, table, args.cfg);
    const RefineReport rep = refine_report(before, after);
    const std::string name = std::string("edges_") + edge_type_name(t) + ".refined.tsv";
    write_edge_list((b.dir / name).string(), detail::rows_from_edges(after, b.n_docs));
    report << edge_type_name(t) << '\t' << before.size() << '\t' << after.size() << '\t'
           << rep.added << '\t' << rep.removed << '\t' << rep.retained << '\n';
    std::cout << "refined " << edge_type_name(t) << ": " << before.size() << " -> "
              << after.size() << " edges (+" << rep.added << " / -" << rep.removed << ")\n";
  };

  if (args.edge_type == "dd" || args.edge_type == "both") run_one(EdgeType::DD);
  if (args.edge_type == "ww" || args.edge_type == "both") run_one(EdgeType::WW);
  return 0;
}

// ---- train / eval / ablation ---------------------------------------------------

inline bool variant_uses_attention(const std::string& v) { return v == "a" || v == "ra"; }
inline bool variant_uses_refined(const std::string& v) { return v == "r" || v == "ra"; }

namespace detail {

inline Matrix doc_rows(const Matrix& joint, std::size_t n_docs) {
  Matrix x(n_docs, joint.cols());
  for (std::size_t i = 0; i < n_docs; ++i)
    for (std::size_t j = 0; j < joint.cols(); ++j) x(i, j) = joint(i, j);
  return x;
}

inline std::string run_tag(const std::string& variant, unsigned long seed) {
  return variant + "_s" + std::to_string(seed);
}

}  // namespace detail

struct TrainArgs {
  std::string bundle;
  std::string out_dir;  // defaults to the bundle directory
  std::string variant = "b";
  ModelConfig model;   // out_dim filled from the bundle
  TrainConfig train;
};

inline int cmd_train(const TrainArgs& args) {
  namespace fs = std::filesystem;
  if (std::find(known_variants().begin(), known_variants().end(), args.variant) ==
      known_variants().end())
    throw std::runtime_error("train: unknown variant '" + args.variant + "'");

  Bundle b = load_bundle(args.bundle);
  if (b.label_names.empty()) throw std::runtime_error("train: bundle has no labeled documents");
  const fs::path out = args.out_dir.empty() ? b.dir : fs::path(args.out_dir);
  fs::create_directories(out);

  ModelConfig cfg = args.model;
  cfg.out_dim = b.label_names.size();
  const Split split = make_split(b.labels, args.train.seed);

  ResultRow row;
  row.variant = args.variant;
  row.seed = args.train.seed;
  NamedMatrices ckpt;
  std::vector<EpochStats> history;

  if (args.variant == "gcn") {
    const NormalizedAdjacency adj = normalize(b.graph, EdgeType::DD);
    const Matrix x_docs = detail::doc_rows(b.features, b.n_docs);
    auto r = train_gcn(cfg.hidden_dim, cfg.out_dim, cfg.dropout, adj, x_docs, b.labels, split,
                       args.train);
    row.val_acc = r.best_val_acc;
    row.test_acc = evaluate_gcn(adj, x_docs, r.params, b.labels, split.test_ids);
    ckpt = named_matrices(r.params);
    history = std::move(r.history);
  } else {
    cfg.agg = variant_uses_attention(args.variant) ? AggMode::Attention : AggMode::Mean;
    if (variant_uses_refined(args.variant)) ensure_refined(b);
    const BiteAdjacency adjs =
        BiteAdjacency::build(variant_uses_refined(args.variant) ? b.refined : b.graph);
    auto r = train_bite(cfg, adjs, b.features, b.labels, split, args.train);
    row.val_acc = r.best_val_acc;
    row.test_acc = evaluate_bite(cfg, adjs, b.features, r.params, b.labels, split.test_ids);
    ckpt = named_matrices(r.params);
    history = std::move(r.history);
  }

  const std::string tag = detail::run_tag(args.variant, args.train.seed);
  write_checkpoint((out / ("model_" + tag + ".ckpt")).string(), ckpt);
  write_history_tsv((out / ("history_" + tag + ".tsv")).string(), history);
  const ResultRow rows[] = {row};
  write_results_tsv((out / ("results_" + tag + ".tsv")).string(), rows);
  std::cout << "variant=" << row.variant << " seed=" << row.seed
            << " val_acc=" << format_double(row.val_acc)
            << " test_acc=" << format_double(row.test_acc) << '\n';
  return 0;
}

struct EvalArgs {
  std::string bundle;
  std::string checkpoint;
  std::string out_dir;  // defaults to the bundle directory
  std::string variant = "b";
  std::string split = "test";  // train | val | test
  unsigned long seed = 0;      // must match the training run's seed
  ModelConfig model;
};

inline int cmd_eval(const EvalArgs& args) {
  namespace fs = std::filesystem;
  if (std::find(known_variants().begin(), known_variants().end(), args.variant) ==
      known_variants().end())
    throw std::runtime_error("eval: unknown variant '" + args.variant + "'");
  if (args.split != "train" && args.split != "val" && args.split != "test")
    throw std::runtime_error("eval: --split must be train, val, or test");

  Bundle b = load_bundle(args.bundle);
  if (b.label_names.empty()) throw std::runtime_error("eval: bundle has no labeled documents");
  const fs::path out = args.out_dir.empty() ? b.dir : fs::path(args.out_dir);
  fs::create_directories(out);

  ModelConfig cfg = args.model;
  cfg.out_dim = b.label_names.size();
  const Split split = make_split(b.labels, args.seed);
  const std::vector<std::size_t>& ids = args.split == "train" ? split.train_ids
                                        : args.split == "val" ? split.val_ids
                                                              : split.test_ids;
  const NamedMatrices ckpt = read_checkpoint(args.checkpoint);

  double acc = 0.0;
  if (args.variant == "gcn") {
    const Matrix x_docs = detail::doc_rows(b.features, b.n_docs);
    GcnParams params = make_gcn_skeleton(x_docs.cols(), cfg.hidden_dim, cfg.out_dim);
    load_named_matrices(params, ckpt);
    acc = evaluate_gcn(normalize(b.graph, EdgeType::DD), x_docs, params, b.labels, ids);
  } else {
    cfg.agg = variant_uses_attention(args.variant) ? AggMode::Attention : AggMode::Mean;
    if (variant_uses_refined(args.variant)) ensure_refined(b);
    BiteParams params = make_bite_skeleton(cfg, b.features.cols());
    load_named_matrices(params, ckpt);
    const BiteAdjacency adjs =
        BiteAdjacency::build(variant_uses_refined(args.variant) ? b.refined : b.graph);
    acc = evaluate_bite(cfg, adjs, b.features, params, b.labels, ids);
  }

  const std::string tag = detail::run_tag(args.variant, args.seed) + "_" + args.split;
  std::ofstream ev = detail::create_text((out / ("eval_" + tag + ".tsv")).string());
  ev << "# variant\tseed\tsplit\taccuracy\n";
  ev << args.variant << '\t' << args.seed << '\t' << args.split << '\t' << format_double(acc)
     << '\n';
  std::cout << "variant=" << args.variant << " seed=" << args.seed << " split=" << args.split
            << " accuracy=" << format_double(acc) << '\n';
  return 0;
}

struct AblationArgs {
  std::string bundle;
  std::string out_dir;  // defaults to the bundle directory
  std::vector<std::string> variants = {"gcn", "b", "r", "a", "ra"};
  std::vector<unsigned long> seeds = {0, 1, 2, 3, 4};
  ModelConfig model;
  TrainConfig train;
};

inline int cmd_ablation(const AblationArgs& args) {
  namespace fs = std::filesystem;
  Bundle b = load_bundle(args.bundle);
  if (b.label_names.empty())
    throw std::runtime_error("ablation: bundle has no labeled documents");
  const fs::path out = args.out_dir.empty() ? b.dir : fs::path(args.out_dir);
  fs::create_directories(out);

  const bool wants_refined = std::any_of(args.variants.begin(), args.variants.end(),
                                         [](const std::string& v) {
                                           return variant_uses_refined(v);
                                         });
  if (wants_refined) ensure_refined(b);

  AblationInput in;
  in.graph = b.graph;
  in.refined_graph = b.refined;
  in.features = b.features;
  in.labels = b.labels;
  in.model = args.model;
  in.model.out_dim = b.label_names.size();
  in.train = args.train;

  const std::vector<ResultRow> rows = run_ablation(in, args.variants, args.seeds);
  const std::vector<SummaryRow> summary = summarize_results(rows);
  write_results_tsv((out / "results.tsv").string(), rows);
  write_summary_tsv((out / "summary.tsv").string(), summary);

  for (const SummaryRow& s : summary)
    std::cout << s.variant << ": test " << format_double(s.mean_test) << " ± "
              << format_double(s.std_test) << " (val " << format_double(s.mean_val) << " ± "
              << format_double(s.std_val) << ", " << s.n_seeds << " seeds)\n";
  return 0;
}

}  // namespace bite

#include "CLI11.hpp"

namespace bite {

namespace detail {

inline std::vector<unsigned long> parse_seed_list(const std::string& s) {
  std::vector<unsigned long> seeds;
  for (const std::string& part : split_list(s)) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      seeds.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("malformed seed list entry '" + part + "'");
    }
  }
  return seeds;
}

}  // namespace detail

inline int run_cli(int argc, char** argv) {
  CLI::App app{"text-rich network converter and bi-typed graph-convolution trainer"};
  app.require_subcommand(1);

  // Raw flag storage. Each command resolves: default < --config file < flag.
  struct {
    std::string corpus, citations, labels, vocab, stopwords, out, config;
    std::size_t max_n = 3, min_freq = 2;
  } prep;
  struct {
    std::string bundle, edge_type = "both", embeddings, config;
    double t_high = 0.95, t_low = 0.5;
    std::size_t cap = 0, window = 5, dim = 0;
  } ref;
  struct {
    std::string bundle, out, variant = "b", config;
    std::size_t hidden_dim = 16, heads = 4, epochs = 300, patience = 30;
    double dropout = 0.5, lr = 1e-2, weight_decay = 5e-4;
    unsigned long seed = 0;
  } tr;
  struct {
    std::string bundle, checkpoint, out, variant = "b", split = "test", config;
    std::size_t hidden_dim = 16, heads = 4;
    unsigned long seed = 0;
  } ev;
  struct {
    std::string bundle, out, variants = "gcn,b,r,a,ra", seeds = "0,1,2,3,4", config;
    std::size_t hidden_dim = 16, heads = 4, epochs = 300, patience = 30;
    double dropout = 0.5, lr = 1e-2, weight_decay = 5e-4;
  } ab;

  CLI::App* prepare = app.add_subcommand("prepare", "convert a raw corpus into a bundle");
  prepare->add_option("--corpus", prep.corpus, "doc_id<TAB>text file")->required();
  prepare->add_option("--citations", prep.citations, "doc-doc edge list")->required();
  prepare->add_option("--labels", prep.labels, "doc_id<TAB>label file");
  prepare->add_option("--vocab", prep.vocab, "fixed phrase vocabulary (skips mining)");
  prepare->add_option("--stopwords", prep.stopwords, "stopword list, one per line");
  prepare->add_option("--out", prep.out, "bundle output directory")->required();
  prepare->add_option("--max-n", prep.max_n, "longest phrase length to mine");
  prepare->add_option("--min-freq", prep.min_freq, "minimum phrase frequency");
  prepare->add_option("--config", prep.config, "settings file (key = value)");

  CLI::App* refine = app.add_subcommand("refine", "rewrite dd/ww edges by embedding similarity");
  refine->add_option("--bundle", ref.bundle, "bundle directory (or $BITE_DATA_DIR)");
  refine->add_option("--edge-type", ref.edge_type, "dd, ww, or both");
  refine->add_option("--embeddings", ref.embeddings, "external embedding table");
  refine->add_option("--t-high", ref.t_high, "similarity above which non-edges are added");
  refine->add_option("--t-low", ref.t_low, "similarity below which edges are dropped");
  refine->add_option("--cap", ref.cap, "max added edges per node (0 = unlimited)");
  refine->add_option("--window", ref.window, "co-occurrence window for built-in ww vectors");
  refine->add_option("--dim", ref.dim, "built-in ww vector width (0 = auto)");
  refine->add_option("--config", ref.config, "settings file (key = value)");

  CLI::App* train = app.add_subcommand("train", "train one variant on a bundle");
  train->add_option("--bundle", tr.bundle, "bundle directory (or $BITE_DATA_DIR)");
  train->add_option("--out", tr.out, "output directory (default: bundle)");
  train->add_option("--variant", tr.variant, "gcn, b, r, a, or ra");
  train->add_option("--hidden-dim", tr.hidden_dim, "hidden layer width");
  train->add_option("--heads", tr.heads, "attention heads");
  train->add_option("--dropout", tr.dropout, "input dropout rate");
  train->add_option("--lr", tr.lr, "learning rate");
  train->add_option("--epochs", tr.epochs, "max epochs");
  train->add_option("--patience", tr.patience, "early-stopping patience");
  train->add_option("--weight-decay", tr.weight_decay, "L2 penalty");
  train->add_option("--seed", tr.seed, "random seed");
  train->add_option("--config", tr.config, "settings file (key = value)");

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a split");
  eval->add_option("--bundle", ev.bundle, "bundle directory (or $BITE_DATA_DIR)");
  eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint file")->required();
  eval->add_option("--out", ev.out, "output directory (default: bundle)");
  eval->add_option("--variant", ev.variant, "gcn, b, r, a, or ra");
  eval->add_option("--split", ev.split, "train, val, or test");
  eval->add_option("--seed", ev.seed, "seed the training run used (fixes the split)");
  eval->add_option("--hidden-dim", ev.hidden_dim, "hidden layer width");
  eval->add_option("--heads", ev.heads, "attention heads");
  eval->add_option("--config", ev.config, "settings file (key = value)");

  CLI::App* ablation = app.add_subcommand("ablation", "run the variant grid across seeds");
  ablation->add_option("--bundle", ab.bundle, "bundle directory (or $BITE_DATA_DIR)");
  ablation->add_option("--out", ab.out, "output directory (default: bundle)");
  ablation->add_option("--variants", ab.variants, "comma-separated variant list");
  ablation->add_option("--seeds", ab.seeds, "comma-separated seed list");
  ablation->add_option("--hidden-dim", ab.hidden_dim, "hidden layer width");
  ablation->add_option("--heads", ab.heads, "attention heads");
  ablation->add_option("--dropout", ab.dropout, "input dropout rate");
  ablation->add_option("--lr", ab.lr, "learning rate");
  ablation->add_option("--epochs", ab.epochs, "max epochs");
  ablation->add_option("--patience", ab.patience, "early-stopping patience");
  ablation->add_option("--weight-decay", ab.weight_decay, "L2 penalty");
  ablation->add_option("--config", ab.config, "settings file (key = value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto settings_for = [](const std::string& config_path) {
      Settings s;
      if (!config_path.empty()) s.load_config(config_path);
      return s;
    };
    auto count = [](CLI::App* sub, const char* flag) {
      return static_cast<unsigned>(sub->count(flag));
    };

    if (prepare->parsed()) {
      const Settings s = settings_for(prep.config);
      PrepareArgs a;
      a.corpus_path = prep.corpus;
      a.citations_path = prep.citations;
      a.labels_path = prep.labels;
      a.vocab_path = prep.vocab;
      a.stopwords_path = prep.stopwords;
      a.out_dir = prep.out;
      a.max_n = s.get(count(prepare, "--max-n"), prep.max_n, "prepare.max_n", std::size_t{3});
      a.min_freq =
          s.get(count(prepare, "--min-freq"), prep.min_freq, "prepare.min_freq", std::size_t{2});
      return cmd_prepare(a);
    }
    if (refine->parsed()) {
      const Settings s = settings_for(ref.config);
      RefineArgs a;
      a.bundle = resolve_bundle_dir(ref.bundle);
      a.edge_type = s.get(count(refine, "--edge-type"), ref.edge_type, "refine.edge_type",
                          std::string("both"));
      a.embeddings_path = ref.embeddings;
      a.cfg.t_high = s.get(count(refine, "--t-high"), ref.t_high, "refine.t_high", 0.95);
      a.cfg.t_low = s.get(count(refine, "--t-low"), ref.t_low, "refine.t_low", 0.5);
      const std::size_t cap =
          s.get(count(refine, "--cap"), ref.cap, "refine.cap", std::size_t{0});
      if (cap > 0) a.cfg.max_added_per_node = cap;
      a.window = s.get(count(refine, "--window"), ref.window, "refine.window", std::size_t{5});
      a.dim = s.get(count(refine, "--dim"), ref.dim, "refine.dim", std::size_t{0});
      return cmd_refine(a);
    }
    if (train->parsed()) {
      const Settings s = settings_for(tr.config);
      TrainArgs a;
      a.bundle = resolve_bundle_dir(tr.bundle);
      a.out_dir = tr.out;
      a.variant = tr.variant;
      a.model.hidden_dim =
          s.get(count(train, "--hidden-dim"), tr.hidden_dim, "model.hidden_dim", std::size_t{16});
      a.model.heads = s.get(count(train, "--heads"), tr.heads, "model.heads", std::size_t{4});
      a.model.dropout = s.get(count(train, "--dropout"), tr.dropout, "model.dropout", 0.5);
      a.train.lr = s.get(count(train, "--lr"), tr.lr, "train.lr", 1e-2);
      a.train.epochs =
          s.get(count(train, "--epochs"), tr.epochs, "train.epochs", std::size_t{300});
      a.train.patience =
          s.get(count(train, "--patience"), tr.patience, "train.patience", std::size_t{30});
      a.train.weight_decay =
          s.get(count(train, "--weight-decay"), tr.weight_decay, "train.weight_decay", 5e-4);
      a.train.seed = s.get(count(train, "--seed"), tr.seed, "train.seed", 0ul);
      return cmd_train(a);
    }
    if (eval->parsed()) {
      const Settings s = settings_for(ev.config);
      EvalArgs a;
      a.bundle = resolve_bundle_dir(ev.bundle);
      a.checkpoint = ev.checkpoint;
      a.out_dir = ev.out;
      a.variant = ev.variant;
      a.split = ev.split;
      a.seed = s.get(count(eval, "--seed"), ev.seed, "train.seed", 0ul);
      a.model.hidden_dim =
          s.get(count(eval, "--hidden-dim"), ev.hidden_dim, "model.hidden_dim", std::size_t{16});
      a.model.heads = s.get(count(eval, "--heads"), ev.heads, "model.heads", std::size_t{4});
      return cmd_eval(a);
    }
    const Settings s = settings_for(ab.config);
    AblationArgs a;
    a.bundle = resolve_bundle_dir(ab.bundle);
    a.out_dir = ab.out;
    a.variants = detail::split_list(
        s.get(count(ablation, "--variants"), ab.variants, "ablation.variants",
              std::string("gcn,b,r,a,ra")));
    a.seeds = detail::parse_seed_list(
        s.get(count(ablation, "--seeds"), ab.seeds, "ablation.seeds", std::string("0,1,2,3,4")));
    a.model.hidden_dim = s.get(count(ablation, "--hidden-dim"), ab.hidden_dim,
                               "model.hidden_dim", std::size_t{16});
    a.model.heads = s.get(count(ablation, "--heads"), ab.heads, "model.heads", std::size_t{4});
    a.model.dropout = s.get(count(ablation, "--dropout"), ab.dropout, "model.dropout", 0.5);
    a.train.lr = s.get(count(ablation, "--lr"), ab.lr, "train.lr", 1e-2);
    a.train.epochs =
        s.get(count(ablation, "--epochs"), ab.epochs, "train.epochs", std::size_t{300});
    a.train.patience =
        s.get(count(ablation, "--patience"), ab.patience, "train.patience", std::size_t{30});
    a.train.weight_decay = s.get(count(ablation, "--weight-decay"), ab.weight_decay,
                                 "train.weight_decay", 5e-4);
    return cmd_ablation(a);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bite
