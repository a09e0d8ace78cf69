#pragma once

// Parsers and serializers for the on-disk formats: tab-separated text for
// everything inspectable (edge lists, manifests, corpora, embeddings,
// results, config) and a small versioned binary container for checkpoints.
// Text formats are UTF-8, '#' starts a comment line, blank lines are
// ignored, and every parse error carries file and line number.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bite/linalg.hpp"

namespace bite {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::string_view rstrip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool skip_line(std::string_view s) {
  return s.empty() || s[0] == '#' ||
         s.find_first_not_of(" \t") == std::string_view::npos;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = s.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, tab - start));
    start = tab + 1;
  }
}

inline long parse_long(std::string_view s, const std::string& file, std::size_t line,
                       const char* what) {
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(tmp.c_str(), &end, 10);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE)
    throw ParseError(file, line, std::string("expected integer ") + what + ", got '" + tmp + "'");
  return v;
}

inline double parse_double(std::string_view s, const std::string& file, std::size_t line,
                           const char* what) {
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size())
    throw ParseError(file, line, std::string("expected real ") + what + ", got '" + tmp + "'");
  if (!std::isfinite(v))
    throw ParseError(file, line, std::string("non-finite ") + what + " '" + tmp + "'");
  return v;
}

inline std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

inline std::ofstream create_text(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot create file");
  return out;
}

template <class Fn>
void for_each_data_line(const std::string& path, Fn&& fn) {
  std::ifstream in = open_text(path);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = rstrip_cr(raw);
    if (skip_line(line)) continue;
    fn(line, lineno);
  }
}

}  // namespace detail

// ---- edge lists: `src<TAB>dst[<TAB>weight]`, node ids are global ----------

struct EdgeRow {
  long src = 0;
  long dst = 0;
  double weight = 1.0;
  friend bool operator==(const EdgeRow&, const EdgeRow&) = default;
};

inline std::vector<EdgeRow> parse_edge_list(const std::string& path) {
  std::vector<EdgeRow> rows;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    auto f = detail::split_tabs(line);
    if (f.size() < 2 || f.size() > 3)
      throw ParseError(path, no, "expected 2 or 3 tab-separated fields");
    EdgeRow r;
    r.src = detail::parse_long(f[0], path, no, "src");
    r.dst = detail::parse_long(f[1], path, no, "dst");
    if (f.size() == 3) r.weight = detail::parse_double(f[2], path, no, "weight");
    rows.push_back(r);
  });
  return rows;
}

inline void write_edge_list(const std::string& path, std::span<const EdgeRow> rows) {
  std::ofstream out = detail::create_text(path);
  for (const EdgeRow& r : rows) {
    out << r.src << '\t' << r.dst;
    if (r.weight != 1.0) out << '\t' << format_double(r.weight);
    out << '\n';
  }
}

// ---- node manifest: `id<TAB>kind[<TAB>label]`, kind in {doc, word} --------

struct ManifestRow {
  long id = 0;
  std::string kind;
  std::optional<std::string> label;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

inline std::vector<ManifestRow> parse_manifest(const std::string& path) {
  std::vector<ManifestRow> rows;
  std::map<long, std::size_t> seen;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    auto f = detail::split_tabs(line);
    if (f.size() < 2 || f.size() > 3)
      throw ParseError(path, no, "expected 2 or 3 tab-separated fields");
    ManifestRow r;
    r.id = detail::parse_long(f[0], path, no, "id");
    r.kind = std::string(f[1]);
    if (r.kind != "doc" && r.kind != "word")
      throw ParseError(path, no, "kind must be 'doc' or 'word', got '" + r.kind + "'");
    if (f.size() == 3) r.label = std::string(f[2]);
    auto [it, fresh] = seen.emplace(r.id, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate id " + std::to_string(r.id) + " (first at line " +
                           std::to_string(it->second) + ")");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_manifest(const std::string& path, std::span<const ManifestRow> rows) {
  std::ofstream out = detail::create_text(path);
  for (const ManifestRow& r : rows) {
    out << r.id << '\t' << r.kind;
    if (r.label) out << '\t' << *r.label;
    out << '\n';
  }
}

// ---- corpus: `doc_id<TAB>raw text` (text keeps any further tabs) ----------

struct CorpusRow {
  long doc_id = 0;
  std::string text;
  friend bool operator==(const CorpusRow&, const CorpusRow&) = default;
};

inline std::vector<CorpusRow> parse_corpus_file(const std::string& path) {
  std::vector<CorpusRow> rows;
  std::map<long, std::size_t> seen;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path, no, "expected `doc_id<TAB>text`");
    CorpusRow r;
    r.doc_id = detail::parse_long(line.substr(0, tab), path, no, "doc_id");
    r.text = std::string(line.substr(tab + 1));
    auto [it, fresh] = seen.emplace(r.doc_id, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate doc_id " + std::to_string(r.doc_id) + " (first at line " +
                           std::to_string(it->second) + ")");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_corpus_file(const std::string& path, std::span<const CorpusRow> rows) {
  std::ofstream out = detail::create_text(path);
  for (const CorpusRow& r : rows) out << r.doc_id << '\t' << r.text << '\n';
}

// ---- label sidecar: `doc_id<TAB>label` ------------------------------------

struct LabelRow {
  long doc_id = 0;
  std::string label;
  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

inline std::vector<LabelRow> parse_label_file(const std::string& path) {
  std::vector<LabelRow> rows;
  std::map<long, std::size_t> seen;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    auto f = detail::split_tabs(line);
    if (f.size() != 2) throw ParseError(path, no, "expected `doc_id<TAB>label`");
    LabelRow r;
    r.doc_id = detail::parse_long(f[0], path, no, "doc_id");
    r.label = std::string(f[1]);
    if (r.label.empty()) throw ParseError(path, no, "empty label");
    auto [it, fresh] = seen.emplace(r.doc_id, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate doc_id " + std::to_string(r.doc_id) + " (first at line " +
                           std::to_string(it->second) + ")");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_label_file(const std::string& path, std::span<const LabelRow> rows) {
  std::ofstream out = detail::create_text(path);
  for (const LabelRow& r : rows) out << r.doc_id << '\t' << r.label << '\n';
}

// ---- embeddings: `id<TAB>v1 v2 … vD` (space-separated reals) --------------

struct EmbeddingRow {
  long id = 0;
  std::vector<double> values;
  friend bool operator==(const EmbeddingRow&, const EmbeddingRow&) = default;
};

inline std::vector<EmbeddingRow> parse_embedding_file(const std::string& path) {
  std::vector<EmbeddingRow> rows;
  std::map<long, std::size_t> seen;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path, no, "expected `id<TAB>v1 v2 ...`");
    EmbeddingRow r;
    r.id = detail::parse_long(line.substr(0, tab), path, no, "id");
    std::istringstream vs{std::string(line.substr(tab + 1))};
    std::string tok;
    while (vs >> tok) r.values.push_back(detail::parse_double(tok, path, no, "component"));
    if (r.values.empty()) throw ParseError(path, no, "row has no components");
    if (!rows.empty() && rows.front().values.size() != r.values.size())
      throw ParseError(path, no,
                       "dimension mismatch: row has " + std::to_string(r.values.size()) +
                           " components, expected " +
                           std::to_string(rows.front().values.size()));
    auto [it, fresh] = seen.emplace(r.id, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate id " + std::to_string(r.id) + " (first at line " +
                           std::to_string(it->second) + ")");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_embedding_file(const std::string& path, std::span<const EmbeddingRow> rows) {
  std::ofstream out = detail::create_text(path);
  for (const EmbeddingRow& r : rows) {
    out << r.id << '\t';
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (i) out << ' ';
      out << format_double(r.values[i]);
    }
    out << '\n';
  }
}

// ---- phrase vocabulary: one `word[_word…]` per line ------------------------

inline std::vector<std::string> parse_vocab_file(const std::string& path) {
  std::vector<std::string> rows;
  std::map<std::string, std::size_t> seen;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    if (line.find('\t') != std::string_view::npos || line.find(' ') != std::string_view::npos)
      throw ParseError(path, no, "phrase must be a single `_`-joined token");
    std::string p(line);
    auto [it, fresh] = seen.emplace(p, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate phrase '" + p + "' (first at line " +
                           std::to_string(it->second) + ")");
    rows.push_back(std::move(p));
  });
  return rows;
}

inline void write_vocab_file(const std::string& path, std::span<const std::string> rows) {
  std::ofstream out = detail::create_text(path);
  for (const std::string& r : rows) out << r << '\n';
}

// ---- results: `variant<TAB>seed<TAB>val_acc<TAB>test_acc` ------------------

struct ResultRow {
  std::string variant;
  unsigned long seed = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline std::vector<ResultRow> parse_results_tsv(const std::string& path) {
  std::vector<ResultRow> rows;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    auto f = detail::split_tabs(line);
    if (f.size() != 4)
      throw ParseError(path, no, "expected `variant<TAB>seed<TAB>val_acc<TAB>test_acc`");
    ResultRow r;
    r.variant = std::string(f[0]);
    r.seed = static_cast<unsigned long>(detail::parse_long(f[1], path, no, "seed"));
    r.val_acc = detail::parse_double(f[2], path, no, "val_acc");
    r.test_acc = detail::parse_double(f[3], path, no, "test_acc");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_results_tsv(const std::string& path, std::span<const ResultRow> rows) {
  std::ofstream out = detail::create_text(path);
  out << "# variant\tseed\tval_acc\ttest_acc\n";
  for (const ResultRow& r : rows)
    out << r.variant << '\t' << r.seed << '\t' << format_double(r.val_acc) << '\t'
        << format_double(r.test_acc) << '\n';
}

/// Per-variant aggregate over seeds. std is the population standard deviation.
struct SummaryRow {
  std::string variant;
  std::size_t n_seeds = 0;
  double mean_val = 0.0, std_val = 0.0;
  double mean_test = 0.0, std_test = 0.0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

inline std::vector<SummaryRow> parse_summary_tsv(const std::string& path) {
  std::vector<SummaryRow> rows;
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    auto f = detail::split_tabs(line);
    if (f.size() != 6) throw ParseError(path, no, "expected 6 tab-separated fields");
    SummaryRow r;
    r.variant = std::string(f[0]);
    r.n_seeds = static_cast<std::size_t>(detail::parse_long(f[1], path, no, "n_seeds"));
    r.mean_val = detail::parse_double(f[2], path, no, "mean_val");
    r.std_val = detail::parse_double(f[3], path, no, "std_val");
    r.mean_test = detail::parse_double(f[4], path, no, "mean_test");
    r.std_test = detail::parse_double(f[5], path, no, "std_test");
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_summary_tsv(const std::string& path, std::span<const SummaryRow> rows) {
  std::ofstream out = detail::create_text(path);
  out << "# variant\tn_seeds\tmean_val\tstd_val\tmean_test\tstd_test\n";
  for (const SummaryRow& r : rows)
    out << r.variant << '\t' << r.n_seeds << '\t' << format_double(r.mean_val) << '\t'
        << format_double(r.std_val) << '\t' << format_double(r.mean_test) << '\t'
        << format_double(r.std_test) << '\n';
}

// ---- config: `section.key = value` lines -----------------------------------

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::map<std::string, std::string> cfg;
  std::map<std::string, std::size_t> seen;
  auto trim = [](std::string_view s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string_view::npos) return std::string_view{};
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  };
  detail::for_each_data_line(path, [&](std::string_view line, std::size_t no) {
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(path, no, "expected `key = value`");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || key.find('.') == std::string::npos)
      throw ParseError(path, no, "config key must look like `section.key`, got '" + key + "'");
    auto [it, fresh] = seen.emplace(key, no);
    if (!fresh)
      throw ParseError(path, no,
                       "duplicate key '" + key + "' (first at line " +
                           std::to_string(it->second) + ")");
    cfg[key] = value;
  });
  return cfg;
}

// ---- checkpoints: versioned binary container of named shaped matrices -----
//
// Layout (little-endian):
//   bytes 0..7   magic "BITECKPT"
//   u32          version (currently 1)
//   u32          entry count
//   per entry:   u32 name length, name bytes,
//                u64 rows, u64 cols, rows·cols f64 values row-major

using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'B', 'I', 'T', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get_raw(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError(path, 0, "truncated checkpoint");
  return v;
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const NamedMatrices& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot create file");
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::put_raw(out, detail::kCheckpointVersion);
  detail::put_raw(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, m] : entries) {
    detail::put_raw(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_raw(out, static_cast<std::uint64_t>(m.rows()));
    detail::put_raw(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

inline NamedMatrices read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  char magic[sizeof detail::kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof magic) != 0)
    throw ParseError(path, 0, "not a checkpoint file (bad magic)");
  const auto version = detail::get_raw<std::uint32_t>(in, path);
  if (version != detail::kCheckpointVersion)
    throw ParseError(path, 0, "unsupported checkpoint version " + std::to_string(version));
  const auto count = detail::get_raw<std::uint32_t>(in, path);
  NamedMatrices entries;
  entries.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = detail::get_raw<std::uint32_t>(in, path);
    if (name_len > 4096) throw ParseError(path, 0, "implausible name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw ParseError(path, 0, "truncated checkpoint");
    const auto rows = detail::get_raw<std::uint64_t>(in, path);
    const auto cols = detail::get_raw<std::uint64_t>(in, path);
    if (rows > (1u << 24) || cols > (1u << 24) || rows * cols > (1u << 28))
      throw ParseError(path, 0, "implausible matrix shape in checkpoint");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    in.read(reinterpret_cast<char*>(m.data().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ParseError(path, 0, "truncated checkpoint");
    entries.emplace_back(std::move(name), std::move(m));
  }
  return entries;
}

}  // namespace bite
