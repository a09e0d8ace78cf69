#pragma once

// Text side of the pipeline: tokenization, frequent-n-gram phrase mining
// with greedy longest-match filtering, the phrase-phrase word-sharing
// network, document-phrase inclusion edges, and bag-of-words features.

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bite/graph.hpp"
#include "bite/linalg.hpp"

namespace bite {

struct Document {
  NodeId doc_id;
  std::vector<std::string> tokens;
};

struct Phrase {
  NodeId phrase_id;
  std::vector<std::string> words;
  std::size_t frequency = 0;

  /// Display form: constituent words joined by '_', e.g. "text_mining".
  std::string name() const {
    std::string s;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) s += '_';
      s += words[i];
    }
    return s;
  }
};

/// Words dropped during tokenization. Mirrors data/stopwords.txt; callers can
/// pass their own set instead.
inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "an",  "and",  "are",  "as",   "at",   "be",   "but",  "by",    "can",
      "for", "from", "had",  "has",  "have", "he",   "her",  "his",   "in",
      "is",  "it",   "its",  "not",  "of",   "on",   "or",   "our",   "she",
      "that", "the", "their", "them", "they", "this", "to",  "was",   "we",
      "were", "which", "will", "with", "you"};
  return words;
}

/// Lowercases, splits on non-alphanumeric characters, drops tokens shorter
/// than 2 characters and stopwords.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const std::set<std::string>& stopwords =
                                             default_stopwords()) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !stopwords.contains(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc))
      cur += static_cast<char>(std::tolower(uc));
    else
      flush();
  }
  flush();
  return tokens;
}

namespace detail {

inline std::string join_tokens(std::span<const std::string> toks, std::size_t pos,
                               std::size_t n) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) key += '_';
    key += toks[pos + k];
  }
  return key;
}

}  // namespace detail

/// Greedy longest-match rescanner over a fixed phrase vocabulary. At each
/// position the longest matching phrase wins and the scan jumps past it;
/// tokens matching nothing are skipped.
class PhraseMatcher {
 public:
  explicit PhraseMatcher(std::span<const Phrase> phrases) {
    for (std::size_t k = 0; k < phrases.size(); ++k) {
      by_name_.emplace(phrases[k].name(), k);
      max_len_ = std::max(max_len_, phrases[k].words.size());
    }
  }

  /// Phrase indices in scan order (one entry per consumed match).
  std::vector<std::size_t> segment(std::span<const std::string> tokens) const {
    std::vector<std::size_t> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t matched = 0;
      for (std::size_t n = std::min(max_len_, tokens.size() - i); n >= 1; --n) {
        auto it = by_name_.find(detail::join_tokens(tokens, i, n));
        if (it != by_name_.end()) {
          out.push_back(it->second);
          matched = n;
          break;
        }
      }
      i += matched ? matched : 1;
    }
    return out;
  }

  std::size_t vocabulary_size() const { return by_name_.size(); }

 private:
  std::map<std::string, std::size_t> by_name_;
  std::size_t max_len_ = 0;
};

/// Frequent contiguous n-grams (n ≤ max_n, raw frequency ≥ min_freq),
/// re-counted by a greedy longest-match rescan so shorter n-grams subsumed by
/// a longer phrase at the same position are not double-counted; phrases whose
/// greedy count still reaches min_freq form the vocabulary, sorted by name.
/// Phrase ids are dense word-node ids in that order.
inline std::vector<Phrase> mine_phrases(std::span<const Document> corpus, std::size_t max_n,
                                        std::size_t min_freq) {
  if (corpus.empty()) throw std::invalid_argument("mine_phrases: empty corpus");
  if (max_n < 1 || min_freq < 1)
    throw std::invalid_argument("mine_phrases: max_n and min_freq must be >= 1");

  // n-grams are keyed by their '_'-joined name, so tokens must not contain
  // the joiner themselves (tokenize() never produces one).
  for (const Document& d : corpus)
    for (const std::string& t : d.tokens)
      if (t.empty() || t.find('_') != std::string::npos)
        throw std::invalid_argument("mine_phrases: token '" + t + "' is empty or contains '_'");

  // Raw counts of every contiguous n-gram.
  std::map<std::string, std::pair<std::size_t, std::size_t>> raw;  // name -> (len, count)
  for (const Document& d : corpus)
    for (std::size_t i = 0; i < d.tokens.size(); ++i)
      for (std::size_t n = 1; n <= std::min(max_n, d.tokens.size() - i); ++n) {
        auto it = raw.try_emplace(detail::join_tokens(d.tokens, i, n), n, 0).first;
        ++it->second.second;
      }

  std::map<std::string, std::size_t> candidate_len;
  std::size_t longest = 0;
  for (const auto& [name, lc] : raw)
    if (lc.second >= min_freq) {
      candidate_len.emplace(name, lc.first);
      longest = std::max(longest, lc.first);
    }

  // Greedy rescan against the candidate set.
  std::map<std::string, std::size_t> greedy;
  for (const Document& d : corpus) {
    std::size_t i = 0;
    while (i < d.tokens.size()) {
      std::size_t matched = 0;
      for (std::size_t n = std::min(longest, d.tokens.size() - i); n >= 1; --n) {
        auto key = detail::join_tokens(d.tokens, i, n);
        if (candidate_len.contains(key)) {
          ++greedy[key];
          matched = n;
          break;
        }
      }
      i += matched ? matched : 1;
    }
  }

  std::vector<Phrase> vocab;
  for (const auto& [name, count] : greedy) {
    if (count < min_freq) continue;
    Phrase p;
    p.phrase_id = word_node(vocab.size());
    p.frequency = count;
    std::size_t start = 0;
    for (std::size_t us = name.find('_'); us != std::string::npos;
         us = name.find('_', start)) {
      p.words.push_back(name.substr(start, us - start));
      start = us + 1;
    }
    p.words.push_back(name.substr(start));
    vocab.push_back(std::move(p));
  }
  return vocab;  // map iteration order is already lexicographic by name
}

/// WW edges: one edge per pair of phrases sharing at least one constituent
/// word. Built via an inverted word→phrases index; canonical sorted output.
inline std::vector<Edge> build_word_network(std::span<const Phrase> phrases) {
  for (std::size_t k = 0; k < phrases.size(); ++k)
    if (phrases[k].phrase_id != word_node(k))
      throw std::invalid_argument("build_word_network: phrase ids must be dense word ids");

  std::map<std::string, std::vector<std::size_t>> by_word;
  for (std::size_t k = 0; k < phrases.size(); ++k)
    for (const std::string& w : phrases[k].words) {
      auto& lst = by_word[w];
      if (lst.empty() || lst.back() != k) lst.push_back(k);
    }

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [word, members] : by_word)
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        pairs.emplace(members[a], members[b]);  // members ascending => a < b

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.push_back(ww_edge(a, b));
  return edges;
}

/// Number of occurrences of `phrase` as a contiguous token subsequence.
inline std::size_t count_occurrences(std::span<const std::string> tokens,
                                     const Phrase& phrase) {
  const std::size_t n = phrase.words.size();
  if (n == 0 || tokens.size() < n) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < n; ++k)
      if (tokens[i + k] != phrase.words[k]) {
        hit = false;
        break;
      }
    if (hit) ++count;
  }
  return count;
}

/// DW edges: (d, w) iff phrase w occurs as a contiguous token subsequence of
/// document d. Output ordered by (doc, phrase).
inline std::vector<Edge> build_inclusion_edges(std::span<const Document> corpus,
                                               std::span<const Phrase> phrases) {
  std::vector<Edge> edges;
  for (const Document& d : corpus)
    for (std::size_t k = 0; k < phrases.size(); ++k)
      if (count_occurrences(d.tokens, phrases[k]) > 0)
        edges.push_back(dw_edge(d.doc_id.index, phrases[k].phrase_id.index));
  return edges;
}

/// Joint feature matrix: one row per document (greedy-segmentation phrase
/// counts, L1-normalized; all-zero rows stay zero) followed by one one-hot
/// row per phrase. Document ids must be dense 0..n-1 in corpus order.
inline Matrix bag_of_words_features(std::span<const Document> corpus,
                                    std::span<const Phrase> phrases) {
  if (phrases.empty())
    throw std::invalid_argument("bag_of_words_features: empty phrase vocabulary");
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].doc_id != doc_node(i))
      throw std::invalid_argument("bag_of_words_features: document ids must be dense");

  const std::size_t n_docs = corpus.size();
  const std::size_t p = phrases.size();
  Matrix x(n_docs + p, p);
  PhraseMatcher matcher(phrases);
  for (std::size_t i = 0; i < n_docs; ++i) {
    for (std::size_t k : matcher.segment(corpus[i].tokens)) x(i, k) += 1.0;
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) total += x(i, j);
    if (total > 0.0)
      for (std::size_t j = 0; j < p; ++j) x(i, j) /= total;
  }
  for (std::size_t k = 0; k < p; ++k) x(n_docs + k, k) = 1.0;
  return x;
}

}  // namespace bite
