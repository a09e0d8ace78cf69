#pragma once

// The bi-typed two-layer GCN: one graph convolution per edge type over the
// joint (documents then words) node space, a cross-type aggregation step
// (mean, concat, or multi-head two-slot attention), ReLU between layers, and
// row-softmax over classes at the top. A plain two-layer GCN on the document
// sub-network serves as the baseline.
//
// Aggregation consumes the three per-type messages through two slots:
//   document rows: slot 1 = the DD message, slot 2 = mean(DW, WW messages);
//   word rows:     slot 1 = the WW message, slot 2 = the DW message.
// Mean mode instead averages the applicable messages per node kind
// (documents: DD and DW; words: WW and DW) and can be restricted to a subset
// of edge types via ModelConfig::mean_types — restricting to DD alone makes
// the document rows collapse exactly onto the plain-GCN baseline when the
// WW/DW edge sets are empty.

#include <array>
#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bite/graph.hpp"
#include "bite/io.hpp"
#include "bite/linalg.hpp"
#include "bite/nn.hpp"

namespace bite {

enum class AggMode { Mean, Concat, Attention };

inline const char* agg_mode_name(AggMode m) {
  switch (m) {
    case AggMode::Mean: return "mean";
    case AggMode::Concat: return "concat";
    case AggMode::Attention: return "attention";
  }
  throw std::invalid_argument("agg_mode_name: bad mode");
}

inline AggMode parse_agg_mode(const std::string& s) {
  if (s == "mean") return AggMode::Mean;
  if (s == "concat") return AggMode::Concat;
  if (s == "attention") return AggMode::Attention;
  throw std::invalid_argument("unknown aggregation mode '" + s + "'");
}

struct ModelConfig {
  std::size_t hidden_dim = 16;
  std::size_t out_dim = 0;  // number of classes
  AggMode agg = AggMode::Mean;
  std::size_t heads = 4;    // attention mode only
  double dropout = 0.5;
  // Edge types Mean aggregation may consume. A node kind whose applicable
  // types are all excluded falls back to its full applicable set.
  std::set<EdgeType> mean_types = {EdgeType::DD, EdgeType::WW, EdgeType::DW};
  static constexpr std::size_t layers = 2;
};

// ---- parameters ------------------------------------------------------------

struct BiteParams {
  struct Layer {
    std::array<Matrix, 3> w;       // per-edge-type weight, indexed by EdgeType
    Matrix concat_proj;            // concat mode: (2·d_out) × d_out
    std::vector<Matrix> attn_rho;  // attention mode: per head, (2·d_out) × 2
    Matrix attn_proj;              // attention mode: (heads·d_out) × d_out
  };
  std::array<Layer, 2> layers;

  template <class Fn>
  void for_each(Fn&& fn) {
    visit(*this, fn);
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    visit(*this, fn);
  }

 private:
  template <class Self, class Fn>
  static void visit(Self& self, Fn& fn) {
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      const std::string pre = "layer" + std::to_string(l) + ".";
      for (EdgeType t : kEdgeTypes) {
        auto& w = layer.w[static_cast<std::size_t>(t)];
        if (!w.empty()) fn(pre + "w_" + edge_type_name(t), w);
      }
      if (!layer.concat_proj.empty()) fn(pre + "concat_proj", layer.concat_proj);
      for (std::size_t h = 0; h < layer.attn_rho.size(); ++h)
        fn(pre + "attn_rho" + std::to_string(h), layer.attn_rho[h]);
      if (!layer.attn_proj.empty()) fn(pre + "attn_proj", layer.attn_proj);
    }
  }
};

struct GcnParams {
  Matrix w0, w1;

  template <class Fn>
  void for_each(Fn&& fn) {
    if (!w0.empty()) fn(std::string("w0"), w0);
    if (!w1.empty()) fn(std::string("w1"), w1);
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    if (!w0.empty()) fn(std::string("w0"), w0);
    if (!w1.empty()) fn(std::string("w1"), w1);
  }
};

inline Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

/// Zero-valued parameters with the shapes the config implies. Also the shape
/// authority for checkpoint loading.
inline BiteParams make_bite_skeleton(const ModelConfig& cfg, std::size_t in_dim) {
  if (in_dim == 0 || cfg.hidden_dim == 0 || cfg.out_dim == 0)
    throw std::invalid_argument("make_bite_skeleton: zero dimension");
  if (cfg.agg == AggMode::Attention && cfg.heads < 1)
    throw std::invalid_argument("make_bite_skeleton: attention needs heads >= 1");
  BiteParams p;
  const std::array<std::pair<std::size_t, std::size_t>, 2> dims = {
      {{in_dim, cfg.hidden_dim}, {cfg.hidden_dim, cfg.out_dim}}};
  for (std::size_t l = 0; l < 2; ++l) {
    auto [din, dout] = dims[l];
    for (EdgeType t : kEdgeTypes) p.layers[l].w[static_cast<std::size_t>(t)] = Matrix(din, dout);
    if (cfg.agg == AggMode::Concat) p.layers[l].concat_proj = Matrix(2 * dout, dout);
    if (cfg.agg == AggMode::Attention) {
      p.layers[l].attn_rho.assign(cfg.heads, Matrix(2 * dout, 2));
      p.layers[l].attn_proj = Matrix(cfg.heads * dout, dout);
    }
  }
  return p;
}

inline BiteParams init_bite_params(const ModelConfig& cfg, std::size_t in_dim,
                                   std::mt19937_64& rng) {
  BiteParams p = make_bite_skeleton(cfg, in_dim);
  p.for_each([&](const std::string&, Matrix& m) { m = glorot_uniform(m.rows(), m.cols(), rng); });
  return p;
}

inline GcnParams make_gcn_skeleton(std::size_t in_dim, std::size_t hidden_dim,
                                   std::size_t out_dim) {
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0)
    throw std::invalid_argument("make_gcn_skeleton: zero dimension");
  return {Matrix(in_dim, hidden_dim), Matrix(hidden_dim, out_dim)};
}

inline GcnParams init_gcn_params(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                                 std::mt19937_64& rng) {
  GcnParams p = make_gcn_skeleton(in_dim, hidden_dim, out_dim);
  p.for_each([&](const std::string&, Matrix& m) { m = glorot_uniform(m.rows(), m.cols(), rng); });
  return p;
}

/// Checkpoint adapters: parameters as (name, matrix) pairs in visitation
/// order, and the inverse that fills a skeleton and insists on an exact match
/// of names and shapes.
template <class Params>
NamedMatrices named_matrices(const Params& params) {
  NamedMatrices out;
  params.for_each([&](const std::string& name, const Matrix& m) { out.emplace_back(name, m); });
  return out;
}

template <class Params>
void load_named_matrices(Params& params, const NamedMatrices& named) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : named)
    if (!by_name.emplace(name, &m).second)
      throw std::runtime_error("checkpoint has duplicate entry '" + name + "'");
  std::size_t used = 0;
  params.for_each([&](const std::string& name, Matrix& m) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint is missing entry '" + name + "'");
    if (!it->second->same_shape(m))
      throw std::runtime_error("checkpoint entry '" + name + "' has wrong shape");
    m = *it->second;
    ++used;
  });
  if (used != by_name.size())
    throw std::runtime_error("checkpoint has " + std::to_string(by_name.size() - used) +
                             " unexpected entries");
}

// ---- forward passes --------------------------------------------------------

/// The three per-type normalized adjacencies, all over the joint node space
/// so every message tensor has one row per node. Keep this alive for as long
/// as any tape built on it.
struct BiteAdjacency {
  std::size_t n_docs = 0;
  std::size_t n_words = 0;
  std::array<NormalizedAdjacency, 3> adj;

  static BiteAdjacency build(const BiTypedGraph& g) {
    BiteAdjacency a;
    a.n_docs = g.doc_count();
    a.n_words = g.word_count();
    for (EdgeType t : kEdgeTypes)
      a.adj[static_cast<std::size_t>(t)] = joint_normalized(g, t);
    return a;
  }
};

/// One parameter staged onto a tape: its gradient lands in `tensor`, the
/// optimizer writes back through `param`.
struct StagedParam {
  std::string name;
  Tensor tensor;
  Matrix* param = nullptr;
};

/// One layer's parameters staged onto a tape, ready for aggregate().
struct StagedLayer {
  std::array<Tensor, 3> w;
  Tensor concat_proj;
  std::vector<Tensor> attn_rho;
  Tensor attn_proj;
};

inline Tensor stage_one(Tape& t, const std::string& name, Matrix& m,
                        std::vector<StagedParam>* staged) {
  Tensor tt = t.input(m, true);
  if (staged) staged->push_back({name, tt, &m});
  return tt;
}

inline StagedLayer stage_layer(Tape& t, BiteParams::Layer& layer, const std::string& pre,
                               std::vector<StagedParam>* staged) {
  StagedLayer s;
  for (EdgeType et : kEdgeTypes) {
    auto i = static_cast<std::size_t>(et);
    if (layer.w[i].empty())
      throw std::invalid_argument("bite_forward: layer weight missing for type " +
                                  std::string(edge_type_name(et)));
    s.w[i] = stage_one(t, pre + "w_" + edge_type_name(et), layer.w[i], staged);
  }
  if (!layer.concat_proj.empty())
    s.concat_proj = stage_one(t, pre + "concat_proj", layer.concat_proj, staged);
  for (std::size_t h = 0; h < layer.attn_rho.size(); ++h)
    s.attn_rho.push_back(stage_one(t, pre + "attn_rho" + std::to_string(h), layer.attn_rho[h], staged));
  if (!layer.attn_proj.empty())
    s.attn_proj = stage_one(t, pre + "attn_proj", layer.attn_proj, staged);
  return s;
}

/// Â_t · h · W_t for one typed sub-network. Rows of nodes the type never
/// touches carry only their self-loop contribution, i.e. pass through into
/// the product with W_t.
inline Tensor gcn_sublayer(Tape& t, Tensor h, const NormalizedAdjacency& adj, Tensor w) {
  return t.matmul(t.spmm(adj, h), w);
}

struct AggregateResult {
  Tensor out;
  // Attention mode: one N×2 matrix of attention weights per head (rows are
  // the softmaxed slot weights for each node).
  std::vector<Matrix> head_weights;
};

namespace detail {

struct TwoSlots {
  Tensor s1, s2;
};

inline TwoSlots two_slot_messages(Tape& t, const std::array<Tensor, 3>& msgs,
                                  std::size_t n_docs) {
  const auto dd = static_cast<std::size_t>(EdgeType::DD);
  const auto ww = static_cast<std::size_t>(EdgeType::WW);
  const auto dw = static_cast<std::size_t>(EdgeType::DW);
  const std::size_t n = msgs[dd].rows();
  TwoSlots s;
  s.s1 = t.concat_rows(t.slice_rows(msgs[dd], 0, n_docs), t.slice_rows(msgs[ww], n_docs, n));
  s.s2 = t.concat_rows(
      t.mean(t.slice_rows(msgs[dw], 0, n_docs), t.slice_rows(msgs[ww], 0, n_docs)),
      t.slice_rows(msgs[dw], n_docs, n));
  return s;
}

}  // namespace detail

/// Merges the three per-type messages into one tensor per node. See the
/// header comment for slot construction and Mean-mode semantics.
inline AggregateResult aggregate(Tape& t, const std::array<Tensor, 3>& msgs, std::size_t n_docs,
                                 const ModelConfig& cfg, const StagedLayer& layer) {
  const std::size_t n = msgs[static_cast<std::size_t>(EdgeType::DD)].rows();
  AggregateResult res;

  switch (cfg.agg) {
    case AggMode::Mean: {
      auto pick = [&](std::initializer_list<EdgeType> applicable, std::size_t r0,
                      std::size_t r1) {
        std::vector<Tensor> parts;
        for (EdgeType et : applicable)
          if (cfg.mean_types.contains(et))
            parts.push_back(t.slice_rows(msgs[static_cast<std::size_t>(et)], r0, r1));
        if (parts.empty())  // fall back to every applicable message
          for (EdgeType et : applicable)
            parts.push_back(t.slice_rows(msgs[static_cast<std::size_t>(et)], r0, r1));
        return t.mean(std::span<const Tensor>(parts.data(), parts.size()));
      };
      Tensor docs = pick({EdgeType::DD, EdgeType::DW}, 0, n_docs);
      Tensor words = pick({EdgeType::WW, EdgeType::DW}, n_docs, n);
      res.out = t.concat_rows(docs, words);
      return res;
    }
    case AggMode::Concat: {
      if (!layer.concat_proj.valid())
        throw std::invalid_argument("aggregate: concat mode without projection weights");
      auto slots = detail::two_slot_messages(t, msgs, n_docs);
      res.out = t.matmul(t.concat_cols(slots.s1, slots.s2), layer.concat_proj);
      return res;
    }
    case AggMode::Attention: {
      if (cfg.heads < 1) throw std::invalid_argument("aggregate: attention needs heads >= 1");
      if (layer.attn_rho.size() != cfg.heads || !layer.attn_proj.valid())
        throw std::invalid_argument("aggregate: attention weights missing or head count wrong");
      auto slots = detail::two_slot_messages(t, msgs, n_docs);
      Tensor pair = t.concat_cols(slots.s1, slots.s2);
      std::vector<Tensor> heads;
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        Tensor scores = t.softmax_rows(t.matmul(pair, layer.attn_rho[h]));
        res.head_weights.push_back(scores.value());
        Tensor a1 = t.slice_cols(scores, 0, 1);
        Tensor a2 = t.slice_cols(scores, 1, 2);
        heads.push_back(t.add(t.rowwise_scale(slots.s1, a1), t.rowwise_scale(slots.s2, a2)));
      }
      Tensor merged = cfg.heads == 1 ? heads.front()
                                     : t.concat_cols(std::span<const Tensor>(heads.data(),
                                                                             heads.size()));
      res.out = t.matmul(merged, layer.attn_proj);
      return res;
    }
  }
  throw std::invalid_argument("aggregate: bad mode");
}

struct ForwardResult {
  Tensor logits;  // N × F, pre-softmax
  Tensor z;       // N × F, rows are class distributions
  std::vector<Matrix> attention;  // layer-major, then head-major; empty unless attention mode
};

/// Two-layer forward pass over the joint node space. Parameters are staged
/// onto the tape (and reported through `staged` for the optimizer); dropout
/// runs only when `dropout_rng` is non-null.
inline ForwardResult bite_forward(Tape& t, const Matrix& x, const BiteAdjacency& adjs,
                                  const ModelConfig& cfg, BiteParams& params,
                                  std::mt19937_64* dropout_rng = nullptr,
                                  std::vector<StagedParam>* staged = nullptr) {
  const std::size_t n = adjs.n_docs + adjs.n_words;
  if (x.rows() != n)
    throw std::invalid_argument("bite_forward: features must cover the joint node space");

  StagedLayer l0 = stage_layer(t, params.layers[0], "layer0.", staged);
  StagedLayer l1 = stage_layer(t, params.layers[1], "layer1.", staged);

  ForwardResult res;
  Tensor h = t.input(x, false);
  if (dropout_rng && cfg.dropout > 0.0) h = t.dropout(h, cfg.dropout, *dropout_rng);

  std::array<Tensor, 3> msgs1;
  for (EdgeType et : kEdgeTypes) {
    auto i = static_cast<std::size_t>(et);
    msgs1[i] = gcn_sublayer(t, h, adjs.adj[i], l0.w[i]);
  }
  AggregateResult agg1 = aggregate(t, msgs1, adjs.n_docs, cfg, l0);
  for (auto& m : agg1.head_weights) res.attention.push_back(std::move(m));

  Tensor h1 = t.relu(agg1.out);
  if (dropout_rng && cfg.dropout > 0.0) h1 = t.dropout(h1, cfg.dropout, *dropout_rng);

  std::array<Tensor, 3> msgs2;
  for (EdgeType et : kEdgeTypes) {
    auto i = static_cast<std::size_t>(et);
    msgs2[i] = gcn_sublayer(t, h1, adjs.adj[i], l1.w[i]);
  }
  AggregateResult agg2 = aggregate(t, msgs2, adjs.n_docs, cfg, l1);
  for (auto& m : agg2.head_weights) res.attention.push_back(std::move(m));

  res.logits = agg2.out;
  res.z = t.softmax_rows(res.logits);
  return res;
}

/// Plain two-layer GCN on the document sub-network:
/// softmax(Â · ReLU(Â · X · W0) · W1).
inline ForwardResult gcn_baseline_forward(Tape& t, const Matrix& x_docs,
                                          const NormalizedAdjacency& adj_dd, GcnParams& params,
                                          double dropout = 0.0,
                                          std::mt19937_64* dropout_rng = nullptr,
                                          std::vector<StagedParam>* staged = nullptr) {
  if (params.w0.empty() || params.w1.empty())
    throw std::invalid_argument("gcn_baseline_forward: missing weights");
  Tensor w0 = stage_one(t, "w0", params.w0, staged);
  Tensor w1 = stage_one(t, "w1", params.w1, staged);

  ForwardResult res;
  Tensor h = t.input(x_docs, false);
  if (dropout_rng && dropout > 0.0) h = t.dropout(h, dropout, *dropout_rng);
  Tensor h1 = t.relu(gcn_sublayer(t, h, adj_dd, w0));
  if (dropout_rng && dropout > 0.0) h1 = t.dropout(h1, dropout, *dropout_rng);
  res.logits = gcn_sublayer(t, h1, adj_dd, w1);
  res.z = t.softmax_rows(res.logits);
  return res;
}

}  // namespace bite
