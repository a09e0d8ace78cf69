#pragma once

// Training loop and experiment drivers: stratified splits, Adam with weight
// decay and early stopping on validation accuracy, accuracy evaluation with
// a documented tie-break, and the ablation runner over the variant grid
// {gcn, b, r, a, ra}. Single-threaded on purpose: results are bitwise
// reproducible for a fixed seed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bite/graph.hpp"
#include "bite/io.hpp"
#include "bite/linalg.hpp"
#include "bite/model.hpp"
#include "bite/nn.hpp"

namespace bite {

// ---- splits ----------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train_ids, val_ids, test_ids;
};

/// Stratified split over labeled documents (labels[i] < 0 means unlabeled).
/// When every class has ≥ 25 members and enough documents remain, uses the
/// citation-benchmark convention of 20 per class for training and 500 for
/// validation; otherwise falls back to a per-class 60/20/20 split. Membership
/// is decided by a seeded shuffle; each output set is sorted ascending.
inline Split make_split(std::span<const int> labels, unsigned long seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) {
      by_class[labels[i]].push_back(i);
      ++labeled;
    }
  if (by_class.empty()) throw std::invalid_argument("make_split: no labeled documents");

  std::mt19937_64 rng(seed);
  for (auto& [cls, ids] : by_class) std::shuffle(ids.begin(), ids.end(), rng);

  std::size_t min_class = labeled;
  for (const auto& [cls, ids] : by_class) min_class = std::min(min_class, ids.size());
  const std::size_t n_classes = by_class.size();

  Split s;
  if (min_class >= 25 && labeled >= 20 * n_classes + 600) {
    std::vector<std::size_t> pool;
    for (const auto& [cls, ids] : by_class) {
      s.train_ids.insert(s.train_ids.end(), ids.begin(), ids.begin() + 20);
      pool.insert(pool.end(), ids.begin() + 20, ids.end());
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    s.val_ids.assign(pool.begin(), pool.begin() + 500);
    s.test_ids.assign(pool.begin() + 500, pool.end());
  } else {
    for (const auto& [cls, ids] : by_class) {
      const std::size_t n = ids.size();
      std::size_t n_tr = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.6 * n)));
      n_tr = std::min(n_tr, n);
      std::size_t n_val = std::min(n - n_tr,
                                   std::max<std::size_t>(n > 1 ? 1 : 0,
                                                         static_cast<std::size_t>(
                                                             std::llround(0.2 * n))));
      s.train_ids.insert(s.train_ids.end(), ids.begin(), ids.begin() + n_tr);
      s.val_ids.insert(s.val_ids.end(), ids.begin() + n_tr, ids.begin() + n_tr + n_val);
      s.test_ids.insert(s.test_ids.end(), ids.begin() + n_tr + n_val, ids.end());
    }
  }
  std::sort(s.train_ids.begin(), s.train_ids.end());
  std::sort(s.val_ids.begin(), s.val_ids.end());
  std::sort(s.test_ids.begin(), s.test_ids.end());
  return s;
}

// ---- evaluation ------------------------------------------------------------

/// Fraction of rows whose argmax matches the label; ties go to the lowest
/// class index.
inline double accuracy_from_logits(const Matrix& logits, std::span<const int> labels,
                                   std::span<const std::size_t> ids) {
  if (ids.empty()) throw std::invalid_argument("accuracy_from_logits: empty id set");
  std::size_t correct = 0;
  for (std::size_t i : ids) {
    if (i >= logits.rows() || i >= labels.size() || labels[i] < 0)
      throw std::invalid_argument("accuracy_from_logits: id " + std::to_string(i) +
                                  " out of range or unlabeled");
    const double* row = logits.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (row[j] > row[arg]) arg = j;
    if (static_cast<long>(arg) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

inline double evaluate_bite(const ModelConfig& cfg, const BiteAdjacency& adjs, const Matrix& x,
                            const BiteParams& params, std::span<const int> labels,
                            std::span<const std::size_t> ids) {
  BiteParams p = params;  // forward stages parameters through mutable refs
  Tape t;
  ForwardResult res = bite_forward(t, x, adjs, cfg, p);
  return accuracy_from_logits(res.logits.value(), labels, ids);
}

inline double evaluate_gcn(const NormalizedAdjacency& adj_dd, const Matrix& x_docs,
                           const GcnParams& params, std::span<const int> labels,
                           std::span<const std::size_t> ids) {
  GcnParams p = params;
  Tape t;
  ForwardResult res = gcn_baseline_forward(t, x_docs, adj_dd, p);
  return accuracy_from_logits(res.logits.value(), labels, ids);
}

// ---- training ---------------------------------------------------------------

struct TrainConfig {
  double lr = 1e-2;
  std::size_t epochs = 300;
  std::size_t patience = 30;
  unsigned long seed = 0;
  double weight_decay = 5e-4;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

template <class Params>
struct TrainResult {
  Params params;  // best-validation checkpoint
  std::vector<EpochStats> history;
  double best_val_acc = 0.0;
  std::size_t best_epoch = 0;
};

inline void write_history_tsv(const std::string& path, std::span<const EpochStats> history) {
  std::ofstream out = detail::create_text(path);
  out << "# epoch\tloss\ttrain_acc\tval_acc\n";
  for (const EpochStats& e : history)
    out << e.epoch << '\t' << format_double(e.loss) << '\t' << format_double(e.train_acc)
        << '\t' << format_double(e.val_acc) << '\n';
}

namespace detail {

inline void check_split_labeled(std::span<const int> labels, const Split& split) {
  auto check = [&](std::span<const std::size_t> ids, const char* which) {
    for (std::size_t i : ids)
      if (i >= labels.size() || labels[i] < 0)
        throw std::invalid_argument(std::string("train: ") + which + " id " + std::to_string(i) +
                                    " is out of range or unlabeled");
  };
  if (split.train_ids.empty()) throw std::invalid_argument("train: empty training set");
  check(split.train_ids, "train");
  check(split.val_ids, "val");
  check(split.test_ids, "test");
}

/// Shared optimization loop. `forward(tape, params, rng_or_null, staged_or_null)`
/// must return logits covering at least all labeled rows. Early-stops when
/// validation accuracy has not improved for `patience` epochs and returns the
/// parameters of the best-validation epoch. When there is no validation set,
/// training accuracy stands in for it.
template <class Params, class ForwardFn>
TrainResult<Params> train_loop(Params params, ForwardFn&& forward, std::span<const int> labels,
                               const Split& split, const TrainConfig& tcfg,
                               std::mt19937_64& rng) {
  if (tcfg.lr <= 0.0 || tcfg.patience < 1 || tcfg.weight_decay < 0.0)
    throw std::invalid_argument("train: bad config (lr, patience, weight_decay)");
  check_split_labeled(labels, split);

  TrainResult<Params> result;
  result.params = params;
  std::map<std::string, AdamState> opt;
  double best_val = -1.0;
  std::size_t wait = 0;

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Tape t;
    std::vector<StagedParam> staged;
    Tensor logits = forward(t, params, &rng, &staged);
    Tensor loss = t.cross_entropy(logits, labels, split.train_ids);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                               ": loss is not finite");
    t.backward(loss);
    for (StagedParam& sp : staged) {
      Matrix grad = sp.tensor.grad();
      if (tcfg.weight_decay > 0.0) grad += *sp.param * tcfg.weight_decay;
      adam_step(*sp.param, grad, opt[sp.name], tcfg.lr);
    }

    Tape te;
    Tensor eval_logits = forward(te, params, nullptr, nullptr);
    const double train_acc = accuracy_from_logits(eval_logits.value(), labels, split.train_ids);
    const double val_acc =
        split.val_ids.empty()
            ? train_acc
            : accuracy_from_logits(eval_logits.value(), labels, split.val_ids);
    result.history.push_back({epoch, loss_value, train_acc, val_acc});

    if (val_acc > best_val) {
      best_val = val_acc;
      result.params = params;
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= tcfg.patience) {
      break;
    }
  }
  result.best_val_acc = best_val < 0.0 ? 0.0 : best_val;
  return result;
}

}  // namespace detail

/// Trains the bi-typed model. All randomness (init, dropout) flows from
/// tcfg.seed. Returns the best-validation parameters plus per-epoch history.
inline TrainResult<BiteParams> train_bite(const ModelConfig& cfg, const BiteAdjacency& adjs,
                                          const Matrix& x, std::span<const int> labels,
                                          const Split& split, const TrainConfig& tcfg) {
  std::mt19937_64 rng(tcfg.seed);
  BiteParams init = init_bite_params(cfg, x.cols(), rng);
  auto forward = [&](Tape& t, BiteParams& p, std::mt19937_64* r,
                     std::vector<StagedParam>* staged) {
    return bite_forward(t, x, adjs, cfg, p, r, staged).logits;
  };
  return detail::train_loop(std::move(init), forward, labels, split, tcfg, rng);
}

inline TrainResult<BiteParams> train_bite(const ModelConfig& cfg, const BiTypedGraph& g,
                                          const Matrix& x, std::span<const int> labels,
                                          const Split& split, const TrainConfig& tcfg) {
  return train_bite(cfg, BiteAdjacency::build(g), x, labels, split, tcfg);
}

/// Trains the plain-GCN baseline on the document sub-network.
inline TrainResult<GcnParams> train_gcn(std::size_t hidden_dim, std::size_t n_classes,
                                        double dropout, const NormalizedAdjacency& adj_dd,
                                        const Matrix& x_docs, std::span<const int> labels,
                                        const Split& split, const TrainConfig& tcfg) {
  std::mt19937_64 rng(tcfg.seed);
  GcnParams init = init_gcn_params(x_docs.cols(), hidden_dim, n_classes, rng);
  auto forward = [&](Tape& t, GcnParams& p, std::mt19937_64* r,
                     std::vector<StagedParam>* staged) {
    return gcn_baseline_forward(t, x_docs, adj_dd, p, dropout, r, staged).logits;
  };
  return detail::train_loop(std::move(init), forward, labels, split, tcfg, rng);
}

// ---- ablation driver ---------------------------------------------------------

inline const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> v = {"gcn", "b", "r", "a", "ra"};
  return v;
}

/// Everything one ablation run needs. `model.agg` is ignored — the variant
/// decides aggregation — and `train.seed` is overridden per run.
struct AblationInput {
  BiTypedGraph graph;
  BiTypedGraph refined_graph;  // consumed by variants r / ra
  Matrix features;             // joint (docs then words) × vocabulary
  std::vector<int> labels;     // per document; −1 = unlabeled
  ModelConfig model;
  TrainConfig train;
};

/// Runs variant × seed, one row per run. Variants: gcn = document-only
/// baseline; b = bi-typed, mean aggregation; r = b on the refined graph;
/// a = bi-typed, attention aggregation; ra = a on the refined graph.
inline std::vector<ResultRow> run_ablation(const AblationInput& in,
                                           std::span<const std::string> variants,
                                           std::span<const unsigned long> seeds) {
  for (const std::string& v : variants)
    if (std::find(known_variants().begin(), known_variants().end(), v) ==
        known_variants().end())
      throw std::invalid_argument("run_ablation: unknown variant '" + v + "'");
  if (variants.empty() || seeds.empty())
    throw std::invalid_argument("run_ablation: need at least one variant and one seed");

  const std::size_t n_docs = in.graph.doc_count();
  Matrix x_docs(n_docs, in.features.cols());
  for (std::size_t i = 0; i < n_docs; ++i)
    for (std::size_t j = 0; j < in.features.cols(); ++j) x_docs(i, j) = in.features(i, j);

  const bool wants_refined =
      std::find(variants.begin(), variants.end(), "r") != variants.end() ||
      std::find(variants.begin(), variants.end(), "ra") != variants.end();
  const BiteAdjacency base_adjs = BiteAdjacency::build(in.graph);
  const BiteAdjacency refined_adjs =
      wants_refined ? BiteAdjacency::build(in.refined_graph) : BiteAdjacency{};
  const NormalizedAdjacency gcn_adj = normalize(in.graph, EdgeType::DD);

  std::vector<ResultRow> rows;
  for (const std::string& variant : variants) {
    for (unsigned long seed : seeds) {
      TrainConfig tcfg = in.train;
      tcfg.seed = seed;
      const Split split = make_split(in.labels, seed);

      ResultRow row;
      row.variant = variant;
      row.seed = seed;
      if (variant == "gcn") {
        auto r = train_gcn(in.model.hidden_dim, in.model.out_dim, in.model.dropout, gcn_adj,
                           x_docs, in.labels, split, tcfg);
        row.val_acc = r.best_val_acc;
        row.test_acc = evaluate_gcn(gcn_adj, x_docs, r.params, in.labels, split.test_ids);
      } else {
        ModelConfig cfg = in.model;
        cfg.agg = (variant == "a" || variant == "ra") ? AggMode::Attention : AggMode::Mean;
        const BiteAdjacency& adjs =
            (variant == "r" || variant == "ra") ? refined_adjs : base_adjs;
        auto r = train_bite(cfg, adjs, in.features, in.labels, split, tcfg);
        row.val_acc = r.best_val_acc;
        row.test_acc =
            evaluate_bite(cfg, adjs, in.features, r.params, in.labels, split.test_ids);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Per-variant mean and population standard deviation over seeds, in first-
/// appearance order.
inline std::vector<SummaryRow> summarize_results(std::span<const ResultRow> rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ResultRow*>> groups;
  for (const ResultRow& r : rows) {
    auto [it, fresh] = groups.try_emplace(r.variant);
    if (fresh) order.push_back(r.variant);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const std::string& v : order) {
    const auto& g = groups[v];
    SummaryRow s;
    s.variant = v;
    s.n_seeds = g.size();
    auto mean_std = [&](auto proj, double& mean, double& sd) {
      double sum = 0.0;
      for (const ResultRow* r : g) sum += proj(*r);
      mean = sum / static_cast<double>(g.size());
      double var = 0.0;
      for (const ResultRow* r : g) var += (proj(*r) - mean) * (proj(*r) - mean);
      sd = std::sqrt(var / static_cast<double>(g.size()));
    };
    mean_std([](const ResultRow& r) { return r.val_acc; }, s.mean_val, s.std_val);
    mean_std([](const ResultRow& r) { return r.test_acc; }, s.mean_test, s.std_test);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bite
