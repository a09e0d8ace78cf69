#pragma once

// Reverse-mode differentiation over dense matrices with sparse-dense
// products. A Tape owns every value produced during a forward pass and
// records, per operation, a closure that routes the output gradient to the
// operation's parents. Calling backward() walks the record in reverse
// creation order, which is a topological order by construction, so each node
// is visited exactly once.
//
// A Tape and its Tensors belong to one thread. Sparse matrices passed to
// spmm are borrowed, not copied; they must outlive the tape.

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bite/graph.hpp"
#include "bite/linalg.hpp"

namespace bite {

/// Process-wide default for the non-finite-value check that runs after every
/// forward op. On for debug builds, off under NDEBUG; individual Tapes can
/// override either way.
inline bool& finite_check_default() {
#ifdef NDEBUG
  static bool enabled = false;
#else
  static bool enabled = true;
#endif
  return enabled;
}

namespace detail {

struct TapeNode {
  Matrix value;
  Matrix grad;  // allocated iff requires_grad, same shape as value
  bool requires_grad = false;
  std::function<void(const TapeNode&)> backprop;  // empty for leaves
  const char* op = "input";
};

}  // namespace detail

/// Cheap handle into a Tape. Valid only while its Tape is alive.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const { return node().value; }
  const Matrix& grad() const {
    if (!node().requires_grad)
      throw std::logic_error("Tensor::grad: tensor does not require gradients");
    return node().grad;
  }
  bool requires_grad() const { return node().requires_grad; }
  std::size_t rows() const { return node().value.rows(); }
  std::size_t cols() const { return node().value.cols(); }
  bool valid() const { return node_ != nullptr; }

 private:
  friend class Tape;
  explicit Tensor(detail::TapeNode* n) : node_(n) {}
  detail::TapeNode& node() const {
    if (!node_) throw std::logic_error("Tensor: empty handle");
    return *node_;
  }

  detail::TapeNode* node_ = nullptr;
};

class Tape {
 public:
  explicit Tape(bool check_finite = finite_check_default()) : check_finite_(check_finite) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }

  Tensor input(Matrix value, bool requires_grad = false) {
    return make("input", std::move(value), requires_grad, nullptr);
  }

  Tensor matmul(Tensor a, Tensor b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions disagree");
    auto *pa = a.node_, *pb = b.node_;
    return make("matmul", bite::matmul(pa->value, pb->value),
                pa->requires_grad || pb->requires_grad, [pa, pb](const detail::TapeNode& n) {
                  if (pa->requires_grad) pa->grad += matmul_nt(n.grad, pb->value);
                  if (pb->requires_grad) pb->grad += matmul_tn(pa->value, n.grad);
                });
  }

  /// adj · x with adj treated as a constant. Backward routes adjᵀ · g to x.
  Tensor spmm(const SparseMatrix& adj, Tensor x) {
    if (adj.cols != x.rows()) throw std::invalid_argument("spmm: dimension mismatch");
    auto* px = x.node_;
    const SparseMatrix* pa = &adj;
    return make("spmm", adj.multiply(px->value), px->requires_grad,
                [pa, px](const detail::TapeNode& n) {
                  if (px->requires_grad) px->grad += pa->multiply_transpose(n.grad);
                });
  }

  Tensor spmm(const NormalizedAdjacency& adj, Tensor x) { return spmm(adj.matrix, x); }

  Tensor relu(Tensor x) {
    auto* px = x.node_;
    Matrix y = px->value;
    for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
    return make("relu", std::move(y), px->requires_grad, [px](const detail::TapeNode& n) {
      if (!px->requires_grad) return;
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        if (px->value.data()[i] > 0.0) px->grad.data()[i] += n.grad.data()[i];
    });
  }

  /// Row-wise softmax, max-shifted for stability. Every output row sums to 1.
  Tensor softmax_rows(Tensor x) {
    auto* px = x.node_;
    Matrix y = px->value;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double* r = y.row(i);
      double mx = r[0];
      for (std::size_t j = 1; j < y.cols(); ++j) mx = std::max(mx, r[j]);
      double z = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) z += (r[j] = std::exp(r[j] - mx));
      for (std::size_t j = 0; j < y.cols(); ++j) r[j] /= z;
    }
    return make("softmax_rows", std::move(y), px->requires_grad,
                [px](const detail::TapeNode& n) {
                  if (!px->requires_grad) return;
                  for (std::size_t i = 0; i < n.value.rows(); ++i) {
                    const double* s = n.value.row(i);
                    const double* g = n.grad.row(i);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < n.value.cols(); ++j) dot += g[j] * s[j];
                    double* gx = px->grad.row(i);
                    for (std::size_t j = 0; j < n.value.cols(); ++j)
                      gx[j] += s[j] * (g[j] - dot);
                  }
                });
  }

  Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    bool rg = false;
    std::vector<detail::TapeNode*> ps;
    for (const Tensor& t : parts) {
      if (t.rows() != rows) throw std::invalid_argument("concat_cols: row counts disagree");
      cols += t.cols();
      rg = rg || t.requires_grad();
      ps.push_back(t.node_);
    }
    Matrix y(rows, cols);
    std::size_t off = 0;
    for (auto* p : ps) {
      for (std::size_t i = 0; i < rows; ++i)
        std::copy(p->value.row(i), p->value.row(i) + p->value.cols(), y.row(i) + off);
      off += p->value.cols();
    }
    return make("concat_cols", std::move(y), rg, [ps](const detail::TapeNode& n) {
      std::size_t off = 0;
      for (auto* p : ps) {
        if (p->requires_grad)
          for (std::size_t i = 0; i < n.value.rows(); ++i)
            for (std::size_t j = 0; j < p->value.cols(); ++j)
              p->grad(i, j) += n.grad(i, off + j);
        off += p->value.cols();
      }
    });
  }

  Tensor concat_cols(Tensor a, Tensor b) {
    const Tensor parts[] = {a, b};
    return concat_cols(std::span<const Tensor>(parts, 2));
  }

  Tensor concat_rows(Tensor a, Tensor b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("concat_rows: column counts disagree");
    auto *pa = a.node_, *pb = b.node_;
    Matrix y(a.rows() + b.rows(), a.cols());
    std::copy(pa->value.data().begin(), pa->value.data().end(), y.data().begin());
    std::copy(pb->value.data().begin(), pb->value.data().end(),
              y.data().begin() + static_cast<std::ptrdiff_t>(pa->value.size()));
    return make("concat_rows", std::move(y), pa->requires_grad || pb->requires_grad,
                [pa, pb](const detail::TapeNode& n) {
                  const std::size_t split = pa->value.size();
                  if (pa->requires_grad)
                    for (std::size_t i = 0; i < split; ++i)
                      pa->grad.data()[i] += n.grad.data()[i];
                  if (pb->requires_grad)
                    for (std::size_t i = 0; i < pb->value.size(); ++i)
                      pb->grad.data()[i] += n.grad.data()[split + i];
                });
  }

  /// Rows [r0, r1) of x.
  Tensor slice_rows(Tensor x, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > x.rows()) throw std::invalid_argument("slice_rows: bad range");
    auto* px = x.node_;
    Matrix y(r1 - r0, x.cols());
    std::copy(px->value.row(r0), px->value.row(r0) + y.size(), y.data().begin());
    return make("slice_rows", std::move(y), px->requires_grad,
                [px, r0](const detail::TapeNode& n) {
                  if (!px->requires_grad) return;
                  for (std::size_t i = 0; i < n.value.rows(); ++i)
                    for (std::size_t j = 0; j < n.value.cols(); ++j)
                      px->grad(r0 + i, j) += n.grad(i, j);
                });
  }

  /// Columns [c0, c1) of x.
  Tensor slice_cols(Tensor x, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > x.cols()) throw std::invalid_argument("slice_cols: bad range");
    auto* px = x.node_;
    Matrix y(x.rows(), c1 - c0);
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) = px->value(i, c0 + j);
    return make("slice_cols", std::move(y), px->requires_grad,
                [px, c0](const detail::TapeNode& n) {
                  if (!px->requires_grad) return;
                  for (std::size_t i = 0; i < n.value.rows(); ++i)
                    for (std::size_t j = 0; j < n.value.cols(); ++j)
                      px->grad(i, c0 + j) += n.grad(i, j);
                });
  }

  Tensor add(Tensor a, Tensor b) {
    if (!a.value().same_shape(b.value())) throw std::invalid_argument("add: shape mismatch");
    auto *pa = a.node_, *pb = b.node_;
    return make("add", pa->value + pb->value, pa->requires_grad || pb->requires_grad,
                [pa, pb](const detail::TapeNode& n) {
                  if (pa->requires_grad) pa->grad += n.grad;
                  if (pb->requires_grad) pb->grad += n.grad;
                });
  }

  Tensor scale(Tensor x, double s) {
    auto* px = x.node_;
    return make("scale", px->value * s, px->requires_grad, [px, s](const detail::TapeNode& n) {
      if (!px->requires_grad) return;
      for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad.data()[i] += s * n.grad.data()[i];
    });
  }

  /// Elementwise mean of same-shaped tensors.
  Tensor mean(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("mean: no inputs");
    std::vector<detail::TapeNode*> ps;
    bool rg = false;
    for (const Tensor& t : parts) {
      if (!t.value().same_shape(parts.front().value()))
        throw std::invalid_argument("mean: shape mismatch");
      rg = rg || t.requires_grad();
      ps.push_back(t.node_);
    }
    Matrix y = ps.front()->value;
    for (std::size_t k = 1; k < ps.size(); ++k) y += ps[k]->value;
    y *= 1.0 / static_cast<double>(ps.size());
    return make("mean", std::move(y), rg, [ps](const detail::TapeNode& n) {
      const double inv = 1.0 / static_cast<double>(ps.size());
      for (auto* p : ps) {
        if (!p->requires_grad) continue;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          p->grad.data()[i] += inv * n.grad.data()[i];
      }
    });
  }

  Tensor mean(Tensor a, Tensor b) {
    const Tensor parts[] = {a, b};
    return mean(std::span<const Tensor>(parts, 2));
  }

  /// Scales row i of x by s(i, 0). s must be a column vector with x.rows() rows.
  Tensor rowwise_scale(Tensor x, Tensor s) {
    if (s.cols() != 1 || s.rows() != x.rows())
      throw std::invalid_argument("rowwise_scale: scale must be a matching column vector");
    auto *px = x.node_, *ps = s.node_;
    Matrix y = px->value;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double si = ps->value(i, 0);
      double* r = y.row(i);
      for (std::size_t j = 0; j < y.cols(); ++j) r[j] *= si;
    }
    return make("rowwise_scale", std::move(y), px->requires_grad || ps->requires_grad,
                [px, ps](const detail::TapeNode& n) {
                  for (std::size_t i = 0; i < n.value.rows(); ++i) {
                    const double si = ps->value(i, 0);
                    const double* g = n.grad.row(i);
                    const double* xv = px->value.row(i);
                    if (px->requires_grad) {
                      double* gx = px->grad.row(i);
                      for (std::size_t j = 0; j < n.value.cols(); ++j) gx[j] += si * g[j];
                    }
                    if (ps->requires_grad) {
                      double acc = 0.0;
                      for (std::size_t j = 0; j < n.value.cols(); ++j) acc += g[j] * xv[j];
                      ps->grad(i, 0) += acc;
                    }
                  }
                });
  }

  /// Inverted dropout: kept entries are scaled by 1/(1-rate). rate 0 is a
  /// pass-through that records nothing.
  Tensor dropout(Tensor x, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (rate == 0.0) return x;
    auto* px = x.node_;
    Matrix mask(x.rows(), x.cols());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask.data()) m = u(rng) >= rate ? keep_scale : 0.0;
    Matrix y = px->value;
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.data()[i];
    return make("dropout", std::move(y), px->requires_grad,
                [px, mask = std::move(mask)](const detail::TapeNode& n) {
                  if (!px->requires_grad) return;
                  for (std::size_t i = 0; i < n.grad.size(); ++i)
                    px->grad.data()[i] += mask.data()[i] * n.grad.data()[i];
                });
  }

  /// Sum of all entries, as a 1x1 tensor.
  Tensor sum(Tensor x) {
    auto* px = x.node_;
    double s = 0.0;
    for (double v : px->value.data()) s += v;
    Matrix y(1, 1);
    y(0, 0) = s;
    return make("sum", std::move(y), px->requires_grad, [px](const detail::TapeNode& n) {
      if (!px->requires_grad) return;
      const double g = n.grad(0, 0);
      for (double& v : px->grad.data()) v += g;
    });
  }

  /// Masked softmax cross-entropy on logits, mean-reduced over the mask.
  /// Fuses log-sum-exp with the softmax so large logits stay stable.
  /// labels[i] is consulted only for rows i in mask.
  Tensor cross_entropy(Tensor logits, std::span<const int> labels,
                       std::span<const std::size_t> mask) {
    if (mask.empty()) throw std::invalid_argument("cross_entropy: empty mask");
    auto* pz = logits.node_;
    const std::size_t f = logits.cols();
    std::vector<std::size_t> rows(mask.begin(), mask.end());
    std::vector<int> lab(labels.begin(), labels.end());
    for (std::size_t i : rows) {
      if (i >= logits.rows()) throw std::out_of_range("cross_entropy: mask row out of range");
      if (i >= lab.size() || lab[i] < 0 || static_cast<std::size_t>(lab[i]) >= f)
        throw std::out_of_range("cross_entropy: label out of range for row " + std::to_string(i));
    }

    // Per masked row: softmax probabilities (saved for backward) and
    // lse(z) - z[label].
    Matrix probs(rows.size(), f);
    double loss = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double* z = pz->value.row(rows[k]);
      double mx = z[0];
      for (std::size_t j = 1; j < f; ++j) mx = std::max(mx, z[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < f; ++j) sum += std::exp(z[j] - mx);
      const double lse = mx + std::log(sum);
      loss += lse - z[lab[rows[k]]];
      for (std::size_t j = 0; j < f; ++j) probs(k, j) = std::exp(z[j] - lse);
    }
    loss /= static_cast<double>(rows.size());
    Matrix y(1, 1);
    y(0, 0) = loss;
    return make("cross_entropy", std::move(y), pz->requires_grad,
                [pz, rows = std::move(rows), lab = std::move(lab),
                 probs = std::move(probs)](const detail::TapeNode& n) {
                  if (!pz->requires_grad) return;
                  const double g = n.grad(0, 0) / static_cast<double>(rows.size());
                  for (std::size_t k = 0; k < rows.size(); ++k) {
                    double* gz = pz->grad.row(rows[k]);
                    for (std::size_t j = 0; j < probs.cols(); ++j) gz[j] += g * probs(k, j);
                    gz[lab[rows[k]]] -= g;
                  }
                });
  }

  /// Seeds the scalar loss with gradient 1 and propagates through the whole
  /// record in reverse creation order.
  void backward(Tensor loss) {
    if (backward_done_)
      throw std::logic_error("Tape::backward: called twice without reset()");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw std::invalid_argument("Tape::backward: loss must be a 1x1 tensor");
    if (!loss.requires_grad())
      throw std::logic_error("Tape::backward: loss does not depend on any gradient input");
    backward_done_ = true;
    loss.node_->grad(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->requires_grad && it->backprop) it->backprop(*it);
  }

  /// Zeroes all gradients and re-arms backward().
  void reset() {
    for (auto& n : nodes_)
      if (n.requires_grad) std::fill(n.grad.data().begin(), n.grad.data().end(), 0.0);
    backward_done_ = false;
  }

 private:
  Tensor make(const char* op, Matrix value, bool requires_grad,
              std::function<void(const detail::TapeNode&)> backprop) {
    if (check_finite_ && !value.all_finite())
      throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
    auto& n = nodes_.emplace_back();
    n.op = op;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    n.backprop = std::move(backprop);
    return Tensor(&n);
  }

  std::deque<detail::TapeNode> nodes_;
  bool check_finite_;
  bool backward_done_ = false;
};

struct AdamState {
  Matrix m, v;
  long step = 0;
};

/// One Adam update with bias correction. Moments are lazily sized on first
/// use. Weight decay, when wanted, belongs in the gradient the caller passes.
inline void adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (!param.same_shape(grad)) throw std::invalid_argument("adam_step: grad shape mismatch");
  if (state.m.empty()) {
    state.m = Matrix(param.rows(), param.cols());
    state.v = Matrix(param.rows(), param.cols());
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data()[i];
    double& m = state.m.data()[i];
    double& v = state.v.data()[i];
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    param.data()[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
  }
}

}  // namespace bite
