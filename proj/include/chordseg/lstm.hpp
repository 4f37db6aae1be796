#pragma once

// Stacked unidirectional LSTM sequence labeller.
//
//   gates  a = W x + U h + b, split as i, f, g, o
//   i, f, o = sigmoid(.), g = tanh(.)
//   c' = f * c + i * g,  h' = o * tanh(c')
//   logits_t = P h_t + q  (top layer)
//
// All parameters live in one flat vector, layer-major: for each layer W
// (4H x in, row-major, gate blocks i f g o), then U (4H x H), then b (4H);
// the projection P (n_labels x H) and q (n_labels) come last.
// Inverted dropout is applied to the activations passed between layers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chordseg/error.hpp"
#include "chordseg/metrics.hpp"
#include "chordseg/random.hpp"

namespace chordseg {

struct LstmShape {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t layers = 1;
  std::size_t n_labels = 0;

  std::size_t layer_input(std::size_t l) const { return l == 0 ? input_dim : hidden; }

  std::size_t layer_size(std::size_t l) const {
    return 4 * hidden * layer_input(l) + 4 * hidden * hidden + 4 * hidden;
  }

  std::size_t layer_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < l; ++k) off += layer_size(k);
    return off;
  }

  std::size_t projection_offset() const { return layer_offset(layers); }

  /// 4H(d + H + 1) + (L - 1) 4H(2H + 1) + K(H + 1).
  std::size_t parameter_count() const { return projection_offset() + n_labels * hidden + n_labels; }

  friend bool operator==(const LstmShape&, const LstmShape&) = default;
};

/// Row-major matrix view over the flat parameter block.
template <class T>
struct MatrixView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  T* row(std::size_t r) const { return data + r * cols; }
};

template <class T>
struct LayerView {
  MatrixView<T> w;  // 4H x in
  MatrixView<T> u;  // 4H x H
  T* b = nullptr;   // 4H
};

struct LstmParams {
  LstmShape shape;
  std::vector<double> values;

  LstmParams() = default;
  explicit LstmParams(const LstmShape& s) : shape(s), values(s.parameter_count(), 0.0) {}

  template <class Self>
  static auto layer_of(Self& self, std::size_t l) {
    using T = std::remove_reference_t<decltype(self.values[0])>;
    const auto& s = self.shape;
    T* base = self.values.data() + s.layer_offset(l);
    const std::size_t in = s.layer_input(l), g = 4 * s.hidden;
    return LayerView<T>{{base, g, in}, {base + g * in, g, s.hidden}, base + g * in + g * s.hidden};
  }
  LayerView<const double> layer(std::size_t l) const { return layer_of(*this, l); }
  LayerView<double> layer(std::size_t l) { return layer_of(*this, l); }

  MatrixView<const double> projection() const {
    return {values.data() + shape.projection_offset(), shape.n_labels, shape.hidden};
  }
  const double* projection_bias() const {
    return values.data() + shape.projection_offset() + shape.n_labels * shape.hidden;
  }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct SegmenterConfig {
  std::size_t hidden_size = 100;
  std::size_t num_layers = 1;
  double dropout = 0.0;
  std::size_t batch_tracks = 128;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 0;
  std::size_t n_labels = 0;

  void validate() const {
    if (hidden_size < 1 || num_layers < 1 || !(dropout >= 0.0 && dropout < 1.0) || batch_tracks < 1 ||
        !(learning_rate > 0.0) || n_labels < 1)
      throw DataError("invalid segmenter configuration");
  }
};

/// One track: per-chord input vectors (flat, steps x dim) and label indices.
struct LabeledSequence {
  std::size_t dim = 0;
  std::vector<double> inputs;
  std::vector<int> labels;

  std::size_t steps() const { return dim ? inputs.size() / dim : 0; }
  std::span<const double> step(std::size_t t) const { return {inputs.data() + t * dim, dim}; }
};

namespace detail {

inline double sigmoid_d(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y += A x
inline void gemv(MatrixView<const double> a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// y += A^T x
inline void gemv_t(MatrixView<const double> a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.row(r);
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
  }
}

// G += a b^T
inline void outer_add(MatrixView<double> g, const double* a, const double* b) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = g.row(r);
    for (std::size_t c = 0; c < g.cols; ++c) row[c] += ar * b[c];
  }
}

// Gate pre-activations to activations in place; returns c' and h'.
inline void cell_update(std::size_t hidden, double* gates, const double* c_prev, double* c, double* h) {
  double* i = gates;
  double* f = gates + hidden;
  double* g = gates + 2 * hidden;
  double* o = gates + 3 * hidden;
  for (std::size_t j = 0; j < hidden; ++j) {
    i[j] = sigmoid_d(i[j]);
    f[j] = sigmoid_d(f[j]);
    g[j] = std::tanh(g[j]);
    o[j] = sigmoid_d(o[j]);
    c[j] = f[j] * c_prev[j] + i[j] * g[j];
    h[j] = o[j] * std::tanh(c[j]);
  }
}

inline void check_input(const LstmShape& shape, std::size_t dim) {
  if (dim != shape.input_dim)
    throw DimensionMismatch("input vectors have dimension " + std::to_string(dim) + ", model expects " +
                            std::to_string(shape.input_dim));
}

}  // namespace detail

struct CellState {
  std::vector<double> h;
  std::vector<double> c;
};

/// One LSTM step of layer `l`.
inline CellState lstm_cell(std::span<const double> x, std::span<const double> h,
                           std::span<const double> c, const LstmParams& params, std::size_t l = 0) {
  const auto& s = params.shape;
  if (l >= s.layers || x.size() != s.layer_input(l) || h.size() != s.hidden || c.size() != s.hidden)
    throw DimensionMismatch("lstm_cell: inconsistent dimensions");
  const auto layer = params.layer(l);
  std::vector<double> gates(layer.b, layer.b + 4 * s.hidden);
  detail::gemv(layer.w, x.data(), gates.data());
  detail::gemv(layer.u, h.data(), gates.data());
  CellState out{std::vector<double>(s.hidden), std::vector<double>(s.hidden)};
  detail::cell_update(s.hidden, gates.data(), c.data(), out.c.data(), out.h.data());
  return out;
}

namespace detail {

// Activations of one sequence, kept for backpropagation.
struct SequenceTrace {
  std::size_t steps = 0;
  std::vector<std::vector<double>> x;      // per layer: steps x in (after dropout)
  std::vector<std::vector<double>> masks;  // per layer >= 1: steps x H dropout scale
  std::vector<std::vector<double>> gates;  // per layer: steps x 4H activations
  std::vector<std::vector<double>> c;      // per layer: steps x H
  std::vector<std::vector<double>> h;      // per layer: steps x H
  std::vector<double> logits;              // steps x K
};

inline SequenceTrace run_forward(const LstmParams& params, std::span<const double> inputs,
                                 std::size_t steps, double dropout, Rng* rng) {
  const auto& s = params.shape;
  const std::size_t H = s.hidden;
  SequenceTrace tr;
  tr.steps = steps;
  tr.x.resize(s.layers);
  tr.masks.resize(s.layers);
  tr.gates.resize(s.layers);
  tr.c.resize(s.layers);
  tr.h.resize(s.layers);
  tr.x[0].assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(steps * s.input_dim));

  const std::vector<double> zeros(H, 0.0);
  for (std::size_t l = 0; l < s.layers; ++l) {
    const std::size_t in = s.layer_input(l);
    if (l > 0) {
      tr.x[l] = tr.h[l - 1];
      if (rng && dropout > 0.0) {
        tr.masks[l].resize(steps * H);
        const double keep = 1.0 - dropout;
        for (auto& m : tr.masks[l]) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
        for (std::size_t k = 0; k < tr.x[l].size(); ++k) tr.x[l][k] *= tr.masks[l][k];
      }
    }
    const auto layer = params.layer(l);
    tr.gates[l].resize(steps * 4 * H);
    tr.c[l].resize(steps * H);
    tr.h[l].resize(steps * H);
    for (std::size_t t = 0; t < steps; ++t) {
      double* gates = tr.gates[l].data() + t * 4 * H;
      std::copy(layer.b, layer.b + 4 * H, gates);
      gemv(layer.w, tr.x[l].data() + t * in, gates);
      const double* h_prev = t ? tr.h[l].data() + (t - 1) * H : zeros.data();
      const double* c_prev = t ? tr.c[l].data() + (t - 1) * H : zeros.data();
      gemv(layer.u, h_prev, gates);
      cell_update(H, gates, c_prev, tr.c[l].data() + t * H, tr.h[l].data() + t * H);
    }
  }

  const std::size_t K = s.n_labels;
  tr.logits.resize(steps * K);
  const auto& top = tr.h[s.layers - 1];
  for (std::size_t t = 0; t < steps; ++t) {
    double* y = tr.logits.data() + t * K;
    std::copy(params.projection_bias(), params.projection_bias() + K, y);
    gemv(params.projection(), top.data() + t * H, y);
  }
  return tr;
}

inline void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (auto& x : v) z += (x = std::exp(x - m));
  for (auto& x : v) x /= z;
}

// Adds the gradient of sum_t weight[t] * CE(logits_t, label_t) to `grad`
// and returns that weighted loss.
inline double backward(const LstmParams& params, const SequenceTrace& tr, std::span<const int> labels,
                       std::span<const double> weights, std::span<double> grad) {
  const auto& s = params.shape;
  const std::size_t H = s.hidden, K = s.n_labels, T = tr.steps;
  double loss = 0.0;
  std::vector<double> dh_above(T * H, 0.0);
  {
    const auto proj = params.projection();
    MatrixView<double> g_proj{grad.data() + s.projection_offset(), K, H};
    double* g_bias = grad.data() + s.projection_offset() + K * H;
    std::vector<double> p(K);
    const auto& top = tr.h[s.layers - 1];
    for (std::size_t t = 0; t < T; ++t) {
      const double w = weights[t];
      if (w == 0.0) continue;
      std::copy(tr.logits.begin() + static_cast<std::ptrdiff_t>(t * K),
                tr.logits.begin() + static_cast<std::ptrdiff_t>((t + 1) * K), p.begin());
      softmax_inplace(p);
      const auto label = static_cast<std::size_t>(labels[t]);
      loss -= w * std::log(std::max(p[label], std::numeric_limits<double>::min()));
      for (std::size_t k = 0; k < K; ++k) p[k] = w * (p[k] - (k == label ? 1.0 : 0.0));
      outer_add(g_proj, p.data(), top.data() + t * H);
      for (std::size_t k = 0; k < K; ++k) g_bias[k] += p[k];
      gemv_t(proj, p.data(), dh_above.data() + t * H);
    }
  }

  std::vector<double> dh_next(H), dc_next(H), da(4 * H);
  const std::vector<double> zeros(H, 0.0);
  for (std::size_t l = s.layers; l-- > 0;) {
    const std::size_t in = s.layer_input(l);
    const auto layer = params.layer(l);
    double* base = grad.data() + s.layer_offset(l);
    MatrixView<double> g_w{base, 4 * H, in};
    MatrixView<double> g_u{base + 4 * H * in, 4 * H, H};
    double* g_b = base + 4 * H * in + 4 * H * H;

    std::vector<double> dx(l > 0 ? T * in : 0, 0.0);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* gates = tr.gates[l].data() + t * 4 * H;
      const double* gi = gates;
      const double* gf = gates + H;
      const double* gg = gates + 2 * H;
      const double* go = gates + 3 * H;
      const double* c = tr.c[l].data() + t * H;
      const double* c_prev = t ? tr.c[l].data() + (t - 1) * H : zeros.data();
      const double* h_prev = t ? tr.h[l].data() + (t - 1) * H : zeros.data();
      for (std::size_t j = 0; j < H; ++j) {
        const double dh = dh_above[t * H + j] + dh_next[j];
        const double tc = std::tanh(c[j]);
        const double dc = dc_next[j] + dh * go[j] * (1.0 - tc * tc);
        da[j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
        da[H + j] = dc * c_prev[j] * gf[j] * (1.0 - gf[j]);
        da[2 * H + j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
        da[3 * H + j] = dh * tc * go[j] * (1.0 - go[j]);
        dc_next[j] = dc * gf[j];
      }
      outer_add(g_w, da.data(), tr.x[l].data() + t * in);
      outer_add(g_u, da.data(), h_prev);
      for (std::size_t k = 0; k < 4 * H; ++k) g_b[k] += da[k];
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      gemv_t(layer.u, da.data(), dh_next.data());
      if (l > 0) gemv_t(layer.w, da.data(), dx.data() + t * in);
    }
    if (l > 0) {
      if (!tr.masks[l].empty())
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] *= tr.masks[l][k];
      dh_above = std::move(dx);
    }
  }
  return loss;
}

}  // namespace detail

/// Per-step logits (steps x n_labels, flat). Dropout only when `rng` is given
/// and `train_mode` is set.
inline std::vector<double> forward(std::span<const double> inputs, std::size_t input_dim,
                                   const LstmParams& params, bool train_mode = false, double dropout = 0.0,
                                   Rng* rng = nullptr) {
  detail::check_input(params.shape, input_dim);
  if (inputs.empty() || inputs.size() % input_dim != 0) throw DimensionMismatch("bad input length");
  const std::size_t steps = inputs.size() / input_dim;
  return detail::run_forward(params, inputs, steps, dropout, train_mode ? rng : nullptr).logits;
}

/// A batch padded to its longest sequence; mask marks real time steps.
struct PaddedBatch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::size_t dim = 0;
  std::vector<double> inputs;    // size x steps x dim
  std::vector<int> labels;       // size x steps
  std::vector<std::uint8_t> mask;

  static PaddedBatch from(std::span<const LabeledSequence* const> seqs) {
    PaddedBatch b;
    b.size = seqs.size();
    for (const auto* s : seqs) b.steps = std::max(b.steps, s->steps());
    b.dim = seqs.empty() ? 0 : seqs.front()->dim;
    b.inputs.assign(b.size * b.steps * b.dim, 0.0);
    b.labels.assign(b.size * b.steps, 0);
    b.mask.assign(b.size * b.steps, 0);
    for (std::size_t i = 0; i < b.size; ++i) {
      const auto& s = *seqs[i];
      if (s.dim != b.dim) throw DimensionMismatch("sequences in a batch differ in dimension");
      std::copy(s.inputs.begin(), s.inputs.end(), b.inputs.begin() + static_cast<std::ptrdiff_t>(i * b.steps * b.dim));
      for (std::size_t t = 0; t < s.steps(); ++t) {
        b.labels[i * b.steps + t] = s.labels[t];
        b.mask[i * b.steps + t] = 1;
      }
    }
    return b;
  }

  std::size_t valid_steps() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

/// Mean softmax cross-entropy over the unmasked steps of a batch; the gradient
/// is written to `grad` (resized to the parameter count).
inline double batch_loss_and_gradient(const LstmParams& params, const PaddedBatch& batch,
                                      std::vector<double>& grad, double dropout = 0.0, Rng* rng = nullptr) {
  detail::check_input(params.shape, batch.dim);
  grad.assign(params.values.size(), 0.0);
  const std::size_t valid = batch.valid_steps();
  if (valid == 0) return 0.0;
  const double w = 1.0 / static_cast<double>(valid);
  std::vector<double> weights(batch.steps);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    for (std::size_t t = 0; t < batch.steps; ++t) weights[t] = batch.mask[i * batch.steps + t] ? w : 0.0;
    for (std::size_t t = 0; t < batch.steps; ++t)
      if (weights[t] != 0.0) {
        const int y = batch.labels[i * batch.steps + t];
        if (y < 0 || static_cast<std::size_t>(y) >= params.shape.n_labels)
          throw DataError("label index " + std::to_string(y) + " out of range");
      }
    const auto inputs = std::span<const double>(batch.inputs).subspan(i * batch.steps * batch.dim,
                                                                       batch.steps * batch.dim);
    const auto tr = detail::run_forward(params, inputs, batch.steps, dropout, rng);
    loss += detail::backward(params, tr,
                             std::span<const int>(batch.labels).subspan(i * batch.steps, batch.steps),
                             weights, grad);
  }
  return loss;
}

/// Loss and gradient of a single sequence, no dropout.
inline double sequence_loss_and_gradient(const LstmParams& params, const LabeledSequence& seq,
                                         std::vector<double>& grad) {
  const LabeledSequence* one[] = {&seq};
  return batch_loss_and_gradient(params, PaddedBatch::from(one), grad);
}

inline double sequence_loss(const LstmParams& params, const LabeledSequence& seq) {
  const auto logits = forward(seq.inputs, seq.dim, params);
  const std::size_t K = params.shape.n_labels;
  double loss = 0.0;
  std::vector<double> p(K);
  for (std::size_t t = 0; t < seq.steps(); ++t) {
    std::copy(logits.begin() + static_cast<std::ptrdiff_t>(t * K),
              logits.begin() + static_cast<std::ptrdiff_t>((t + 1) * K), p.begin());
    detail::softmax_inplace(p);
    loss -= std::log(std::max(p[static_cast<std::size_t>(seq.labels[t])], std::numeric_limits<double>::min()));
  }
  return loss / static_cast<double>(seq.steps());
}

/// Per-step softmax probabilities (steps x n_labels, flat).
inline std::vector<double> predict_probabilities(std::span<const double> inputs, std::size_t dim,
                                                 const LstmParams& params) {
  auto logits = forward(inputs, dim, params);
  const std::size_t K = params.shape.n_labels;
  for (std::size_t off = 0; off < logits.size(); off += K)
    detail::softmax_inplace(std::span<double>(logits).subspan(off, K));
  return logits;
}

/// Argmax label per step; ties go to the lowest index.
inline std::vector<int> predict_sections(std::span<const double> inputs, std::size_t dim,
                                         const LstmParams& params) {
  const auto logits = forward(inputs, dim, params);
  const std::size_t K = params.shape.n_labels;
  std::vector<int> out;
  for (std::size_t off = 0; off < logits.size(); off += K) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (logits[off + k] > logits[off + best]) best = k;
    out.push_back(static_cast<int>(best));
  }
  return out;
}

/// Uniform +-1/sqrt(H) weights, zero biases except the forget gate at +1.
inline LstmParams initialize_lstm(const LstmShape& shape, Rng& rng) {
  LstmParams p(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  for (std::size_t l = 0; l < shape.layers; ++l) {
    auto layer = p.layer(l);
    for (std::size_t k = 0; k < layer.w.rows * layer.w.cols; ++k) layer.w.data[k] = rng.uniform(-bound, bound);
    for (std::size_t k = 0; k < layer.u.rows * layer.u.cols; ++k) layer.u.data[k] = rng.uniform(-bound, bound);
    for (std::size_t j = 0; j < shape.hidden; ++j) layer.b[shape.hidden + j] = 1.0;
  }
  const std::size_t off = shape.projection_offset();
  for (std::size_t k = 0; k < shape.n_labels * shape.hidden; ++k) p.values[off + k] = rng.uniform(-bound, bound);
  return p;
}

class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = b1_ * m_[k] + (1.0 - b1_) * grad[k];
      v_[k] = b2_ * v_[k] + (1.0 - b2_) * grad[k] * grad[k];
      params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

struct SegmenterEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_f1 = 0.0;  // NaN-free: 0 when there is no validation set

  friend bool operator==(const SegmenterEpoch&, const SegmenterEpoch&) = default;
};

struct SegmenterTraining {
  LstmParams params;
  std::vector<SegmenterEpoch> log;
  std::size_t best_epoch = 0;  // 0 = initialisation
};

/// Mean pairwise F1 of predictions against reference labels.
inline double mean_pairwise_f1(const LstmParams& params, std::span<const LabeledSequence> seqs) {
  double sum = 0.0;
  for (const auto& s : seqs) {
    const auto pred = predict_sections(s.inputs, s.dim, params);
    sum += pairwise_scores(std::span<const int>(s.labels), std::span<const int>(pred)).f1;
  }
  return seqs.empty() ? 0.0 : sum / static_cast<double>(seqs.size());
}

/// Adam on the mean per-step cross-entropy with batches of `batch_tracks`
/// tracks. With a validation set, keeps the parameters of the epoch with the
/// best validation pairwise F1 and stops after `patience` epochs without
/// improvement. Deterministic for a fixed seed.
inline SegmenterTraining train_segmenter(std::span<const LabeledSequence> train,
                                         std::span<const LabeledSequence> validation,
                                         const SegmenterConfig& config) {
  config.validate();
  if (train.empty()) throw EmptyInput("no training sequences");
  const std::size_t dim = train.front().dim;
  for (const auto& s : train)
    if (s.dim != dim || s.steps() == 0 || s.labels.size() != s.steps())
      throw DimensionMismatch("training sequences must be non-empty with consistent dimensions");

  Rng rng(config.seed);
  const LstmShape shape{dim, config.hidden_size, config.num_layers, config.n_labels};
  SegmenterTraining result;
  result.params = initialize_lstm(shape, rng);
  LstmParams best = result.params;
  double best_f1 = validation.empty() ? 0.0 : mean_pairwise_f1(result.params, validation);

  Adam adam(result.params.values.size(), config.learning_rate);
  std::vector<double> grad;
  std::vector<std::size_t> order(train.size());
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps_sum = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_tracks) {
      std::vector<const LabeledSequence*> members;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_tracks); ++i)
        members.push_back(&train[order[i]]);
      const auto batch = PaddedBatch::from(members);
      const double loss = batch_loss_and_gradient(result.params, batch, grad, config.dropout, &rng);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("non-finite segmenter loss at epoch " + std::to_string(epoch));
      const std::size_t valid = batch.valid_steps();
      loss_sum += loss * static_cast<double>(valid);
      steps_sum += valid;
      adam.step(result.params.values, grad);
    }

    SegmenterEpoch e{epoch, loss_sum / static_cast<double>(steps_sum), 0.0};
    if (!validation.empty()) {
      e.validation_f1 = mean_pairwise_f1(result.params, validation);
      if (e.validation_f1 > best_f1) {
        best_f1 = e.validation_f1;
        best = result.params;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.log.push_back(e);
    if (!validation.empty() && config.patience > 0 && since_best >= config.patience) break;
  }
  if (validation.empty()) {
    result.best_epoch = result.log.size();
  } else {
    result.params = std::move(best);
  }
  return result;
}

using GradientFn = std::function<double(const LstmParams&, const LabeledSequence&, std::vector<double>&)>;

/// Max over parameters of |g_a - g_n| / max(|g_a|, |g_n|, 1e-8), where g_n is
/// the central finite difference of the sequence loss.
inline double gradient_check(const LstmParams& params, const LabeledSequence& example,
                             double epsilon = 1e-5, const GradientFn& analytic = sequence_loss_and_gradient) {
  std::vector<double> grad;
  analytic(params, example, grad);
  LstmParams probe = params;
  double worst = 0.0;
  for (std::size_t k = 0; k < probe.values.size(); ++k) {
    const double orig = probe.values[k];
    probe.values[k] = orig + epsilon;
    const double up = sequence_loss(probe, example);
    probe.values[k] = orig - epsilon;
    const double down = sequence_loss(probe, example);
    probe.values[k] = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(grad[k]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(grad[k] - numeric) / denom);
  }
  return worst;
}

}  // namespace chordseg
