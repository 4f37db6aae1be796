#pragma once

// Skipgram with negative sampling: the per-example objective, its gradient,
// frequent-token subsampling and the unigram^(3/4) negative sampler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "chordseg/random.hpp"

namespace chordseg {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// L = -log s(u.v_c) - sum_n log s(-u.v_n). `negatives` holds k rows of size d.
inline double skipgram_loss(std::span<const double> center, std::span<const double> context,
                            std::span<const double> negatives) {
  const std::size_t d = center.size();
  double loss = -log_sigmoid(dot(center, context));
  for (std::size_t off = 0; off < negatives.size(); off += d)
    loss -= log_sigmoid(-dot(center, negatives.subspan(off, d)));
  return loss;
}

/// Writes dL/du, dL/dv_c and dL/dv_n (one row per negative draw) and returns L.
inline double skipgram_step(std::span<const double> center, std::span<const double> context,
                            std::span<const double> negatives, std::span<double> grad_center,
                            std::span<double> grad_context, std::span<double> grad_negatives) {
  const std::size_t d = center.size();
  std::fill(grad_center.begin(), grad_center.end(), 0.0);

  const double s_pos = dot(center, context);
  double loss = -log_sigmoid(s_pos);
  const double coef_pos = sigmoid(s_pos) - 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    grad_center[j] += coef_pos * context[j];
    grad_context[j] = coef_pos * center[j];
  }
  for (std::size_t off = 0; off < negatives.size(); off += d) {
    const auto neg = negatives.subspan(off, d);
    const double s_neg = dot(center, neg);
    loss -= log_sigmoid(-s_neg);
    const double coef = sigmoid(s_neg);
    for (std::size_t j = 0; j < d; ++j) {
      grad_center[j] += coef * neg[j];
      grad_negatives[off + j] = coef * center[j];
    }
  }
  return loss;
}

/// Probability that one occurrence of a token is dropped: max(0, 1 - sqrt(t / f)).
inline double discard_probability(std::uint64_t count, std::uint64_t total, double t) {
  const double f = static_cast<double>(count) / static_cast<double>(total);
  return std::max(0.0, 1.0 - std::sqrt(t / f));
}

/// Draws vocabulary indices with probability proportional to count^0.75.
class NegativeSampler {
 public:
  NegativeSampler() = default;
  explicit NegativeSampler(std::span<const std::uint64_t> counts) {
    cumulative_.reserve(counts.size());
    double acc = 0.0;
    for (auto c : counts) {
      acc += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(acc);
    }
  }

  std::size_t size() const { return cumulative_.size(); }

  std::uint32_t draw(Rng& rng) const {
    const double x = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return static_cast<std::uint32_t>(
        std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), size() - 1));
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(cumulative_.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (cumulative_[i] - prev) / cumulative_.back();
      prev = cumulative_[i];
    }
    return p;
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace chordseg
