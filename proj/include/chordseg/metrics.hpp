#pragma once

// Frame-level segmentation scores at chord granularity.
//
// Pairwise: A = {(i<j) : ref_i == ref_j}, E likewise for the estimate;
//   P = |A & E| / |E|, R = |A & E| / |A|. Both sets empty scores (1, 1, 1);
//   a ratio with an empty denominator is 0.
// Entropy: S_O = 1 - H(E|A) / log2 N_E, S_U = 1 - H(A|E) / log2 N_A, where N_*
//   counts distinct labels. A single-label side has normaliser 0 and scores 1.
//
// Entropies are summed over count multisets in sorted order, so swapping the
// arguments or renaming labels gives bit-identical results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chordseg/error.hpp"
#include "chordseg/segmentation.hpp"

namespace chordseg {

struct PairwiseScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EntropyScores {
  double over = 0.0;   // S_O
  double under = 0.0;  // S_U
  double f1 = 0.0;     // S_F1
};

struct SegmentScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double over = 0.0;
  double under = 0.0;
  double entropy_f1 = 0.0;
};

inline double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

namespace detail {

struct Contingency {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> ref_counts;
  std::vector<std::uint64_t> est_counts;
  std::vector<std::uint64_t> joint_counts;
};

template <class Label>
Contingency contingency(std::span<const Label> ref, std::span<const Label> est) {
  if (ref.size() != est.size())
    throw LengthMismatch("reference has " + std::to_string(ref.size()) + " frames, estimate " +
                         std::to_string(est.size()));
  if (ref.empty()) throw EmptyInput("cannot score empty labelings");
  std::map<Label, std::uint64_t> r, e;
  std::map<std::pair<Label, Label>, std::uint64_t> j;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ++r[ref[i]];
    ++e[est[i]];
    ++j[{ref[i], est[i]}];
  }
  Contingency c;
  c.n = ref.size();
  for (const auto& [k, v] : r) c.ref_counts.push_back(v);
  for (const auto& [k, v] : e) c.est_counts.push_back(v);
  for (const auto& [k, v] : j) c.joint_counts.push_back(v);
  std::sort(c.ref_counts.begin(), c.ref_counts.end());
  std::sort(c.est_counts.begin(), c.est_counts.end());
  std::sort(c.joint_counts.begin(), c.joint_counts.end());
  return c;
}

inline std::uint64_t same_label_pairs(std::span<const std::uint64_t> counts) {
  std::uint64_t s = 0;
  for (auto c : counts) s += c * (c - 1) / 2;
  return s;
}

/// Entropy in bits of the distribution counts / n. Expects sorted counts.
inline double entropy_bits(std::span<const std::uint64_t> counts, std::uint64_t n) {
  double h = 0.0;
  const auto total = static_cast<double>(n);
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline PairwiseScores pairwise_from(const Contingency& c) {
  const auto a = same_label_pairs(c.ref_counts);
  const auto e = same_label_pairs(c.est_counts);
  const auto both = same_label_pairs(c.joint_counts);
  if (a == 0 && e == 0) return {1.0, 1.0, 1.0};
  PairwiseScores s;
  s.precision = e ? static_cast<double>(both) / static_cast<double>(e) : 0.0;
  s.recall = a ? static_cast<double>(both) / static_cast<double>(a) : 0.0;
  s.f1 = harmonic_mean(s.precision, s.recall);
  return s;
}

inline EntropyScores entropy_from(const Contingency& c) {
  const double h_joint = entropy_bits(c.joint_counts, c.n);
  const double h_ref = entropy_bits(c.ref_counts, c.n);
  const double h_est = entropy_bits(c.est_counts, c.n);
  const double h_est_given_ref = std::max(0.0, h_joint - h_ref);
  const double h_ref_given_est = std::max(0.0, h_joint - h_est);
  const auto score = [](double conditional, std::size_t n_labels) {
    if (n_labels < 2) return 1.0;
    return std::clamp(1.0 - conditional / std::log2(static_cast<double>(n_labels)), 0.0, 1.0);
  };
  EntropyScores s;
  s.over = score(h_est_given_ref, c.est_counts.size());
  s.under = score(h_ref_given_est, c.ref_counts.size());
  s.f1 = harmonic_mean(s.over, s.under);
  return s;
}

}  // namespace detail

template <class Label>
PairwiseScores pairwise_scores(std::span<const Label> ref, std::span<const Label> est) {
  return detail::pairwise_from(detail::contingency(ref, est));
}

template <class Label>
EntropyScores nce_scores(std::span<const Label> ref, std::span<const Label> est) {
  return detail::entropy_from(detail::contingency(ref, est));
}

inline SegmentScores score_pair(const Segmentation& ref, const Segmentation& est) {
  if (ref.length() != est.length())
    throw DataError("coverage mismatch: reference covers " + std::to_string(ref.length()) +
                    " chords, estimate " + std::to_string(est.length()));
  const auto r = ref.frame_labels();
  const auto e = est.frame_labels();
  const auto c = detail::contingency(std::span<const std::string>(r), std::span<const std::string>(e));
  const auto p = detail::pairwise_from(c);
  const auto h = detail::entropy_from(c);
  return {p.precision, p.recall, p.f1, h.over, h.under, h.f1};
}

struct TrackScores {
  std::string id;
  SegmentScores scores;
};

struct CorpusScores {
  SegmentScores mean;
  std::vector<TrackScores> tracks;
};

/// Unweighted mean of every score over tracks.
inline CorpusScores evaluate_corpus(std::span<const std::pair<Segmentation, Segmentation>> pairs,
                                    std::span<const std::string> ids = {}) {
  if (pairs.empty()) throw EmptyInput("nothing to evaluate");
  CorpusScores out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto s = score_pair(pairs[i].first, pairs[i].second);
    out.tracks.push_back({i < ids.size() ? ids[i] : std::to_string(i), s});
  }
  const auto n = static_cast<double>(out.tracks.size());
  auto& m = out.mean;
  for (const auto& t : out.tracks) {
    m.precision += t.scores.precision;
    m.recall += t.scores.recall;
    m.f1 += t.scores.f1;
    m.over += t.scores.over;
    m.under += t.scores.under;
    m.entropy_f1 += t.scores.entropy_f1;
  }
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  m.over /= n;
  m.under /= n;
  m.entropy_f1 /= n;
  return out;
}

}  // namespace chordseg
