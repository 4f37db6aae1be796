#pragma once

// Symbolic segmentation baselines: FORM (cover the sequence with repeated
// chord patterns), a random segmenter and a fixed pop-song template.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chordseg/error.hpp"
#include "chordseg/harte.hpp"
#include "chordseg/random.hpp"
#include "chordseg/segmentation.hpp"
#include "chordseg/suffix_array.hpp"

namespace chordseg {

/// Greedy cover by maximal repeats, longest first. A pattern claims every
/// occurrence whose span is still wholly unclaimed, scanning left to right,
/// provided at least two occurrences can be claimed; all of them share one
/// label "P<k>". Unclaimed positions join the preceding section (or the
/// following one at the start of the sequence).
template <class Token>
Segmentation form_segment(std::span<const Token> seq, std::size_t min_len = 2) {
  if (seq.empty()) throw EmptyInput("FORM needs a non-empty sequence");
  const std::size_t n = seq.size();
  std::vector<int> owner(n, -1);          // pattern label per position
  std::vector<bool> span_start(n, false);  // a claimed span begins here

  int next_label = 0;
  for (const auto& pattern : repeated_subsequences(seq, min_len)) {
    const std::size_t len = pattern.length();
    std::vector<std::size_t> claim;
    std::size_t free_from = 0;  // occurrences of one pattern must not overlap each other
    for (auto pos : pattern.occurrences) {
      if (pos < free_from) continue;
      bool free = true;
      for (std::size_t i = pos; i < pos + len && free; ++i) free = owner[i] < 0;
      if (free) {
        claim.push_back(pos);
        free_from = pos + len;
      }
    }
    if (claim.size() < 2) continue;
    for (auto pos : claim) {
      span_start[pos] = true;
      for (std::size_t i = pos; i < pos + len; ++i) owner[i] = next_label;
    }
    ++next_label;
  }

  Segmentation seg;
  const auto label_of = [](int k) { return "P" + std::to_string(k); };
  for (std::size_t i = 0; i < n; ++i) {
    if (span_start[i]) {
      seg.segments.push_back({i, i + 1, label_of(owner[i])});
    } else if (seg.segments.empty()) {
      continue;  // leading unclaimed run, attached below
    } else {
      seg.segments.back().end = i + 1;
    }
  }
  if (seg.segments.empty()) {
    seg.segments.push_back({0, n, label_of(0)});
  } else {
    seg.segments.front().start = 0;
  }
  return seg;
}

/// FORM on raw Harte labels.
inline Segmentation form_raw_segment(std::span<const std::string> chords) {
  return form_segment(chords);
}

/// FORM on the 25-symbol root/quality alphabet.
inline Segmentation form_simple_segment(std::span<const std::string> chords) {
  std::vector<std::string> tokens;
  tokens.reserve(chords.size());
  for (const auto& c : chords) tokens.push_back(simplified_token(c));
  return form_segment(std::span<const std::string>(tokens));
}

/// Spreadsheet-style column name: 0 -> "A", 25 -> "Z", 26 -> "AA".
inline std::string letter_label(std::size_t k) {
  std::string s;
  for (++k; k > 0; k = (k - 1) / 26) s.insert(s.begin(), static_cast<char>('A' + (k - 1) % 26));
  return s;
}

/// Segment lengths drawn uniformly from [1, remaining]; a fresh label each.
inline Segmentation random_segment(std::size_t n, Rng& rng) {
  if (n == 0) throw EmptyInput("random segmentation needs n >= 1");
  Segmentation seg;
  std::size_t pos = 0;
  while (pos < n) {
    const auto len = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n - pos)));
    seg.segments.push_back({pos, pos + len, letter_label(seg.segments.size())});
    pos += len;
  }
  return seg;
}

inline constexpr std::string_view kPopStructure = "ABBBBCCBBBBCCDCCE";

/// The pop template stretched over n positions: letter i starts at
/// round(i * n / 17); letters that round to zero length are dropped.
inline Segmentation fixed_pop_segment(std::size_t n) {
  if (n == 0) throw EmptyInput("fixed-pop segmentation needs n >= 1");
  const std::size_t letters = kPopStructure.size();
  // 2*i*n is even and 17 odd, so i*n/17 is never exactly half-way.
  const auto boundary = [&](std::size_t i) { return (2 * i * n + letters) / (2 * letters); };
  Segmentation seg;
  for (std::size_t i = 0; i < letters; ++i) {
    const std::size_t a = boundary(i), b = boundary(i + 1);
    if (b > a) seg.segments.push_back({a, b, std::string(1, kPopStructure[i])});
  }
  return seg;
}

}  // namespace chordseg
