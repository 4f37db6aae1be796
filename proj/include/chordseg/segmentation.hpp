#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chordseg/error.hpp"

namespace chordseg {

struct Segment {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::string label;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered, contiguous, non-empty segments tiling [0, length()).
struct Segmentation {
  std::vector<Segment> segments;

  std::size_t length() const { return segments.empty() ? 0 : segments.back().end; }

  /// True when segments tile [0, n) with no gaps, overlaps or empty spans.
  bool is_contiguous(std::size_t n) const {
    if (segments.empty()) return n == 0;
    std::size_t pos = 0;
    for (const auto& s : segments) {
      if (s.start != pos || s.end <= s.start) return false;
      pos = s.end;
    }
    return pos == n;
  }

  /// One label per position.
  std::vector<std::string> frame_labels() const {
    std::vector<std::string> out;
    out.reserve(length());
    for (const auto& s : segments)
      for (std::size_t i = s.start; i < s.end; ++i) out.push_back(s.label);
    return out;
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Maximal runs of equal labels become segments.
template <class Label>
Segmentation runs_to_segments(std::span<const Label> labels, auto&& to_string) {
  if (labels.empty()) throw EmptyInput("cannot segment an empty label sequence");
  Segmentation seg;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= labels.size(); ++i) {
    if (i == labels.size() || !(labels[i] == labels[start])) {
      seg.segments.push_back({start, i, to_string(labels[start])});
      start = i;
    }
  }
  return seg;
}

inline Segmentation labels_to_segments(std::span<const std::string> labels) {
  return runs_to_segments(labels, [](const std::string& s) { return s; });
}

/// Index labels rendered through a name table.
inline Segmentation labels_to_segments(std::span<const int> labels,
                                       std::span<const std::string> names) {
  return runs_to_segments(labels, [&](int i) {
    return i >= 0 && static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                                : std::to_string(i);
  });
}

}  // namespace chordseg
