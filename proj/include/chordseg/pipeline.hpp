#pragma once

// Glue between modules: per-chord features for the segmenter, the
// segmentation interchange file and evaluation reports.
//
// Segmentation file: JSONL, one object per track,
//   {"id": "t1", "segments": [[0, 4, "verse"], [4, 7, "chorus"]]}

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chordseg/corpus.hpp"
#include "chordseg/embedding.hpp"
#include "chordseg/format.hpp"
#include "chordseg/lstm.hpp"
#include "chordseg/metrics.hpp"
#include "chordseg/segmentation.hpp"

namespace chordseg {

struct TrackSegmentation {
  std::string id;
  Segmentation segmentation;

  friend bool operator==(const TrackSegmentation&, const TrackSegmentation&) = default;
};

inline void write_segmentations(std::ostream& out, std::span<const TrackSegmentation> items) {
  for (const auto& item : items) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : item.segmentation.segments) segs.push_back({s.start, s.end, s.label});
    out << nlohmann::json{{"id", item.id}, {"segments", segs}}.dump() << '\n';
  }
}

inline std::vector<TrackSegmentation> read_segmentations(std::istream& in) {
  std::vector<TrackSegmentation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TrackSegmentation item;
    try {
      const auto j = nlohmann::json::parse(line);
      item.id = j.at("id").get<std::string>();
      for (const auto& s : j.at("segments")) {
        if (!s.is_array() || s.size() != 3) throw MalformedRecord(line_no, "segment must be [start, end, label]");
        item.segmentation.segments.push_back(
            {s[0].get<std::size_t>(), s[1].get<std::size_t>(), s[2].get<std::string>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!item.segmentation.is_contiguous(item.segmentation.length()) || item.segmentation.segments.empty())
      throw MalformedRecord(line_no, "segments of '" + item.id + "' do not tile the track");
    out.push_back(std::move(item));
  }
  return out;
}

/// Reference segmentation of an annotated track.
inline Segmentation reference_segmentation(const AnnotatedTrack& track) {
  if (track.sections.empty()) throw DataError("track '" + track.id + "' has no section labels");
  return labels_to_segments(std::span<const std::string>(track.sections));
}

/// Sorted distinct section labels of a corpus.
inline std::vector<std::string> collect_labels(std::span<const AnnotatedTrack> tracks) {
  std::set<std::string> s;
  for (const auto& t : tracks) s.insert(t.sections.begin(), t.sections.end());
  return {s.begin(), s.end()};
}

/// Embeds chords with one model, or several concatenated in order.
class ChordFeaturizer {
 public:
  explicit ChordFeaturizer(std::vector<const EmbeddingModel*> models) : models_(std::move(models)) {
    if (models_.empty()) throw EmptyInput("featurizer needs at least one embedding model");
    for (const auto* m : models_) dim_ += m->dim;
  }

  std::size_t dim() const { return dim_; }

  const std::vector<double>& operator()(const std::string& chord) {
    auto it = cache_.find(chord);
    if (it == cache_.end()) it = cache_.emplace(chord, hybrid_embed(models_, chord)).first;
    return it->second;
  }

  std::vector<double> track_inputs(const AnnotatedTrack& track) {
    std::vector<double> x;
    x.reserve(track.chords.size() * dim_);
    for (const auto& c : track.chords) {
      const auto& v = (*this)(c);
      x.insert(x.end(), v.begin(), v.end());
    }
    return x;
  }

 private:
  std::vector<const EmbeddingModel*> models_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

/// Features plus label indices. Labels missing from `labels` get fresh
/// indices past the end, which keeps them distinct for pairwise scoring.
inline LabeledSequence make_sequence(const AnnotatedTrack& track, ChordFeaturizer& features,
                                     std::span<const std::string> labels) {
  LabeledSequence seq;
  seq.dim = features.dim();
  seq.inputs = features.track_inputs(track);
  std::map<std::string, int> extra;
  for (const auto& s : track.sections) {
    const auto it = std::lower_bound(labels.begin(), labels.end(), s);
    if (it != labels.end() && *it == s) {
      seq.labels.push_back(static_cast<int>(it - labels.begin()));
    } else {
      auto [e, inserted] = extra.emplace(s, static_cast<int>(labels.size() + extra.size()));
      seq.labels.push_back(e->second);
    }
  }
  return seq;
}

/// CHORDSEG_THREADS caps the worker count (default: hardware concurrency).
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHORDSEG_THREADS")) {
    if (auto v = parse_int<std::size_t>(env); v && *v > 0) n = std::min(n, *v);
  }
  return n;
}

/// Runs fn(i) for i in [0, n) across workers. fn must only write to slot i.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
}

inline nlohmann::json to_json(const SegmentScores& s) {
  return {{"P", s.precision}, {"R", s.recall}, {"F1", s.f1},
          {"S_O", s.over},    {"S_U", s.under},  {"S_F1", s.entropy_f1}};
}

inline nlohmann::json report_json(const CorpusScores& scores) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& t : scores.tracks) {
    auto row = to_json(t.scores);
    row["id"] = t.id;
    tracks.push_back(row);
  }
  return {{"tracks", tracks}, {"aggregate", to_json(scores.mean)}, {"n_tracks", scores.tracks.size()}};
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

inline void write_report_csv(std::ostream& out, const CorpusScores& scores) {
  const auto row = [&](const std::string& id, const SegmentScores& s) {
    out << csv_field(id) << ',' << format_double(s.precision, 17) << ',' << format_double(s.recall, 17) << ','
        << format_double(s.f1, 17) << ',' << format_double(s.over, 17) << ',' << format_double(s.under, 17)
        << ',' << format_double(s.entropy_f1, 17) << '\n';
  };
  out << "id,P,R,F1,S_O,S_U,S_F1\n";
  for (const auto& t : scores.tracks) row(t.id, t.scores);
  row("aggregate", scores.mean);
}

}  // namespace chordseg
