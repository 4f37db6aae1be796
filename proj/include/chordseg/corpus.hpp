#pragma once

// Annotated chord corpora: JSONL loading/saving, section-label normalisation,
// deterministic splits and a synthetic corpus generator.
//
// Corpus file: one JSON object per line,
//   {"id": "t1", "chords": ["C:maj", ...], "sections": ["Verse 1", ...]}
// "sections" is optional; unknown keys are ignored.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chordseg/error.hpp"
#include "chordseg/harte.hpp"
#include "chordseg/random.hpp"

namespace chordseg {

struct AnnotatedTrack {
  std::string id;
  std::vector<std::string> chords;
  std::vector<std::string> sections;  // empty, or one label per chord

  friend bool operator==(const AnnotatedTrack&, const AnnotatedTrack&) = default;
};

struct SkippedTrack {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct LoadedCorpus {
  std::vector<AnnotatedTrack> tracks;
  std::vector<SkippedTrack> skipped;
};

struct CorpusSplit {
  std::vector<AnnotatedTrack> train;
  std::vector<AnnotatedTrack> validation;
  std::vector<AnnotatedTrack> test;
};

struct SplitRatios {
  double train = 0.75;
  double validation = 0.17;
  double test = 0.08;
};

namespace detail {

inline const std::unordered_map<std::string, std::string>& section_table() {
  static const std::unordered_map<std::string, std::string> table = [] {
    std::unordered_map<std::string, std::string> t;
    const auto add = [&](std::initializer_list<const char*> sources, const char* target) {
      for (const char* s : sources) t.emplace(s, target);
    };
    add({"verse"}, "verse");
    add({"prechorus", "pre chorus"}, "prechorus");
    add({"chorus"}, "chorus");
    add({"fadein", "fade in", "intro"}, "intro");
    add({"outro", "coda", "fadeout", "fade-out", "ending"}, "outro");
    add({"applause", "bass",        "choir",      "clarinet", "drums",  "flute",
         "harmonica", "harpsichord", "instrumental", "instrumental break", "noise",
         "oboe",     "organ",       "piano",      "rap",      "saxophone", "solo",
         "spoken",   "strings",     "synth",      "synthesizer", "talking", "trumpet",
         "vocal",    "voice",       "guitar"},
        "instrumental");
    add({"main theme", "theme", "secondary theme"}, "theme");
    add({"transition", "tran"}, "transition");
    add({"modulation", "key change"}, "other");
    return t;
  }();
  return table;
}

}  // namespace detail

/// Lower-cases, strips digits and punctuation, collapses whitespace, then maps
/// through the label conversion table. Unmapped labels pass through; a label
/// that cleans to nothing becomes "other".
inline std::string normalize_section_label(std::string_view raw) {
  std::string cleaned;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !cleaned.empty();
    } else if (std::isalpha(c)) {
      if (pending_space) cleaned.push_back(' ');
      pending_space = false;
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (cleaned.empty()) return "other";
  const auto& table = detail::section_table();
  if (auto it = table.find(cleaned); it != table.end()) return it->second;
  return cleaned;
}

/// Reads JSONL. Structural problems throw MalformedRecord; tracks whose chords
/// fail to parse are skipped and reported.
inline LoadedCorpus read_corpus(std::istream& in) {
  LoadedCorpus out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord(line_no, "record is not an object");
    if (!j.contains("id") || !j["id"].is_string()) throw MalformedRecord(line_no, "missing string 'id'");
    if (!j.contains("chords") || !j["chords"].is_array())
      throw MalformedRecord(line_no, "missing array 'chords'");

    AnnotatedTrack track;
    track.id = j["id"].get<std::string>();
    for (const auto& c : j["chords"]) {
      if (!c.is_string()) throw MalformedRecord(line_no, "non-string chord");
      track.chords.push_back(c.get<std::string>());
    }
    if (j.contains("sections")) {
      if (!j["sections"].is_array()) throw MalformedRecord(line_no, "'sections' is not an array");
      for (const auto& s : j["sections"]) {
        if (!s.is_string()) throw MalformedRecord(line_no, "non-string section label");
        track.sections.push_back(normalize_section_label(s.get<std::string>()));
      }
      if (!track.sections.empty() && track.sections.size() != track.chords.size())
        throw MalformedRecord(line_no, "sections and chords differ in length");
    }

    try {
      for (const auto& c : track.chords) parse_chord(c);
    } catch (const DataError& e) {
      out.skipped.push_back({line_no, track.id, e.what()});
      continue;
    }
    out.tracks.push_back(std::move(track));
  }
  return out;
}

inline LoadedCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, std::span<const AnnotatedTrack> tracks) {
  for (const auto& t : tracks) {
    nlohmann::json j;
    j["id"] = t.id;
    j["chords"] = t.chords;
    j["sections"] = t.sections;
    out << j.dump() << '\n';
  }
}

inline void save_corpus(const std::filesystem::path& path, std::span<const AnnotatedTrack> tracks) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
  write_corpus(out, tracks);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Seeded shuffle, then contiguous partition. Validation and test sizes are
/// floor(n * ratio); the remainder goes to train.
inline CorpusSplit split_dataset(std::span<const AnnotatedTrack> tracks, SplitRatios ratios,
                                 std::uint64_t seed) {
  if (tracks.empty()) throw EmptyInput("cannot split an empty corpus");
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
    throw DataError("split ratios must be non-negative and sum to 1");
  std::set<std::string_view> ids;
  for (const auto& t : tracks)
    if (!ids.insert(t.id).second) throw DataError("duplicate track id '" + t.id + "'");

  std::vector<std::size_t> order(tracks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(tracks.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.validation + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  const std::size_t n_train = tracks.size() - n_val - n_test;

  CorpusSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dest = i < n_train ? split.train : i < n_train + n_val ? split.validation : split.test;
    dest.push_back(tracks[order[i]]);
  }
  return split;
}

/// Section label -> alternative chord progressions for that section.
using SectionGrammar = std::map<std::string, std::vector<std::vector<std::string>>>;

struct SynthOptions {
  int min_sections = 3;
  int max_sections = 8;
  bool transpose = false;  // one random transposition per track
};

/// Each track concatenates 3-8 sections. Consecutive sections never share a
/// label when the grammar has more than one.
inline std::vector<AnnotatedTrack> generate_synthetic_corpus(std::size_t n_tracks,
                                                             const SectionGrammar& grammar,
                                                             std::uint64_t seed,
                                                             SynthOptions options = {}) {
  if (grammar.empty()) throw InvalidTemplate("empty section grammar");
  if (options.min_sections < 1 || options.max_sections < options.min_sections)
    throw InvalidTemplate("bad section count range");
  std::vector<std::string> labels;
  for (const auto& [label, templates] : grammar) {
    if (templates.empty()) throw InvalidTemplate("section '" + label + "' has no templates");
    for (const auto& tpl : templates) {
      if (tpl.empty()) throw InvalidTemplate("empty template for section '" + label + "'");
      for (const auto& c : tpl) {
        try {
          parse_chord(c);
        } catch (const DataError& e) {
          throw InvalidTemplate("section '" + label + "': " + e.what());
        }
      }
    }
    labels.push_back(label);
  }

  Rng rng(seed);
  std::vector<AnnotatedTrack> tracks;
  tracks.reserve(n_tracks);
  for (std::size_t t = 0; t < n_tracks; ++t) {
    AnnotatedTrack track;
    track.id = "synth-" + std::to_string(t);
    const auto n_sections = rng.between(options.min_sections, options.max_sections);
    const int shift = options.transpose ? static_cast<int>(rng.between(0, 11)) : 0;
    std::size_t prev = labels.size();
    for (std::int64_t s = 0; s < n_sections; ++s) {
      std::size_t pick;
      if (labels.size() == 1) {
        pick = 0;
      } else {
        do {
          pick = static_cast<std::size_t>(rng.below(labels.size()));
        } while (pick == prev);
      }
      prev = pick;
      const auto& templates = grammar.at(labels[pick]);
      const auto& tpl = templates[static_cast<std::size_t>(rng.below(templates.size()))];
      for (const auto& chord : tpl) {
        track.chords.push_back(shift == 0 ? chord : transpose_label(chord, shift));
        track.sections.push_back(labels[pick]);
      }
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

/// Six section types with pairwise disjoint chord vocabularies.
inline SectionGrammar default_synthetic_grammar() {
  return {
      {"intro", {{"C:maj7", "F:maj7", "C:maj7", "F:maj7"}, {"C:maj7", "D:min7", "F:maj7"}}},
      {"verse", {{"A:min", "F:maj", "C:maj", "G:maj"}, {"A:min", "E:min", "F:maj", "G:maj"}}},
      {"prechorus", {{"D:min", "E:7", "D:min", "E:7"}, {"D:min", "B:dim", "E:7"}}},
      {"chorus", {{"Bb:maj", "F:maj/3", "G:min7", "C:7"}, {"Bb:maj", "C:7", "F:sus4"}}},
      {"bridge", {{"Eb:maj", "Ab:maj", "Bb:7"}, {"Eb:maj", "C:min", "Ab:maj", "Bb:7"}}},
      {"outro", {{"C:sus4", "C:maj6", "C:sus2"}, {"G:sus4", "C:sus2", "C:maj6"}}},
  };
}

}  // namespace chordseg
