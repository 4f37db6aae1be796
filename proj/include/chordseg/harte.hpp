#pragma once

// Harte chord-label parsing and pitch-class semantics.
//
//   label    := "N" | root (":" shorthand)? (":"? "(" degrees ")")? ("/" degree)?
//   root     := [A-G] ("#" | "b")*
//   degrees  := "*"? degree ("," "*"? degree)*
//   degree   := ("#" | "b")* [1-13]
//
// A label with neither shorthand nor degree list is a major triad.

#include <algorithm>
#include <array>
#include <bitset>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chordseg/error.hpp"

namespace chordseg {

class PitchClass {
 public:
  constexpr PitchClass() = default;
  constexpr explicit PitchClass(int value) : value_(static_cast<std::uint8_t>(value)) {
    if (value < 0 || value > 11) throw std::out_of_range("pitch class outside [0, 11]");
  }
  /// Reduces any integer modulo 12.
  static constexpr PitchClass wrap(int value) { return PitchClass(((value % 12) + 12) % 12); }

  constexpr int value() const noexcept { return value_; }
  constexpr PitchClass transposed(int semitones) const { return wrap(value_ + semitones); }

  friend constexpr bool operator==(PitchClass, PitchClass) = default;
  friend constexpr auto operator<=>(PitchClass, PitchClass) = default;

 private:
  std::uint8_t value_ = 0;
};

inline std::string_view pitch_class_name(PitchClass pc) {
  static constexpr std::array<std::string_view, 12> kNames = {"C",  "C#", "D",  "D#", "E",  "F",
                                                              "F#", "G",  "G#", "A",  "A#", "B"};
  return kNames[static_cast<std::size_t>(pc.value())];
}

/// A scale degree relative to the chord root, e.g. "b3", "#11", "bb7".
struct Degree {
  int number = 1;      // 1..13
  int accidental = 0;  // sharps positive, flats negative

  int semitones() const {
    static constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};
    return ((kMajorScale[static_cast<std::size_t>((number - 1) % 7)] + accidental) % 12 + 12) % 12;
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(std::abs(accidental)), accidental < 0 ? 'b' : '#');
    return s + std::to_string(number);
  }

  friend bool operator==(const Degree&, const Degree&) = default;
  friend auto operator<=>(const Degree&, const Degree&) = default;
};

class PitchClassSet {
 public:
  PitchClassSet() = default;

  void insert(PitchClass pc) { bits_.set(static_cast<std::size_t>(pc.value())); }
  bool contains(PitchClass pc) const { return bits_.test(static_cast<std::size_t>(pc.value())); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  /// Members in ascending order.
  std::vector<PitchClass> members() const {
    std::vector<PitchClass> out;
    for (int i = 0; i < 12; ++i)
      if (bits_.test(static_cast<std::size_t>(i))) out.emplace_back(i);
    return out;
  }

  friend bool operator==(const PitchClassSet&, const PitchClassSet&) = default;

 private:
  std::bitset<12> bits_;
};

/// One element of root x pitch-class-set; 144 distinct values.
struct RootPitchPair {
  PitchClass root;
  PitchClass pitch;

  int id() const { return root.value() * 12 + pitch.value(); }

  friend bool operator==(const RootPitchPair&, const RootPitchPair&) = default;
  friend auto operator<=>(const RootPitchPair&, const RootPitchPair&) = default;
};

struct Chord {
  std::string raw;
  std::optional<PitchClass> root;  // empty for no-chord
  std::vector<Degree> intervals;   // sorted, unique
  std::optional<Degree> bass;

  bool is_nochord() const { return !root.has_value(); }

  bool has_interval(const Degree& d) const {
    return std::binary_search(intervals.begin(), intervals.end(), d);
  }
};

enum class Quality { major, minor };

struct SimplifiedChord {
  PitchClass root;
  Quality quality = Quality::major;

  std::string token() const {
    return std::string(pitch_class_name(root)) + (quality == Quality::minor ? ":min" : ":maj");
  }

  friend bool operator==(const SimplifiedChord&, const SimplifiedChord&) = default;
};

namespace detail {

struct ShorthandEntry {
  std::string_view name;
  std::string_view degrees;  // comma separated
};

// Harte's table, plus the 11th/13th extensions and the "6" alias found in
// annotated corpora. maj13 omits the 11th, matching common MIR tooling.
inline constexpr std::array<ShorthandEntry, 26> kShorthands = {{
    {"maj", "1,3,5"},
    {"min", "1,b3,5"},
    {"dim", "1,b3,b5"},
    {"aug", "1,3,#5"},
    {"maj7", "1,3,5,7"},
    {"min7", "1,b3,5,b7"},
    {"7", "1,3,5,b7"},
    {"dim7", "1,b3,b5,bb7"},
    {"hdim7", "1,b3,b5,b7"},
    {"minmaj7", "1,b3,5,7"},
    {"maj6", "1,3,5,6"},
    {"6", "1,3,5,6"},
    {"min6", "1,b3,5,6"},
    {"9", "1,3,5,b7,9"},
    {"maj9", "1,3,5,7,9"},
    {"min9", "1,b3,5,b7,9"},
    {"sus2", "1,2,5"},
    {"sus4", "1,4,5"},
    {"11", "1,3,5,b7,9,11"},
    {"maj11", "1,3,5,7,9,11"},
    {"min11", "1,b3,5,b7,9,11"},
    {"13", "1,3,5,b7,9,11,13"},
    {"maj13", "1,3,5,7,9,13"},
    {"min13", "1,b3,5,b7,9,11,13"},
    {"1", "1"},
    {"5", "1,5"},
}};

inline std::optional<Degree> parse_degree(std::string_view s) {
  Degree d{0, 0};
  std::size_t i = 0;
  for (; i < s.size() && (s[i] == 'b' || s[i] == '#'); ++i) d.accidental += s[i] == '#' ? 1 : -1;
  if (i == s.size() || s.size() - i > 2) return std::nullopt;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    d.number = d.number * 10 + (s[i] - '0');
  }
  if (d.number < 1 || d.number > 13) return std::nullopt;
  return d;
}

inline std::vector<Degree> shorthand_degrees(std::string_view list) {
  std::vector<Degree> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = std::min(list.find(',', start), list.size());
    out.push_back(*parse_degree(list.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

/// Length of the root spelling at the start of `label`, or 0 if there is none.
inline std::size_t root_length(std::string_view label) {
  if (label.empty() || label[0] < 'A' || label[0] > 'G') return 0;
  std::size_t i = 1;
  while (i < label.size() && (label[i] == '#' || label[i] == 'b')) ++i;
  return i;
}

inline PitchClass parse_root(std::string_view spelling) {
  static constexpr std::array<int, 7> kNatural = {9, 11, 0, 2, 4, 5, 7};  // A..G
  int value = kNatural[static_cast<std::size_t>(spelling[0] - 'A')];
  for (char c : spelling.substr(1)) value += c == '#' ? 1 : -1;
  return PitchClass::wrap(value);
}

}  // namespace detail

inline bool is_nochord_label(std::string_view label) { return label == "N" || label == "X"; }

/// Parses a Harte label. "X" (unknown chord in some corpora) is read as no-chord.
inline Chord parse_chord(std::string_view label) {
  const std::string raw(label);
  if (label.empty()) throw MalformedLabel(raw, "empty label");
  Chord chord;
  chord.raw = raw;
  if (is_nochord_label(label)) return chord;

  const auto root_len = detail::root_length(label);
  if (root_len == 0) throw MalformedLabel(raw, "missing root note");
  chord.root = detail::parse_root(label.substr(0, root_len));

  std::string_view rest = label.substr(root_len);
  std::optional<std::string_view> shorthand;
  std::optional<std::string_view> degree_list;

  if (!rest.empty() && rest[0] == ':') {
    rest.remove_prefix(1);
    const auto end = std::min(rest.find_first_of("(/"), rest.size());
    if (end > 0) {
      shorthand = rest.substr(0, end);
      if (!std::all_of(shorthand->begin(), shorthand->end(), [](unsigned char c) { return std::isalnum(c); }))
        throw MalformedLabel(raw, "bad character in shorthand");
    } else if (rest.empty() || rest[0] != '(') {
      throw MalformedLabel(raw, "empty shorthand");
    }
    rest.remove_prefix(end);
  }
  if (!rest.empty() && rest[0] == '(') {
    const auto close = rest.find(')');
    if (close == std::string_view::npos) throw MalformedLabel(raw, "unbalanced parenthesis");
    degree_list = rest.substr(1, close - 1);
    rest.remove_prefix(close + 1);
  }
  if (!rest.empty() && rest[0] == '/') {
    auto bass = detail::parse_degree(rest.substr(1));
    if (!bass) throw MalformedLabel(raw, "bad bass degree");
    chord.bass = bass;
    rest = {};
  }
  if (!rest.empty()) throw MalformedLabel(raw, "trailing characters");

  std::vector<Degree> degrees;
  if (shorthand) {
    const auto it = std::find_if(detail::kShorthands.begin(), detail::kShorthands.end(),
                                 [&](const auto& e) { return e.name == *shorthand; });
    if (it == detail::kShorthands.end()) throw UnknownShorthand(raw, std::string(*shorthand));
    degrees = detail::shorthand_degrees(it->degrees);
  } else if (!degree_list) {
    degrees = detail::shorthand_degrees("1,3,5");
  }

  if (degree_list) {
    std::string_view list = *degree_list;
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = std::min(list.find(',', start), list.size());
      std::string_view item = list.substr(start, comma - start);
      const bool remove = !item.empty() && item[0] == '*';
      if (remove) item.remove_prefix(1);
      const auto d = detail::parse_degree(item);
      if (!d) throw MalformedLabel(raw, "bad degree '" + std::string(item) + "'");
      if (remove) {
        std::erase(degrees, *d);
      } else {
        degrees.push_back(*d);
      }
      start = comma + 1;
    }
  }

  std::sort(degrees.begin(), degrees.end());
  degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
  if (degrees.empty()) throw MalformedLabel(raw, "chord has no notes");
  chord.intervals = std::move(degrees);
  return chord;
}

inline PitchClassSet pitch_class_set(const Chord& chord) {
  PitchClassSet set;
  if (chord.is_nochord()) return set;
  for (const auto& d : chord.intervals) set.insert(chord.root->transposed(d.semitones()));
  return set;
}

/// root x pitch-class-set, ascending by pair id. Empty for no-chord.
inline std::vector<RootPitchPair> components(const Chord& chord) {
  std::vector<RootPitchPair> out;
  if (chord.is_nochord()) return out;
  for (PitchClass p : pitch_class_set(chord).members()) out.push_back({*chord.root, p});
  return out;
}

inline SimplifiedChord simplify_chord(const Chord& chord) {
  if (chord.is_nochord()) throw NoChordInput();
  const bool minor = chord.has_interval(Degree{3, -1});
  return {*chord.root, minor ? Quality::minor : Quality::major};
}

/// Token used by the 25-symbol simplified alphabet: "<root>:maj", "<root>:min" or "N".
inline std::string simplified_token(std::string_view label) {
  const Chord chord = parse_chord(label);
  return chord.is_nochord() ? std::string("N") : simplify_chord(chord).token();
}

/// Shifts the root of a label by `semitones`, keeping the rest of the spelling.
inline std::string transpose_label(std::string_view label, int semitones) {
  const Chord chord = parse_chord(label);
  if (chord.is_nochord()) return std::string(label);
  const auto root_len = detail::root_length(label);
  return std::string(pitch_class_name(chord.root->transposed(semitones))) +
         std::string(label.substr(root_len));
}

/// Every shorthand name the parser accepts.
inline std::vector<std::string> known_shorthands() {
  std::vector<std::string> out;
  for (const auto& e : detail::kShorthands) out.emplace_back(e.name);
  return out;
}

}  // namespace chordseg
