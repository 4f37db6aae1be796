#include <gtest/gtest.h>

#include <map>
#include <set>

#include "chordseg/harte.hpp"
#include "oracles.hpp"

using namespace chordseg;

namespace {

std::set<int> pcs(std::string_view label) {
  std::set<int> out;
  for (auto p : pitch_class_set(parse_chord(label)).members()) out.insert(p.value());
  return out;
}

std::set<int> component_ids(std::string_view label) {
  std::set<int> out;
  for (const auto& c : components(parse_chord(label))) out.insert(c.id());
  return out;
}

const char* kRoots[] = {"C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"};

}  // namespace

TEST(Harte, MajorTriadPitchClasses) { EXPECT_EQ(pcs("C:maj"), (std::set<int>{0, 4, 7})); }

TEST(Harte, Maj13PitchClasses) {
  // C, E, G, B, D, A
  EXPECT_EQ(pcs("C:maj13"), (std::set<int>{0, 4, 7, 11, 2, 9}));
}

TEST(Harte, Gmin7AndBb6ShareAPitchClassSet) {
  EXPECT_EQ(pcs("G:min7"), (std::set<int>{7, 10, 2, 5}));
  EXPECT_EQ(pcs("Bb:6"), (std::set<int>{10, 2, 5, 7}));
  EXPECT_EQ(pitch_class_set(parse_chord("G:min7")), pitch_class_set(parse_chord("Bb:6")));
}

TEST(Harte, Gmin7AndBb6HaveDisjointComponents) {
  EXPECT_EQ(component_ids("G:min7"), (std::set<int>{7 * 12 + 7, 7 * 12 + 10, 7 * 12 + 2, 7 * 12 + 5}));
  EXPECT_EQ(component_ids("Bb:6"), (std::set<int>{10 * 12 + 10, 10 * 12 + 2, 10 * 12 + 5, 10 * 12 + 7}));
  const auto a = component_ids("G:min7");
  for (int id : component_ids("Bb:6")) EXPECT_FALSE(a.contains(id));
}

TEST(Harte, ComponentsOfCmaj) { EXPECT_EQ(component_ids("C:maj"), (std::set<int>{0, 4, 7})); }

TEST(Harte, NoChord) {
  for (const char* label : {"N", "X"}) {
    const auto c = parse_chord(label);
    EXPECT_TRUE(c.is_nochord());
    EXPECT_TRUE(c.intervals.empty());
    EXPECT_TRUE(pitch_class_set(c).empty());
    EXPECT_TRUE(components(c).empty());
  }
}

TEST(Harte, SlashChordKeepsBassOutOfIntervals) {
  const auto c = parse_chord("C#:maj/3");
  ASSERT_TRUE(c.root);
  EXPECT_EQ(c.root->value(), 1);
  ASSERT_TRUE(c.bass);
  EXPECT_EQ(c.bass->str(), "3");
  EXPECT_EQ(pcs("C#:maj/3"), (std::set<int>{1, 5, 8}));
}

TEST(Harte, BassNotAddedToPitchClasses) {
  // b7 in the bass of a triad does not join the set
  EXPECT_EQ(pcs("C:maj/b7"), (std::set<int>{0, 4, 7}));
}

TEST(Harte, BareRootIsMajor) {
  EXPECT_EQ(pcs("G"), pcs("G:maj"));
  EXPECT_EQ(pcs("G/5"), pcs("G:maj"));
}

TEST(Harte, IntervalListAddsAndRemoves) {
  EXPECT_EQ(pcs("C:maj(9)"), (std::set<int>{0, 2, 4, 7}));
  EXPECT_EQ(pcs("C:maj(*3)"), (std::set<int>{0, 7}));
  EXPECT_EQ(pcs("C:(1,b3,5)"), (std::set<int>{0, 3, 7}));
  EXPECT_EQ(pcs("C(1,3)"), (std::set<int>{0, 4}));
  EXPECT_EQ(pcs("C:min7(*b3,11)"), (std::set<int>{0, 5, 7, 10}));
}

TEST(Harte, OmittedRootDegreeStaysOmitted) {
  const auto c = parse_chord("C:maj(*1)");
  EXPECT_FALSE(c.has_interval(Degree{1, 0}));
  EXPECT_EQ(pcs("C:maj(*1)"), (std::set<int>{4, 7}));
}

TEST(Harte, RootIncludedWhenIntervalsPresent) {
  for (const auto& sh : known_shorthands()) EXPECT_TRUE(parse_chord("D:" + sh).has_interval(Degree{1, 0})) << sh;
}

TEST(Harte, EnharmonicSpellingsShareAPitchClass) {
  EXPECT_EQ(parse_chord("Bbb:maj").root, parse_chord("A:maj").root);
  EXPECT_EQ(parse_chord("Cb").root->value(), 11);
  EXPECT_EQ(parse_chord("B#:min").root->value(), 0);
  EXPECT_EQ(parse_chord("E#").root->value(), 5);
}

TEST(Harte, DimensionsFollowHarte) {
  EXPECT_EQ(pcs("C:dim"), (std::set<int>{0, 3, 6}));
  EXPECT_EQ(pcs("C:dim7"), (std::set<int>{0, 3, 6, 9}));
  // as triads, C:dim and Eb:dim are not pitch-class identical
  EXPECT_NE(pcs("C:dim"), pcs("Eb:dim"));
  EXPECT_EQ(pcs("C:dim7"), pcs("Eb:dim7"));
  EXPECT_NE(component_ids("C:dim7"), component_ids("Eb:dim7"));
}

TEST(Harte, DegreeSemitonesMatchTable) {
  const std::map<std::string, int> table = {{"1", 0},  {"b2", 1}, {"2", 2},  {"b3", 3}, {"3", 4},
                                            {"4", 5},  {"#4", 6}, {"b5", 6}, {"5", 7},  {"#5", 8},
                                            {"b6", 8}, {"6", 9},  {"b7", 10}, {"7", 11}, {"9", 2},
                                            {"11", 5}, {"13", 9}, {"b9", 1}, {"#9", 3}, {"#11", 6},
                                            {"b13", 8}, {"bb7", 9}};
  for (const auto& [deg, semis] : table) {
    const auto c = parse_chord("C:(" + deg + ")");
    ASSERT_EQ(c.intervals.size(), 1u) << deg;
    EXPECT_EQ(c.intervals[0].semitones(), semis) << deg;
    EXPECT_EQ(c.intervals[0].str(), deg);
  }
}

TEST(Harte, SimplifyChord) {
  EXPECT_EQ(simplify_chord(parse_chord("C:maj13")), (SimplifiedChord{PitchClass(0), Quality::major}));
  EXPECT_EQ(simplify_chord(parse_chord("G:min7")), (SimplifiedChord{PitchClass(7), Quality::minor}));
  EXPECT_EQ(simplify_chord(parse_chord("C:dim")), (SimplifiedChord{PitchClass(0), Quality::minor}));
  EXPECT_EQ(simplify_chord(parse_chord("C:sus4")).quality, Quality::major);
  EXPECT_THROW(simplify_chord(parse_chord("N")), NoChordInput);
  EXPECT_EQ(simplified_token("N"), "N");
  EXPECT_EQ(simplified_token("Db:min7/b3"), "C#:min");
}

TEST(Harte, SimplifiedAlphabetHas24Classes) {
  std::set<std::string> tokens;
  for (const char* r : kRoots)
    for (const auto& sh : known_shorthands()) tokens.insert(simplified_token(std::string(r) + ":" + sh));
  EXPECT_EQ(tokens.size(), 24u);
  tokens.insert(simplified_token("N"));
  EXPECT_EQ(tokens.size(), 25u);
}

TEST(Harte, MalformedLabels) {
  for (const char* bad : {"", "H:maj", "c:maj", "C:", "C:maj(", "C:maj(3", "C:maj)", "C:maj/", "C:maj/x",
                          "C:(b)", "C:(14)", "C:(0)", "C::maj", "C:maj(3)junk", "N:maj", ":maj"}) {
    EXPECT_THROW(parse_chord(bad), MalformedLabel) << '"' << bad << '"';
  }
}

TEST(Harte, UnknownShorthand) {
  EXPECT_THROW(parse_chord("C:sus7"), UnknownShorthand);
  EXPECT_THROW(parse_chord("C:major"), UnknownShorthand);
  // both are data errors
  EXPECT_THROW(parse_chord("C:sus7"), DataError);
}

TEST(Harte, TransposeLabel) {
  EXPECT_EQ(transpose_label("C:maj7/3", 2), "D:maj7/3");
  EXPECT_EQ(transpose_label("Bb:min", 2), "C:min");
  EXPECT_EQ(transpose_label("N", 5), "N");
}

TEST(Harte, PitchClassBounds) {
  EXPECT_THROW(PitchClass(12), std::out_of_range);
  EXPECT_THROW(PitchClass(-1), std::out_of_range);
  EXPECT_EQ(PitchClass::wrap(-1).value(), 11);
  EXPECT_EQ(PitchClass::wrap(25).value(), 1);
}

// Every shorthand on every root, with and without an inversion.
TEST(HarteConformance, ShorthandByRootByBass) {
  ASSERT_EQ(known_shorthands().size(), oracle::shorthand_semitones().size());
  std::size_t parsed = 0;
  for (int r = 0; r < 12; ++r) {
    for (const auto& sh : known_shorthands()) {
      const auto expected_offsets = oracle::shorthand_semitones().at(sh);
      for (const char* bass : {"", "/3", "/5"}) {
        const std::string label = std::string(kRoots[r]) + ":" + sh + bass;
        Chord c;
        ASSERT_NO_THROW(c = parse_chord(label)) << label;
        ++parsed;
        std::set<int> expected;
        for (int o : expected_offsets) expected.insert((r + o) % 12);
        EXPECT_EQ(pcs(label), expected) << label;
        EXPECT_EQ(components(c).size(), pitch_class_set(c).size()) << label;
        for (const auto& comp : components(c)) EXPECT_EQ(comp.root.value(), r);
      }
    }
  }
  EXPECT_EQ(parsed, 12u * known_shorthands().size() * 3u);
}

TEST(HarteProperty, TranspositionShiftsPitchClasses) {
  for (const auto& sh : known_shorthands()) {
    const auto base = pcs("C:" + sh);
    for (int k = 0; k < 12; ++k) {
      std::set<int> shifted;
      for (int p : base) shifted.insert((p + k) % 12);
      EXPECT_EQ(pcs(transpose_label("C:" + sh, k)), shifted) << sh << " +" << k;
    }
  }
}

TEST(HarteProperty, EnharmonicDistinctness) {
  // equal pitch-class sets with different roots never share components
  for (const auto& a : known_shorthands())
    for (const auto& b : known_shorthands())
      for (int r = 1; r < 12; ++r) {
        const std::string la = "C:" + a, lb = std::string(kRoots[r]) + ":" + b;
        if (pcs(la) != pcs(lb)) continue;
        EXPECT_NE(component_ids(la), component_ids(lb)) << la << " vs " << lb;
      }
}
