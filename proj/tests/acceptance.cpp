// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [billboard.jsonl]
//
// The conditional reproduction criterion runs only when a corpus is given on
// the command line or through CHORDSEG_BILLBOARD; otherwise it is skipped.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "chordseg/chordseg.hpp"
#include "chordseg/cli.hpp"
#include "oracles.hpp"

using namespace chordseg;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kPairwiseTol = 1e-12;
constexpr double kEntropyTol = 1e-9;
constexpr double kSkipgramTol = 1e-6;
constexpr double kLstmTol = 1e-4;
constexpr double kMutationFloor = 1e-2;
constexpr double kLossDrop = 0.20;
constexpr double kHeldOutF1 = 0.9;
constexpr double kTargetF1 = 0.5477;
constexpr double kTargetSF1 = 0.5379;
constexpr double kStretchTol = 0.05;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

class Tally {
 public:
  void run(const std::string& id, const std::string& title, double limit_seconds, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::pass && limit_seconds > 0 && secs >= limit_seconds) {
      o.status = Status::fail;
      o.detail += "; over time limit";
    }
    const char* word = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << id << ' ' << word << "  " << title << " [" << fmt(secs, 3) << " s";
    if (limit_seconds > 0) std::cout << ", limit " << limit_seconds << " s";
    std::cout << "]: " << o.detail << std::endl;
    failed_ += o.status == Status::fail;
  }

  int failed() const { return failed_; }

 private:
  int failed_ = 0;
};

std::set<int> pcs(const std::string& label) {
  std::set<int> out;
  for (auto p : pitch_class_set(parse_chord(label)).members()) out.insert(p.value());
  return out;
}

std::set<int> component_ids(const std::string& label) {
  std::set<int> out;
  for (const auto& c : components(parse_chord(label))) out.insert(c.id());
  return out;
}

Outcome parser_conformance() {
  std::vector<std::string> problems;
  if (pcs("C:maj") != std::set<int>{0, 4, 7}) problems.push_back("C:maj");
  if (pcs("C:maj13") != std::set<int>{0, 4, 7, 11, 2, 9}) problems.push_back("C:maj13");
  if (pcs("G:min7") != pcs("Bb:6")) problems.push_back("G:min7 vs Bb:6 pitch classes");
  if (component_ids("G:min7") == component_ids("Bb:6")) problems.push_back("G:min7 vs Bb:6 components");

  const char* roots[] = {"C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"};
  std::size_t parsed = 0, failures = 0;
  for (int r = 0; r < 12; ++r)
    for (const auto& [shorthand, offsets] : oracle::shorthand_semitones()) {
      std::set<int> expected;
      for (int o : offsets) expected.insert((r + o) % 12);
      const std::string label = std::string(roots[r]) + ":" + shorthand;
      try {
        ++parsed;
        if (pcs(label) != expected) ++failures;
      } catch (const Error&) {
        ++failures;
      }
    }
  if (failures) problems.push_back(std::to_string(failures) + " shorthand failures");
  std::string detail = std::to_string(parsed) + " labels, " + std::to_string(failures) + " failures";
  for (const auto& p : problems) detail += "; bad " + p;
  return check(problems.empty() && parsed == 12 * oracle::shorthand_semitones().size(), detail);
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int k) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  return v;
}

Outcome metric_oracles() {
  Rng rng(2);
  double worst_pw = 0, worst_nce = 0;
  std::size_t invariance_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 50));
    const auto ref = random_labels(rng, n, static_cast<int>(rng.between(1, 8)));
    const auto est = random_labels(rng, n, static_cast<int>(rng.between(1, 8)));
    const auto p = pairwise_scores(std::span<const int>(ref), std::span<const int>(est));
    const auto e = nce_scores(std::span<const int>(ref), std::span<const int>(est));
    const auto po = oracle::pairwise(ref, est);
    const auto eo = oracle::nce(ref, est);
    worst_pw = std::max({worst_pw, std::abs(p.precision - po.precision), std::abs(p.recall - po.recall),
                         std::abs(p.f1 - po.f1)});
    worst_nce = std::max({worst_nce, std::abs(e.over - eo.over), std::abs(e.under - eo.under), std::abs(e.f1 - eo.f1)});

    const auto ps = pairwise_scores(std::span<const int>(est), std::span<const int>(ref));
    const auto es = nce_scores(std::span<const int>(est), std::span<const int>(ref));
    if (ps.precision != p.recall || ps.recall != p.precision || ps.f1 != p.f1) ++invariance_failures;
    if (es.over != e.under || es.under != e.over || es.f1 != e.f1) ++invariance_failures;

    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<int> renamed(n);
    for (std::size_t i = 0; i < n; ++i) renamed[i] = 100 + perm[static_cast<std::size_t>(est[i])];
    const auto pr = pairwise_scores(std::span<const int>(ref), std::span<const int>(renamed));
    const auto er = nce_scores(std::span<const int>(ref), std::span<const int>(renamed));
    if (pr.precision != p.precision || pr.recall != p.recall || er.over != e.over || er.under != e.under)
      ++invariance_failures;
  }
  return check(worst_pw <= kPairwiseTol && worst_nce <= kEntropyTol && invariance_failures == 0,
               "max pairwise error " + fmt(worst_pw) + ", max NCE error " + fmt(worst_nce) + ", " +
                   std::to_string(invariance_failures) + " invariance failures");
}

Outcome form_oracle() {
  Rng rng(3);
  std::size_t mismatches = 0, broken = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 20));
    const auto s = random_labels(rng, n, static_cast<int>(rng.between(1, 4)));
    for (std::size_t min_len : {1, 2}) {
      std::set<oracle::Repeat> got;
      for (const auto& p : repeated_subsequences(std::span<const int>(s), min_len)) got.insert({p.tokens, p.occurrences});
      mismatches += got != oracle::maximal_repeats(s, min_len);
    }
    broken += !form_segment(std::span<const int>(s)).is_contiguous(n);
  }
  return check(mismatches == 0 && broken == 0, "500 sequences, " + std::to_string(mismatches) +
                                                   " repeat-set mismatches, " + std::to_string(broken) +
                                                   " non-contiguous segmentations");
}

Outcome gradient_checks() {
  Rng rng(4);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = static_cast<std::size_t>(rng.between(2, 12));
    const auto k = static_cast<std::size_t>(rng.between(1, 20));
    std::vector<double> u(d), v(d), negs(k * d);
    for (auto* part : {&u, &v, &negs})
      for (auto& x : *part) x = rng.uniform(-1.0, 1.0);
    std::vector<double> gu(d), gv(d), gn(k * d);
    skipgram_step(u, v, negs, gu, gv, gn);
    std::vector<long double> x;
    for (const auto* part : {&u, &v, &negs}) x.insert(x.end(), part->begin(), part->end());
    const auto num = oracle::numeric_gradient<long double>(
        [&](const std::vector<long double>& p) { return oracle::skipgram_loss(p, d); }, x, 1e-4L);
    std::size_t i = 0;
    for (const auto* part : {&gu, &gv, &gn})
      for (double g : *part) worst = std::max(worst, oracle::relative_error(g, double(num[i++])));
  }

  const LstmShape shape{4, 5, 2, 3};
  LstmParams params(shape);
  for (auto& w : params.values) w = rng.uniform(-0.5, 0.5);
  LabeledSequence seq;
  seq.dim = 4;
  seq.inputs.resize(4 * 6);
  for (auto& x : seq.inputs) x = rng.uniform(-1.0, 1.0);
  seq.labels = {0, 2, 1, 1, 0, 2};
  const double lstm = gradient_check(params, seq);
  const GradientFn mutated = [](const LstmParams& p, const LabeledSequence& s, std::vector<double>& g) {
    const double loss = sequence_loss_and_gradient(p, s, g);
    for (std::size_t k = 0; k < 4 * p.shape.hidden * p.shape.input_dim; k += 2) g[k] = -g[k];
    return loss;
  };
  const double control = gradient_check(params, seq, 1e-5, mutated);
  return check(worst <= kSkipgramTol && lstm < kLstmTol && control > kMutationFloor,
               "skipgram max rel. error " + fmt(worst) + ", LSTM " + fmt(lstm) + ", mutated LSTM " + fmt(control));
}

double mean_similarity(const EmbeddingModel& m, const SectionGrammar& g, bool within) {
  std::vector<std::pair<std::string, std::string>> chords;  // (section, chord)
  for (const auto& [section, templates] : g)
    for (const auto& tpl : templates)
      for (const auto& c : tpl) chords.emplace_back(section, c);
  std::sort(chords.begin(), chords.end());
  chords.erase(std::unique(chords.begin(), chords.end()), chords.end());
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < chords.size(); ++i)
    for (std::size_t j = i + 1; j < chords.size(); ++j) {
      if (chords[i].second == chords[j].second || (chords[i].first == chords[j].first) != within) continue;
      sum += cosine_similarity(embed(m, chords[i].second), embed(m, chords[j].second));
      ++n;
    }
  return n ? sum / double(n) : 0.0;
}

Outcome training_efficacy() {
  const std::uint64_t seed = 7;
  const auto grammar = default_synthetic_grammar();
  const auto tracks = generate_synthetic_corpus(200, grammar, seed);
  const auto split = split_dataset(tracks, {}, seed);

  // Default configuration except the subsampling threshold and step size,
  // which are set for a 40-token vocabulary.
  EmbeddingConfig ec;
  ec.subsample_t = 0.1;
  ec.learning_rate = 1e-3;
  ec.seed = seed;
  std::vector<EmbeddingEpoch> log;
  const auto model = train_embedding(split.train, ec, Decomposition::pitchclass2vec(), &log);
  const double drop = 1.0 - log.at(9).mean_loss / log.at(0).mean_loss;
  const double within = mean_similarity(model, grammar, true);
  const double cross = mean_similarity(model, grammar, false);

  ChordFeaturizer features({&model});
  const auto labels = collect_labels(split.train);
  std::vector<LabeledSequence> train, val;
  for (const auto& t : split.train) train.push_back(make_sequence(t, features, labels));
  for (const auto& t : split.validation) val.push_back(make_sequence(t, features, labels));
  SegmenterConfig sc;
  sc.n_labels = labels.size();
  sc.seed = seed;
  const auto trained = train_segmenter(train, val, sc);

  std::vector<std::pair<Segmentation, Segmentation>> lstm_pairs, form_pairs;
  for (const auto& t : split.test) {
    const auto seq = make_sequence(t, features, labels);
    const auto pred = predict_sections(seq.inputs, seq.dim, trained.params);
    lstm_pairs.emplace_back(reference_segmentation(t), labels_to_segments(pred, labels));
    form_pairs.emplace_back(reference_segmentation(t), form_raw_segment(t.chords));
  }
  const double lstm_f1 = evaluate_corpus(lstm_pairs).mean.f1;
  const double form_f1 = evaluate_corpus(form_pairs).mean.f1;

  const bool a = drop >= kLossDrop, b = within > cross, c = lstm_f1 >= kHeldOutF1 && lstm_f1 > form_f1;
  return check(a && b && c, std::string("(a) ") + (a ? "ok" : "no") + " loss drop " + fmt(drop) + " (" +
                                fmt(log[0].mean_loss) + " -> " + fmt(log[9].mean_loss) + "); (b) " + (b ? "ok" : "no") +
                                " within " + fmt(within) + " vs cross " + fmt(cross) + "; (c) " + (c ? "ok" : "no") +
                                " LSTM F1 " + fmt(lstm_f1) + " vs FORM_raw " + fmt(form_f1) + " on " +
                                std::to_string(split.test.size()) + " test tracks");
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "chordseg");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << "chordseg " << args.at(1) << " failed (" << code << "): " << e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("chordseg_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome reproduction(const std::string& corpus) {
  if (corpus.empty()) return {Status::skip, "no corpus given (pass a JSONL path or set CHORDSEG_BILLBOARD)"};
  const auto dir = scratch("billboard");
  const auto p = [&](const char* n) { return (dir / n).string(); };
  const bool ok = cli({"split-corpus", "--corpus", corpus, "--out-prefix", p("bb")}) == 0 &&
                  cli({"train-embedding", "--kind", "pitchclass2vec", "--corpus", p("bb.train.jsonl"), "--out",
                       p("pc2vec.txt")}) == 0 &&
                  cli({"train-segmenter", "--preset", "pitchclass2vec", "--train", p("bb.train.jsonl"), "--val",
                       p("bb.validation.jsonl"), "--embedding", p("pc2vec.txt"), "--out", p("seg")}) == 0 &&
                  cli({"segment", "--method", "lstm", "--model", p("seg"), "--corpus", p("bb.test.jsonl"), "--out",
                       p("est.jsonl")}) == 0;
  std::string report;
  if (!ok || cli({"evaluate", "--ref", p("bb.test.jsonl"), "--est", p("est.jsonl"), "--out", p("report")}, &report) != 0)
    return {Status::fail, "pipeline did not complete; scratch files in " + dir.string()};
  const auto agg = nlohmann::json::parse(report);
  std::string detail;
  bool finite = true;
  for (const char* k : {"P", "R", "F1", "S_O", "S_U", "S_F1"}) {
    const double v = agg.at(k).get<double>();
    finite = finite && std::isfinite(v);
    detail += (detail.empty() ? "" : " ") + std::string(k) + "=" + fmt(v);
  }
  const double f1 = agg["F1"].get<double>(), sf1 = agg["S_F1"].get<double>();
  const bool stretch = std::abs(f1 - kTargetF1) <= kStretchTol && std::abs(sf1 - kTargetSF1) <= kStretchTol;
  detail += std::string("; artifacts in ") + dir.string() + "; stretch target (F1 " + fmt(kTargetF1) + ", S_F1 " + fmt(kTargetSF1) + " +- " +
            fmt(kStretchTol) + ") " + (stretch ? "met" : "not met");
  return check(finite, detail);
}

std::map<std::string, std::string> deterministic_run(const fs::path& dir) {
  const auto p = [&](const char* n) { return (dir / n).string(); };
  const std::vector<std::vector<std::string>> steps = {
      {"synth-corpus", "--tracks", "80", "--transpose", "--seed", "13", "--out", p("c.jsonl")},
      {"split-corpus", "--corpus", p("c.jsonl"), "--seed", "13", "--out-prefix", p("s")},
      {"train-embedding", "--kind", "pitchclass2vec", "--epochs", "3", "--subsample", "0.1", "--seed", "13",
       "--corpus", p("s.train.jsonl"), "--out", p("pc.txt")},
      {"train-embedding", "--kind", "fasttext", "--dim", "16", "--epochs", "2", "--buckets", "5000", "--seed", "13",
       "--corpus", p("s.train.jsonl"), "--out", p("ft.txt")},
      {"train-segmenter", "--hidden", "12", "--layers", "2", "--dropout", "0.2", "--batch", "16", "--max-epochs", "4",
       "--seed", "13", "--train", p("s.train.jsonl"), "--val", p("s.validation.jsonl"), "--embedding", p("pc.txt"),
       "--embedding2", p("ft.txt"), "--out", p("seg")},
      {"segment", "--method", "lstm", "--model", p("seg"), "--corpus", p("s.test.jsonl"), "--out", p("est.jsonl")},
      {"evaluate", "--ref", p("s.test.jsonl"), "--est", p("est.jsonl"), "--out", p("report")},
  };
  std::map<std::string, std::string> files;
  for (const auto& s : steps)
    if (cli(s) != 0) return files;
  for (const char* f : {"pc.txt", "ft.txt", "seg.json", "seg.bin", "est.jsonl", "report.json", "report.csv"})
    files[f] = slurp(dir / f);
  return files;
}

Outcome determinism() {
  setenv("CHORDSEG_THREADS", "1", 1);
  const auto dir = scratch("determinism");
  const auto first = deterministic_run(dir);
  const auto second = deterministic_run(dir);
  if (first.size() != 7 || second.size() != 7) return {Status::fail, "pipeline did not complete"};
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : first)
    if (bytes.empty() || second.at(name) != bytes) differing.push_back(name);
  fs::remove_all(dir);
  std::string detail = differing.empty() ? "7 artifacts byte-identical across two runs" : "differing:";
  for (const auto& d : differing) detail += " " + d;
  return check(differing.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::string corpus = argc > 1 ? argv[1] : "";
  if (corpus.empty())
    if (const char* env = std::getenv("CHORDSEG_BILLBOARD")) corpus = env;

  Tally t;
  t.run("AC1", "parser conformance", 1, parser_conformance);
  t.run("AC2", "metric oracle equivalence", 10, metric_oracles);
  t.run("AC3", "FORM oracle equivalence", 30, form_oracle);
  t.run("AC4", "gradient checks", 60, gradient_checks);
  t.run("AC5", "synthetic training efficacy", 600, training_efficacy);
  t.run("AC6", "conditional reproduction", 0, [&] { return reproduction(corpus); });
  t.run("AC7", "determinism", 0, determinism);
  std::cout << (t.failed() ? std::to_string(t.failed()) + " criteria failed" : "all criteria met") << std::endl;
  return t.failed() ? 1 : 0;
}
