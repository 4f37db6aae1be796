#pragma once

// Chord embeddings trained with skipgram negative sampling. Input vectors are
// decomposed into components and summed; output vectors are one per
// vocabulary token for every decomposition:
//
//   whole_token  one component per chord label (word2vec)
//   char_ngram   the label itself plus hashed character n-grams of "<label>" (fasttext)
//   pitchclass   one component per (root, pitch class) pair, id = root * 12 + pitch
//
// Model file (text, whitespace separated):
//   chordemb v1 <kind> <dim> <n_components> <n_vocab>
//   c <id> <f1> ... <fd>            input component vectors
//   w <token> <count> <f1> ... <fd> output vectors, in vocabulary order
//   u <f1> ... <fd>                 vector for unknown whole tokens

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chordseg/corpus.hpp"
#include "chordseg/error.hpp"
#include "chordseg/format.hpp"
#include "chordseg/harte.hpp"
#include "chordseg/random.hpp"
#include "chordseg/skipgram.hpp"

namespace chordseg {

struct Decomposition {
  enum class Type { whole_token, char_ngram, pitchclass };

  Type type = Type::pitchclass;
  int min_n = 2;
  int max_n = 5;
  std::uint32_t buckets = 100000;

  static Decomposition word2vec() { return {Type::whole_token}; }
  static Decomposition fasttext(int min_n = 2, int max_n = 5, std::uint32_t buckets = 100000) {
    if (min_n < 1 || max_n < min_n || buckets < 1) throw DataError("invalid n-gram decomposition");
    return {Type::char_ngram, min_n, max_n, buckets};
  }
  static Decomposition pitchclass2vec() { return {Type::pitchclass}; }

  /// "word2vec", "pitchclass2vec" or "fasttext:<min_n>:<max_n>:<buckets>".
  std::string name() const {
    switch (type) {
      case Type::whole_token: return "word2vec";
      case Type::pitchclass: return "pitchclass2vec";
      case Type::char_ngram:
        return "fasttext:" + std::to_string(min_n) + ":" + std::to_string(max_n) + ":" +
               std::to_string(buckets);
    }
    return {};
  }

  static Decomposition parse(std::string_view s) {
    if (s == "word2vec") return word2vec();
    if (s == "pitchclass2vec") return pitchclass2vec();
    if (s == "fasttext") return fasttext();
    if (s.starts_with("fasttext:")) {
      std::vector<std::string_view> parts;
      std::size_t start = 9;
      while (start <= s.size()) {
        const auto colon = std::min(s.find(':', start), s.size());
        parts.push_back(s.substr(start, colon - start));
        start = colon + 1;
      }
      if (parts.size() == 3) {
        auto lo = parse_int<int>(parts[0]);
        auto hi = parse_int<int>(parts[1]);
        auto b = parse_int<std::uint32_t>(parts[2]);
        if (lo && hi && b) return fasttext(*lo, *hi, *b);
      }
    }
    throw DataError("unknown embedding kind '" + std::string(s) + "'");
  }

  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

inline int default_dimension(const Decomposition& kind) {
  return kind.type == Decomposition::Type::pitchclass ? 10 : 300;
}

class Vocabulary {
 public:
  struct Entry {
    std::string token;
    std::uint64_t count = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Vocabulary() = default;

  /// Entries must already be in index order.
  explicit Vocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].count < 1) throw DataError("vocabulary counts must be positive");
      if (!index_.emplace(entries_[i].token, static_cast<std::uint32_t>(i)).second)
        throw DataError("duplicate vocabulary token '" + entries_[i].token + "'");
      total_ += entries_[i].count;
    }
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint64_t total_count() const { return total_; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::optional<std::uint32_t> index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::uint64_t> counts() const {
    std::vector<std::uint64_t> c;
    c.reserve(entries_.size());
    for (const auto& e : entries_) c.push_back(e.count);
    return c;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t total_ = 0;
};

/// Counts chord labels; indices by descending count, ties lexicographic.
inline Vocabulary build_vocab(std::span<const AnnotatedTrack> tracks, std::uint64_t min_count = 1) {
  if (tracks.empty()) throw EmptyInput("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : tracks)
    for (const auto& c : t.chords) ++counts[c];
  std::vector<Vocabulary::Entry> entries;
  for (auto& [token, count] : counts)
    if (count >= min_count) entries.push_back({token, count});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  return Vocabulary(std::move(entries));
}

inline std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

/// All character n-grams of "<token>" for n in [min_n, max_n], by n then position.
inline std::vector<std::string> char_ngrams(std::string_view token, int min_n, int max_n) {
  const std::string word = "<" + std::string(token) + ">";
  std::vector<std::string> out;
  for (int n = min_n; n <= max_n; ++n) {
    const auto len = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + len <= word.size(); ++i) out.push_back(word.substr(i, len));
  }
  return out;
}

/// Component ids of a token. Out-of-vocabulary whole tokens decompose to
/// nothing; out-of-vocabulary n-gram tokens keep their n-gram ids.
inline std::vector<std::uint32_t> decompose(std::string_view token, const Decomposition& kind,
                                            const Vocabulary& vocab) {
  std::vector<std::uint32_t> ids;
  switch (kind.type) {
    case Decomposition::Type::whole_token:
      if (auto i = vocab.index_of(token)) ids.push_back(*i);
      break;
    case Decomposition::Type::char_ngram: {
      if (auto i = vocab.index_of(token)) ids.push_back(*i);
      const auto base = static_cast<std::uint32_t>(vocab.size());
      for (const auto& g : char_ngrams(token, kind.min_n, kind.max_n))
        ids.push_back(base + fnv1a(g) % kind.buckets);
      break;
    }
    case Decomposition::Type::pitchclass: {
      Chord chord;
      try {
        chord = parse_chord(token);
      } catch (const DataError& e) {
        throw DataError(std::string("pitchclass decomposition: ") + e.what());
      }
      for (const auto& pair : components(chord)) ids.push_back(static_cast<std::uint32_t>(pair.id()));
      break;
    }
  }
  return ids;
}

struct EmbeddingModel {
  Decomposition kind;
  std::size_t dim = 0;
  Vocabulary vocab;
  std::vector<std::uint32_t> component_ids;  // ascending; row r of `input` belongs to component_ids[r]
  std::vector<double> input;                 // component_ids.size() x dim
  std::vector<double> output;                // vocab.size() x dim
  std::vector<double> unknown;               // dim

  std::optional<std::size_t> component_row(std::uint32_t id) const {
    const auto it = std::lower_bound(component_ids.begin(), component_ids.end(), id);
    if (it == component_ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - component_ids.begin());
  }

  std::span<const double> input_row(std::size_t r) const { return {input.data() + r * dim, dim}; }
  std::span<double> input_row(std::size_t r) { return {input.data() + r * dim, dim}; }
  std::span<const double> output_row(std::size_t w) const { return {output.data() + w * dim, dim}; }
  std::span<double> output_row(std::size_t w) { return {output.data() + w * dim, dim}; }

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

/// Sum of the token's component vectors, with the unknown-token fallbacks.
inline std::vector<double> embed(const EmbeddingModel& model, std::string_view token) {
  std::vector<double> out(model.dim, 0.0);
  std::vector<std::uint32_t> ids;
  try {
    ids = decompose(token, model.kind, model.vocab);
  } catch (const DataError&) {
    return model.unknown;
  }
  if (ids.empty() && model.kind.type == Decomposition::Type::whole_token) return model.unknown;
  for (auto id : ids) {
    if (auto r = model.component_row(id)) {
      const auto row = model.input_row(*r);
      for (std::size_t j = 0; j < model.dim; ++j) out[j] += row[j];
    }
  }
  return out;
}

/// Concatenation of each model's embedding, in argument order.
inline std::vector<double> hybrid_embed(std::span<const EmbeddingModel* const> models,
                                        std::string_view token) {
  if (models.empty()) throw EmptyInput("hybrid embedding needs at least one model");
  std::vector<double> out;
  for (const auto* m : models) {
    const auto v = embed(*m, token);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

/// s(center, context) = u_center . v_context.
inline double context_score(const EmbeddingModel& model, std::string_view center,
                            std::string_view context) {
  const auto w = model.vocab.index_of(context);
  if (!w) throw DataError("context token '" + std::string(context) + "' not in vocabulary");
  return dot(embed(model, center), model.output_row(*w));
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

struct EmbeddingConfig {
  int window = 2;
  int negatives = 20;
  double subsample_t = 1e-5;
  int dim = 10;
  int epochs = 10;
  int batch_progressions = 512;
  double learning_rate = 0.025;
  std::uint64_t min_count = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (window < 1 || negatives < 1 || dim < 1 || epochs < 0 || batch_progressions < 1 ||
        !(learning_rate > 0) || !(subsample_t > 0 && subsample_t < 1) || min_count < 1)
      throw DataError("invalid embedding training configuration");
  }
};

struct SkipgramExample {
  std::uint32_t center = 0;
  std::uint32_t context = 0;
  std::vector<std::uint32_t> negatives;

  friend bool operator==(const SkipgramExample&, const SkipgramExample&) = default;
};

/// Subsamples `sequence` (vocabulary indices), then emits one example per
/// (surviving centre, surviving neighbour within the window) pair.
inline std::vector<SkipgramExample> generate_examples(std::span<const std::uint32_t> sequence,
                                                      std::span<const double> discard,
                                                      const NegativeSampler& sampler,
                                                      const EmbeddingConfig& config, Rng& rng) {
  std::vector<std::uint32_t> kept;
  kept.reserve(sequence.size());
  for (auto w : sequence)
    if (!(discard[w] > 0.0 && rng.uniform() < discard[w])) kept.push_back(w);

  std::vector<SkipgramExample> out;
  const auto window = static_cast<std::size_t>(config.window);
  for (std::size_t t = 0; t < kept.size(); ++t) {
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(kept.size(), t + window + 1);
    for (std::size_t c = lo; c < hi; ++c) {
      if (c == t) continue;
      SkipgramExample ex{kept[t], kept[c], {}};
      ex.negatives.reserve(static_cast<std::size_t>(config.negatives));
      for (int k = 0; k < config.negatives; ++k) ex.negatives.push_back(sampler.draw(rng));
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline std::vector<double> discard_probabilities(const Vocabulary& vocab, double t) {
  std::vector<double> p(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    p[i] = discard_probability(vocab[i].count, vocab.total_count(), t);
  return p;
}

/// Track chords as vocabulary indices; labels outside the vocabulary are dropped.
inline std::vector<std::uint32_t> encode_track(const AnnotatedTrack& track, const Vocabulary& vocab) {
  std::vector<std::uint32_t> seq;
  seq.reserve(track.chords.size());
  for (const auto& c : track.chords)
    if (auto i = vocab.index_of(c)) seq.push_back(*i);
  return seq;
}

inline std::vector<SkipgramExample> generate_examples(const AnnotatedTrack& track,
                                                      const Vocabulary& vocab,
                                                      const EmbeddingConfig& config, Rng& rng) {
  const auto seq = encode_track(track, vocab);
  const auto discard = discard_probabilities(vocab, config.subsample_t);
  const auto counts = vocab.counts();
  return generate_examples(seq, discard, NegativeSampler(counts), config, rng);
}

struct EmbeddingEpoch {
  double mean_loss = 0.0;
  std::size_t examples = 0;
};

namespace detail {

// Adam over row-sparse parameters: only rows touched by an example are
// updated, each with its own step count for bias correction.
class SparseAdam {
 public:
  SparseAdam(std::size_t rows, std::size_t dim, double lr)
      : dim_(dim), lr_(lr), m_(rows * dim, 0.0), v_(rows * dim, 0.0), steps_(rows, 0) {}

  void step(std::size_t row, std::span<double> param, std::span<const double> grad) {
    const auto t = static_cast<double>(++steps_[row]);
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    double* m = m_.data() + row * dim_;
    double* v = v_.data() + row * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * grad[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * grad[j] * grad[j];
      param[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::size_t dim_;
  double lr_;
  std::vector<double> m_, v_;
  std::vector<std::uint64_t> steps_;
};

inline std::vector<std::uint32_t> initial_component_ids(const Decomposition& kind,
                                                        const Vocabulary& vocab) {
  std::vector<std::uint32_t> ids;
  switch (kind.type) {
    case Decomposition::Type::whole_token:
      for (std::uint32_t i = 0; i < vocab.size(); ++i) ids.push_back(i);
      break;
    case Decomposition::Type::pitchclass:
      for (std::uint32_t i = 0; i < 144; ++i) ids.push_back(i);
      break;
    case Decomposition::Type::char_ngram:
      for (const auto& e : vocab.entries()) {
        const auto d = decompose(e.token, kind, vocab);
        ids.insert(ids.end(), d.begin(), d.end());
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      break;
  }
  return ids;
}

}  // namespace detail

/// Fresh model: inputs uniform in [-1/(2d), 1/(2d)], outputs zero, unknown
/// vector standard normal scaled by 1/d.
inline EmbeddingModel initialize_model(const Vocabulary& vocab, const Decomposition& kind,
                                       std::size_t dim, Rng& rng) {
  EmbeddingModel model;
  model.kind = kind;
  model.dim = dim;
  model.vocab = vocab;
  model.component_ids = detail::initial_component_ids(kind, vocab);
  const double bound = 1.0 / (2.0 * static_cast<double>(dim));
  model.input.resize(model.component_ids.size() * dim);
  for (auto& x : model.input) x = rng.uniform(-bound, bound);
  model.output.assign(vocab.size() * dim, 0.0);
  model.unknown.resize(dim);
  for (auto& x : model.unknown) x = rng.normal() / static_cast<double>(dim);
  return model;
}

/// Trains with per-example Adam updates. Tracks are shuffled each epoch and
/// pooled `batch_progressions` at a time; the examples of a pool are shuffled
/// before being applied. Deterministic for a fixed seed.
inline EmbeddingModel train_embedding(std::span<const AnnotatedTrack> tracks,
                                      const EmbeddingConfig& config, const Decomposition& kind,
                                      std::vector<EmbeddingEpoch>* log = nullptr) {
  config.validate();
  if (tracks.empty()) throw EmptyInput("cannot train embeddings on an empty corpus");
  const Vocabulary vocab = build_vocab(tracks, config.min_count);
  if (vocab.empty()) throw EmptyInput("vocabulary is empty after min_count filtering");

  Rng rng(config.seed);
  const auto dim = static_cast<std::size_t>(config.dim);
  EmbeddingModel model = initialize_model(vocab, kind, dim, rng);

  // Component rows of every vocabulary token, with multiplicity.
  std::vector<std::vector<std::size_t>> rows_of(vocab.size());
  for (std::size_t w = 0; w < vocab.size(); ++w)
    for (auto id : decompose(vocab[w].token, kind, vocab)) rows_of[w].push_back(*model.component_row(id));

  std::vector<std::vector<std::uint32_t>> sequences;
  sequences.reserve(tracks.size());
  for (const auto& t : tracks) sequences.push_back(encode_track(t, vocab));

  const auto discard = discard_probabilities(vocab, config.subsample_t);
  const auto counts = vocab.counts();
  const NegativeSampler sampler(counts);
  detail::SparseAdam adam_in(model.component_ids.size(), dim, config.learning_rate);
  detail::SparseAdam adam_out(vocab.size(), dim, config.learning_rate);

  const auto k = static_cast<std::size_t>(config.negatives);
  std::vector<double> center(dim), negatives(k * dim);
  std::vector<double> g_center(dim), g_context(dim), g_negatives(k * dim), g_row(dim);
  std::vector<std::pair<std::size_t, std::size_t>> touched;  // (row, grad slot)
  std::vector<double> g_out;

  std::vector<std::size_t> order(tracks.size());
  for (std::size_t epoch = 0; epoch < static_cast<std::size_t>(config.epochs); ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_examples = 0;

    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_progressions)) {
      const std::size_t b_end = std::min(order.size(), b + static_cast<std::size_t>(config.batch_progressions));
      std::vector<SkipgramExample> pool;
      for (std::size_t i = b; i < b_end; ++i) {
        auto ex = generate_examples(sequences[order[i]], discard, sampler, config, rng);
        pool.insert(pool.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
      }
      rng.shuffle(pool);

      for (const auto& ex : pool) {
        std::fill(center.begin(), center.end(), 0.0);
        for (auto r : rows_of[ex.center]) {
          const auto row = model.input_row(r);
          for (std::size_t j = 0; j < dim; ++j) center[j] += row[j];
        }
        for (std::size_t n = 0; n < k; ++n) {
          const auto row = model.output_row(ex.negatives[n]);
          std::copy(row.begin(), row.end(), negatives.begin() + static_cast<std::ptrdiff_t>(n * dim));
        }
        const double loss = skipgram_step(center, model.output_row(ex.context), negatives, g_center,
                                          g_context, g_negatives);
        if (!std::isfinite(loss))
          throw NonFiniteLoss("non-finite skipgram loss at epoch " + std::to_string(epoch + 1) +
                              " (center '" + vocab[ex.center].token + "', context '" +
                              vocab[ex.context].token + "')");
        loss_sum += loss;
        ++n_examples;

        // Output rows: merge repeated rows (a negative may equal the context).
        touched.clear();
        g_out.clear();
        const auto add_out = [&](std::size_t row, std::span<const double> g) {
          auto it = std::find_if(touched.begin(), touched.end(), [&](const auto& p) { return p.first == row; });
          if (it == touched.end()) {
            touched.emplace_back(row, g_out.size());
            g_out.insert(g_out.end(), g.begin(), g.end());
          } else {
            for (std::size_t j = 0; j < dim; ++j) g_out[it->second + j] += g[j];
          }
        };
        add_out(ex.context, g_context);
        for (std::size_t n = 0; n < k; ++n)
          add_out(ex.negatives[n], std::span<const double>(g_negatives).subspan(n * dim, dim));
        for (const auto& [row, slot] : touched)
          adam_out.step(row, model.output_row(row), std::span<const double>(g_out).subspan(slot, dim));

        // Input rows: every component receives dL/du times its multiplicity.
        const auto& rows = rows_of[ex.center];
        for (std::size_t a = 0; a < rows.size(); ++a) {
          if (std::find(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(a), rows[a]) !=
              rows.begin() + static_cast<std::ptrdiff_t>(a))
            continue;
          const auto mult = static_cast<double>(std::count(rows.begin(), rows.end(), rows[a]));
          for (std::size_t j = 0; j < dim; ++j) g_row[j] = mult * g_center[j];
          adam_in.step(rows[a], model.input_row(rows[a]), g_row);
        }
      }
    }
    if (log) log->push_back({n_examples ? loss_sum / static_cast<double>(n_examples) : 0.0, n_examples});
  }
  return model;
}

inline void write_model(std::ostream& out, const EmbeddingModel& model) {
  const auto write_vec = [&](std::span<const double> v) {
    for (double x : v) out << ' ' << format_double(x, 9);
    out << '\n';
  };
  out << "chordemb v1 " << model.kind.name() << ' ' << model.dim << ' ' << model.component_ids.size()
      << ' ' << model.vocab.size() << '\n';
  for (std::size_t r = 0; r < model.component_ids.size(); ++r) {
    out << "c " << model.component_ids[r];
    write_vec(model.input_row(r));
  }
  for (std::size_t w = 0; w < model.vocab.size(); ++w) {
    const auto& e = model.vocab[w];
    if (e.token.empty() || e.token.find_first_of(" \t\r\n") != std::string::npos)
      throw DataError("token '" + e.token + "' cannot be stored in the model file");
    out << "w " << e.token << ' ' << e.count;
    write_vec(model.output_row(w));
  }
  out << 'u';
  write_vec(model.unknown);
}

inline EmbeddingModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_fields = [&]() -> std::optional<std::vector<std::string>> {
    if (!std::getline(in, line)) return std::nullopt;
    ++line_no;
    // every line is newline-terminated, so a missing one means truncation
    if (in.eof()) throw MalformedRecord(line_no, "truncated model file");
    std::istringstream ss(line);
    std::vector<std::string> f;
    for (std::string s; ss >> s;) f.push_back(std::move(s));
    return f;
  };

  const auto header = next_fields();
  if (!header || header->size() != 6 || (*header)[0] != "chordemb" || (*header)[1] != "v1")
    throw FormatVersionMismatch("not a 'chordemb v1' embedding model");
  EmbeddingModel model;
  model.kind = Decomposition::parse((*header)[2]);
  const auto dim = parse_int<std::size_t>((*header)[3]);
  const auto n_comp = parse_int<std::size_t>((*header)[4]);
  const auto n_vocab = parse_int<std::size_t>((*header)[5]);
  if (!dim || !n_comp || !n_vocab || *dim == 0) throw MalformedRecord(1, "bad model header");
  model.dim = *dim;

  const auto read_floats = [&](const std::vector<std::string>& f, std::size_t from,
                               std::vector<double>& dest) {
    if (f.size() != from + model.dim) throw MalformedRecord(line_no, "wrong vector length");
    for (std::size_t i = from; i < f.size(); ++i) {
      const auto x = parse_double(f[i]);
      if (!x) throw MalformedRecord(line_no, "bad number '" + f[i] + "'");
      dest.push_back(*x);
    }
  };

  for (std::size_t r = 0; r < *n_comp; ++r) {
    const auto f = next_fields();
    if (!f || f->size() < 2 || (*f)[0] != "c") throw MalformedRecord(line_no, "expected component row");
    const auto id = parse_int<std::uint32_t>((*f)[1]);
    if (!id || (!model.component_ids.empty() && *id <= model.component_ids.back()))
      throw MalformedRecord(line_no, "component ids must be ascending");
    model.component_ids.push_back(*id);
    read_floats(*f, 2, model.input);
  }
  std::vector<Vocabulary::Entry> entries;
  for (std::size_t w = 0; w < *n_vocab; ++w) {
    const auto f = next_fields();
    if (!f || f->size() < 3 || (*f)[0] != "w") throw MalformedRecord(line_no, "expected vocabulary row");
    const auto count = parse_int<std::uint64_t>((*f)[2]);
    if (!count) throw MalformedRecord(line_no, "bad count");
    entries.push_back({(*f)[1], *count});
    read_floats(*f, 3, model.output);
  }
  model.vocab = Vocabulary(std::move(entries));
  const auto f = next_fields();
  if (!f || f->empty() || (*f)[0] != "u") throw MalformedRecord(line_no, "expected unknown-vector row");
  read_floats(*f, 1, model.unknown);
  return model;
}

inline void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  write_model(out, model);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  return read_model(in);
}

}  // namespace chordseg
