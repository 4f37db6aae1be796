#pragma once

// Command-line driver. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numeric failure. Every command writes "<output>.manifest.json" with the
// effective options next to its main output.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "chordseg/corpus.hpp"
#include "chordseg/embedding.hpp"
#include "chordseg/error.hpp"
#include "chordseg/form.hpp"
#include "chordseg/lstm.hpp"
#include "chordseg/lstm_io.hpp"
#include "chordseg/metrics.hpp"
#include "chordseg/pipeline.hpp"

namespace chordseg::cli {

inline constexpr const char* kVersion = "1.0.0";

struct SegmenterPreset {
  std::size_t hidden;
  std::size_t layers;
  double dropout;
};

/// Best validation configurations reported for each embedding on Billboard.
inline const std::map<std::string, SegmenterPreset>& segmenter_presets() {
  static const std::map<std::string, SegmenterPreset> presets = {
      {"word2vec", {100, 5, 0.3}},
      {"fasttext", {100, 5, 0.5}},
      {"pitchclass2vec", {100, 10, 0.0}},
      {"pitchclass2vec+word2vec", {200, 5, 0.3}},
      {"pitchclass2vec+fasttext", {200, 5, 0.0}},
  };
  return presets;
}

namespace detail {

/// Reads `key = value` lines; '#' starts a comment.
inline std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw MalformedRecord(line_no, "expected 'key = value' in " + path);
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

/// Splices config-file options in right after the subcommand so that
/// command-line flags, which come later, take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::optional<std::string> path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
    if (path && args.size() > 1) {
      const auto extra = config_file_args(*path);
      args.insert(args.begin() + 2, extra.begin(), extra.end());
      break;
    }
  }
  return args;
}

inline nlohmann::json effective_options(const CLI::App& cmd) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto* opt : cmd.get_options()) {
    const auto name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    const auto& results = opt->results();
    j[name] = results.empty() ? opt->get_default_str() : results.back();
  }
  return j;
}

inline void write_manifest(const std::filesystem::path& output, const CLI::App& cmd, nlohmann::json extra = {}) {
  nlohmann::json m;
  m["tool"] = "chordseg";
  m["version"] = kVersion;
  m["command"] = cmd.get_name();
  m["options"] = effective_options(cmd);
  m["output"] = output.filename().string();
  if (!extra.is_null()) m["details"] = std::move(extra);
  std::ofstream out(output.string() + ".manifest.json");
  if (!out) throw IoError("cannot write manifest for '" + output.string() + "'");
  out << m.dump(2) << '\n';
}

inline std::vector<AnnotatedTrack> load_tracks(const std::string& path, std::ostream& err) {
  auto loaded = load_corpus(path);
  for (const auto& s : loaded.skipped)
    err << "warning: skipped track '" << s.id << "' (line " << s.line << "): " << s.reason << '\n';
  return std::move(loaded.tracks);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline SectionGrammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grammar '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<SectionGrammar>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTemplate("bad grammar file: " + std::string(e.what()));
  }
}

inline std::uint64_t track_seed(std::uint64_t seed, const std::string& id) {
  return seed ^ (static_cast<std::uint64_t>(fnv1a(id)) * 0x9E3779B97F4A7C15ull);
}

}  // namespace detail

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(const std::vector<std::string>& raw_args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Chord-sequence structure segmentation with chord embeddings", "chordseg"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string("chordseg ") + kVersion);

  std::uint64_t seed = 0;
  std::string config_path;
  const auto common = [&](CLI::App* cmd) {
    cmd->option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--config", config_path, "File of 'key = value' option defaults");
  };

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic annotated corpus");
  common(synth);
  std::size_t n_tracks = 200;
  std::string grammar_path, synth_out;
  SynthOptions synth_opts;
  synth->add_option("--tracks", n_tracks, "Number of tracks");
  synth->add_option("--grammar", grammar_path, "JSON section grammar (default: built-in six-section grammar)");
  synth->add_option("--min-sections", synth_opts.min_sections);
  synth->add_option("--max-sections", synth_opts.max_sections);
  synth->add_flag("--transpose", synth_opts.transpose, "Transpose each track by a random interval");
  synth->add_option("--out", synth_out, "Output corpus (JSONL)")->required();

  // split-corpus
  auto* split = app.add_subcommand("split-corpus", "Split a corpus into train/validation/test files");
  common(split);
  std::string split_corpus, split_prefix;
  std::vector<double> ratios{0.75, 0.17, 0.08};
  split->add_option("--corpus", split_corpus)->required();
  split->add_option("--ratios", ratios, "train,validation,test fractions")->expected(3)->delimiter(',');
  split->add_option("--out-prefix", split_prefix, "Writes <prefix>.{train,validation,test}.jsonl")->required();

  // train-embedding
  auto* temb = app.add_subcommand("train-embedding", "Train chord embeddings");
  common(temb);
  std::string emb_corpus, emb_kind = "pitchclass2vec", emb_out;
  EmbeddingConfig ecfg;
  int emb_dim = 0, min_n = 2, max_n = 5;
  std::uint32_t buckets = 100000;
  temb->add_option("--corpus", emb_corpus)->required();
  temb->add_option("--kind", emb_kind)->check(CLI::IsMember({"word2vec", "fasttext", "pitchclass2vec"}));
  temb->add_option("--out", emb_out, "Model file")->required();
  temb->add_option("--dim", emb_dim, "Embedding dimension (0: 10 for pitchclass2vec, 300 otherwise)");
  temb->add_option("--epochs", ecfg.epochs);
  temb->add_option("--window", ecfg.window, "Context chords on each side");
  temb->add_option("--negatives", ecfg.negatives);
  temb->add_option("--subsample", ecfg.subsample_t);
  temb->add_option("--batch", ecfg.batch_progressions, "Progressions pooled per shuffle");
  temb->add_option("--lr", ecfg.learning_rate);
  temb->add_option("--min-count", ecfg.min_count);
  temb->add_option("--min-n", min_n);
  temb->add_option("--max-n", max_n);
  temb->add_option("--buckets", buckets);

  // train-segmenter
  auto* tseg = app.add_subcommand("train-segmenter", "Train the LSTM section labeller");
  common(tseg);
  std::string seg_train, seg_val, seg_emb, seg_emb2, seg_out, preset;
  SegmenterConfig scfg;
  tseg->add_option("--train", seg_train, "Training corpus")->required();
  tseg->add_option("--val", seg_val, "Validation corpus (enables early stopping)");
  tseg->add_option("--embedding", seg_emb)->required();
  tseg->add_option("--embedding2", seg_emb2, "Second model, concatenated after the first");
  tseg->add_option("--out", seg_out, "Artifact prefix (<prefix>.json, <prefix>.bin)")->required();
  std::vector<std::string> preset_names;
  for (const auto& [name, p] : segmenter_presets()) preset_names.push_back(name);
  tseg->add_option("--preset", preset, "Hidden size, layers and dropout of a reference configuration")
      ->check(CLI::IsMember(preset_names));
  auto* hidden_opt = tseg->add_option("--hidden", scfg.hidden_size);
  auto* layers_opt = tseg->add_option("--layers", scfg.num_layers);
  auto* dropout_opt = tseg->add_option("--dropout", scfg.dropout);
  tseg->add_option("--batch", scfg.batch_tracks);
  tseg->add_option("--lr", scfg.learning_rate);
  tseg->add_option("--max-epochs", scfg.max_epochs);
  tseg->add_option("--patience", scfg.patience, "Epochs without validation improvement (0: never stop early)");

  // segment / baseline
  std::string method, seg_corpus, seg_file, seg_model, seg_override1, seg_override2;
  const auto add_segment_options = [&](CLI::App* cmd, std::vector<std::string> methods) {
    common(cmd);
    cmd->add_option("--method", method)->required()->check(CLI::IsMember(methods));
    cmd->add_option("--corpus", seg_corpus)->required();
    cmd->add_option("--out", seg_file, "Segmentation file (JSONL)")->required();
  };
  auto* segment = app.add_subcommand("segment", "Segment every track of a corpus");
  add_segment_options(segment, {"lstm", "form-raw", "form-simple", "random", "fixed-pop"});
  segment->add_option("--model", seg_model, "Segmenter artifact prefix (lstm)");
  segment->add_option("--embedding", seg_override1, "Override the first embedding path (lstm)");
  segment->add_option("--embedding2", seg_override2, "Override the second embedding path (lstm)");
  auto* baseline = app.add_subcommand("baseline", "Segment with a non-neural baseline");
  add_segment_options(baseline, {"form-raw", "form-simple", "random", "fixed-pop"});

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score segmentations against annotated sections");
  common(evaluate);
  std::string eval_ref, eval_est, eval_out;
  evaluate->add_option("--ref", eval_ref, "Annotated corpus")->required();
  evaluate->add_option("--est", eval_est, "Segmentation file")->required();
  evaluate->add_option("--out", eval_out, "Report prefix (<prefix>.json, <prefix>.csv)");

  std::vector<std::string> args;
  try {
    args = detail::expand_config(raw_args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (synth->parsed()) {
      const auto grammar = grammar_path.empty() ? default_synthetic_grammar() : detail::load_grammar(grammar_path);
      const auto tracks = generate_synthetic_corpus(n_tracks, grammar, seed, synth_opts);
      save_corpus(synth_out, tracks);
      detail::write_manifest(synth_out, *synth, {{"tracks", tracks.size()}});
      out << "wrote " << tracks.size() << " tracks to " << synth_out << '\n';
    } else if (split->parsed()) {
      const auto tracks = detail::load_tracks(split_corpus, err);
      const auto parts = split_dataset(tracks, {ratios[0], ratios[1], ratios[2]}, seed);
      const std::pair<const char*, const std::vector<AnnotatedTrack>*> files[] = {
          {".train.jsonl", &parts.train}, {".validation.jsonl", &parts.validation}, {".test.jsonl", &parts.test}};
      for (const auto& [suffix, part] : files) {
        save_corpus(split_prefix + suffix, *part);
        out << split_prefix << suffix << ": " << part->size() << " tracks\n";
      }
      detail::write_manifest(split_prefix, *split,
                             {{"train", parts.train.size()}, {"validation", parts.validation.size()},
                              {"test", parts.test.size()}});
    } else if (temb->parsed()) {
      const auto tracks = detail::load_tracks(emb_corpus, err);
      Decomposition kind = emb_kind == "word2vec"   ? Decomposition::word2vec()
                           : emb_kind == "fasttext" ? Decomposition::fasttext(min_n, max_n, buckets)
                                                    : Decomposition::pitchclass2vec();
      ecfg.dim = emb_dim > 0 ? emb_dim : default_dimension(kind);
      ecfg.seed = seed;
      std::vector<EmbeddingEpoch> log;
      const auto model = train_embedding(tracks, ecfg, kind, &log);
      save_model(model, emb_out);
      nlohmann::json losses = nlohmann::json::array();
      for (std::size_t e = 0; e < log.size(); ++e) {
        losses.push_back({{"epoch", e + 1}, {"mean_loss", log[e].mean_loss}, {"examples", log[e].examples}});
        out << "epoch " << e + 1 << " loss " << format_double(log[e].mean_loss, 6) << " (" << log[e].examples
            << " examples)\n";
      }
      detail::write_manifest(emb_out, *temb,
                             {{"kind", kind.name()}, {"dim", ecfg.dim}, {"vocabulary", model.vocab.size()},
                              {"epochs", losses}});
    } else if (tseg->parsed()) {
      if (!preset.empty()) {
        const auto& p = segmenter_presets().at(preset);
        if (hidden_opt->count() == 0) scfg.hidden_size = p.hidden;
        if (layers_opt->count() == 0) scfg.num_layers = p.layers;
        if (dropout_opt->count() == 0) scfg.dropout = p.dropout;
      }
      const auto train = detail::load_tracks(seg_train, err);
      const auto val = seg_val.empty() ? std::vector<AnnotatedTrack>{} : detail::load_tracks(seg_val, err);
      std::vector<EmbeddingModel> models{load_model(seg_emb)};
      if (!seg_emb2.empty()) models.push_back(load_model(seg_emb2));
      std::vector<const EmbeddingModel*> ptrs;
      for (const auto& m : models) ptrs.push_back(&m);
      ChordFeaturizer features(ptrs);

      const auto labels = collect_labels(train);
      if (labels.empty()) throw DataError("training corpus has no section labels");
      std::vector<LabeledSequence> train_seqs, val_seqs;
      for (const auto& t : train)
        if (!t.chords.empty() && !t.sections.empty()) train_seqs.push_back(make_sequence(t, features, labels));
      for (const auto& t : val)
        if (!t.chords.empty() && !t.sections.empty()) val_seqs.push_back(make_sequence(t, features, labels));
      scfg.n_labels = labels.size();
      scfg.seed = seed;
      const auto result = train_segmenter(train_seqs, val_seqs, scfg);

      SegmenterArtifact artifact{result.params, scfg, labels, {}, {seg_emb}, result.best_epoch};
      if (!seg_emb2.empty()) artifact.embedding_paths.push_back(seg_emb2);
      for (const auto& m : models) artifact.embedding_kinds.push_back(m.kind.name());
      save_segmenter(artifact, seg_out);
      nlohmann::json log = nlohmann::json::array();
      for (const auto& e : result.log) {
        log.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_f1", e.validation_f1}});
        out << "epoch " << e.epoch << " loss " << format_double(e.train_loss, 6) << " val F1 "
            << format_double(e.validation_f1, 6) << '\n';
      }
      detail::write_manifest(seg_out, *tseg,
                             {{"hidden_size", scfg.hidden_size}, {"num_layers", scfg.num_layers},
                              {"dropout", scfg.dropout}, {"labels", labels}, {"best_epoch", result.best_epoch},
                              {"parameters", result.params.values.size()}, {"log", log}});
    } else if (segment->parsed() || baseline->parsed()) {
      const CLI::App& cmd = segment->parsed() ? *segment : *baseline;
      auto tracks = detail::load_tracks(seg_corpus, err);
      std::sort(tracks.begin(), tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
      std::vector<TrackSegmentation> results(tracks.size());

      std::optional<SegmenterArtifact> artifact;
      std::vector<EmbeddingModel> models;
      if (method == "lstm") {
        if (seg_model.empty()) throw CLI::RequiredError("--model");
        artifact = load_segmenter(seg_model);
        auto paths = artifact->embedding_paths;
        if (!seg_override1.empty() && !paths.empty()) paths[0] = seg_override1;
        if (!seg_override2.empty() && paths.size() > 1) paths[1] = seg_override2;
        for (const auto& p : paths) models.push_back(load_model(p));
      }
      std::vector<const EmbeddingModel*> ptrs;
      for (const auto& m : models) ptrs.push_back(&m);

      // Features are computed up front so workers only read shared state.
      std::vector<std::vector<double>> inputs(tracks.size());
      if (artifact) {
        ChordFeaturizer features(ptrs);
        if (features.dim() != artifact->params.shape.input_dim)
          throw DimensionMismatch("embedding dimension does not match the segmenter");
        for (std::size_t i = 0; i < tracks.size(); ++i) inputs[i] = features.track_inputs(tracks[i]);
      }

      parallel_for(tracks.size(), [&](std::size_t i) {
        const auto& t = tracks[i];
        results[i].id = t.id;
        if (t.chords.empty()) return;
        const std::span<const std::string> chords(t.chords);
        if (method == "lstm") {
          const auto pred = predict_sections(inputs[i], artifact->params.shape.input_dim, artifact->params);
          results[i].segmentation = labels_to_segments(pred, artifact->labels);
        } else if (method == "form-raw") {
          results[i].segmentation = form_raw_segment(chords);
        } else if (method == "form-simple") {
          results[i].segmentation = form_simple_segment(chords);
        } else if (method == "random") {
          Rng rng(detail::track_seed(seed, t.id));
          results[i].segmentation = random_segment(chords.size(), rng);
        } else {
          results[i].segmentation = fixed_pop_segment(chords.size());
        }
      });
      std::erase_if(results, [](const auto& r) { return r.segmentation.segments.empty(); });

      std::ostringstream text;
      write_segmentations(text, results);
      detail::write_text(seg_file, text.str());
      detail::write_manifest(seg_file, cmd, {{"method", method}, {"tracks", results.size()}});
      out << "segmented " << results.size() << " tracks with " << method << '\n';
    } else if (evaluate->parsed()) {
      auto tracks = detail::load_tracks(eval_ref, err);
      std::ifstream est_in(eval_est);
      if (!est_in) throw IoError("cannot open segmentation file '" + eval_est + "'");
      const auto estimates = read_segmentations(est_in);
      std::map<std::string, const Segmentation*> by_id;
      for (const auto& e : estimates) by_id[e.id] = &e.segmentation;

      std::sort(tracks.begin(), tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
      std::vector<std::pair<Segmentation, Segmentation>> pairs;
      std::vector<std::string> ids;
      for (const auto& t : tracks) {
        if (t.chords.empty()) continue;
        const auto it = by_id.find(t.id);
        if (it == by_id.end()) throw DataError("no estimate for track '" + t.id + "'");
        pairs.emplace_back(reference_segmentation(t), *it->second);
        ids.push_back(t.id);
      }
      const auto scores = evaluate_corpus(pairs, ids);
      const auto report = report_json(scores);
      if (!eval_out.empty()) {
        detail::write_text(eval_out + ".json", report.dump(2) + "\n");
        std::ostringstream csv;
        write_report_csv(csv, scores);
        detail::write_text(eval_out + ".csv", csv.str());
        detail::write_manifest(eval_out, *evaluate, {{"tracks", pairs.size()}});
      }
      out << report["aggregate"].dump(2) << '\n';
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace chordseg::cli
