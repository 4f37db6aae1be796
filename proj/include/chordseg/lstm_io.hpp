#pragma once

// Segmenter artifact: "<prefix>.json" manifest plus "<prefix>.bin", the flat
// parameter vector as little-endian IEEE-754 float64 in LstmParams order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chordseg/error.hpp"
#include "chordseg/lstm.hpp"

namespace chordseg {

inline constexpr const char* kSegmenterFormat = "chordseg-lstm v1";

struct SegmenterArtifact {
  LstmParams params;
  SegmenterConfig config;
  std::vector<std::string> labels;           // index -> section label
  std::vector<std::string> embedding_kinds;  // concatenated in this order
  std::vector<std::string> embedding_paths;
  std::size_t best_epoch = 0;
};

inline nlohmann::json to_json(const SegmenterConfig& c) {
  return {{"hidden_size", c.hidden_size}, {"num_layers", c.num_layers}, {"dropout", c.dropout},
          {"batch_tracks", c.batch_tracks}, {"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},   {"patience", c.patience},     {"seed", c.seed},
          {"n_labels", c.n_labels}};
}

inline SegmenterConfig segmenter_config_from_json(const nlohmann::json& j) {
  SegmenterConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.batch_tracks = j.at("batch_tracks").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_labels = j.at("n_labels").get<std::size_t>();
  return c;
}

inline std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return std::filesystem::path(prefix.string() + suffix);
}

inline void save_segmenter(const SegmenterArtifact& a, const std::filesystem::path& prefix) {
  const auto& s = a.params.shape;
  const auto bin_path = with_suffix(prefix, ".bin");
  nlohmann::json m;
  m["format"] = kSegmenterFormat;
  m["config"] = to_json(a.config);
  m["labels"] = a.labels;
  m["shape"] = {{"input_dim", s.input_dim}, {"hidden", s.hidden}, {"layers", s.layers}, {"n_labels", s.n_labels}};
  m["embedding"] = {{"kinds", a.embedding_kinds}, {"paths", a.embedding_paths}};
  m["parameter_count"] = a.params.values.size();
  m["parameter_file"] = bin_path.filename().string();
  m["parameter_layout"] = "layer-major; per layer W(4H x in) U(4H x H) b(4H), gates i,f,g,o; then P(K x H), q(K)";
  m["best_epoch"] = a.best_epoch;

  std::ofstream json_out(with_suffix(prefix, ".json"));
  if (!json_out) throw IoError("cannot write segmenter manifest for '" + prefix.string() + "'");
  json_out << m.dump(2) << '\n';

  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot write '" + bin_path.string() + "'");
  for (double x : a.params.values) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    bin.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!bin) throw IoError("write failed for '" + bin_path.string() + "'");
}

inline SegmenterArtifact load_segmenter(const std::filesystem::path& prefix) {
  const auto json_path = with_suffix(prefix, ".json");
  std::ifstream json_in(json_path);
  if (!json_in) throw IoError("cannot open '" + json_path.string() + "'");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(json_in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad segmenter manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != kSegmenterFormat)
    throw FormatVersionMismatch("'" + json_path.string() + "' is not a " + kSegmenterFormat + " manifest");

  SegmenterArtifact a;
  try {
    a.config = segmenter_config_from_json(m.at("config"));
    a.labels = m.at("labels").get<std::vector<std::string>>();
    a.embedding_kinds = m.at("embedding").at("kinds").get<std::vector<std::string>>();
    a.embedding_paths = m.at("embedding").at("paths").get<std::vector<std::string>>();
    a.best_epoch = m.value("best_epoch", std::size_t{0});
    const auto& sh = m.at("shape");
    a.params = LstmParams(LstmShape{sh.at("input_dim").get<std::size_t>(), sh.at("hidden").get<std::size_t>(),
                                    sh.at("layers").get<std::size_t>(), sh.at("n_labels").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad segmenter manifest: " + std::string(e.what()));
  }
  if (m.value("parameter_count", std::size_t{0}) != a.params.values.size())
    throw DataError("parameter count does not match the declared shape");

  const auto bin_path = json_path.parent_path() / m.value("parameter_file", "");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open '" + bin_path.string() + "'");
  for (auto& x : a.params.values) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("truncated parameter file");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    x = std::bit_cast<double>(bits);
  }
  if (bin.peek() != std::char_traits<char>::eof()) throw DataError("parameter file has trailing bytes");
  return a;
}

}  // namespace chordseg
