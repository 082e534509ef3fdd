#ifndef STGAN_CONFIG_HPP
#define STGAN_CONFIG_HPP

// Flat-key JSON (de)serialization of TrainConfig and SynthConfig, plus the
// SHA-256 helpers used for config and checkpoint digests.

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>

#include <json.hpp>

#include "stgan/core_types.hpp"
#include "stgan/synthetic.hpp"

namespace stgan {

using nlohmann::json;

inline std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1, Errc::DiskError,
          "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline std::string sha256_hex(const std::string& s) {
  return sha256_hex(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

namespace config_detail {

template <class T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string(key) + ": " + e.what());
  }
}

inline void reject_unknown(const json& j, const std::set<std::string>& known) {
  require(j.is_object(), Errc::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, Errc::InvalidConfig, key + ": unknown key");
}

}  // namespace config_detail

inline json to_json(const TrainConfig& c) {
  return {{"tau", c.tau},
          {"shift", c.shift},
          {"lambda_s", c.lambda_s},
          {"lambda_t", c.lambda_t},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"crop_size", c.crop_size},
          {"seed", c.seed},
          {"spatial_only", c.spatial_only},
          {"output_mode", std::string(to_string(c.output_mode))},
          {"gen_depth", c.gen_depth},
          {"gen_width", c.gen_width},
          {"disc_width", c.disc_width},
          {"disc_layers", c.disc_layers},
          {"disc_instance_norm", c.disc_instance_norm},
          {"disc_conditional", c.disc_conditional},
          {"n_train", c.n_train},
          {"n_val", c.n_val},
          {"grid_sampling", c.grid_sampling},
          {"checkpoint_every", c.checkpoint_every},
          {"log_every", c.log_every}};
}

/// Keys absent from `j` keep their current (default) values.
inline void merge_json(const json& j, TrainConfig& c) {
  using config_detail::read;
  config_detail::reject_unknown(j, {"tau", "shift", "lambda_s", "lambda_t", "learning_rate", "beta1", "beta2",
                                    "batch_size", "steps", "crop_size", "seed", "spatial_only", "output_mode",
                                    "gen_depth", "gen_width", "disc_width", "disc_layers", "disc_instance_norm",
                                    "disc_conditional", "n_train", "n_val", "grid_sampling", "checkpoint_every",
                                    "log_every"});
  read(j, "tau", c.tau);
  read(j, "shift", c.shift);
  read(j, "lambda_s", c.lambda_s);
  read(j, "lambda_t", c.lambda_t);
  read(j, "learning_rate", c.learning_rate);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "batch_size", c.batch_size);
  read(j, "steps", c.steps);
  read(j, "crop_size", c.crop_size);
  read(j, "seed", c.seed);
  read(j, "spatial_only", c.spatial_only);
  std::string mode(to_string(c.output_mode));
  read(j, "output_mode", mode);
  c.output_mode = parse_output_mode(mode);
  read(j, "gen_depth", c.gen_depth);
  read(j, "gen_width", c.gen_width);
  read(j, "disc_width", c.disc_width);
  read(j, "disc_layers", c.disc_layers);
  read(j, "disc_instance_norm", c.disc_instance_norm);
  read(j, "disc_conditional", c.disc_conditional);
  read(j, "n_train", c.n_train);
  read(j, "n_val", c.n_val);
  read(j, "grid_sampling", c.grid_sampling);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "log_every", c.log_every);
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  merge_json(j, c);
  return c;
}

/// Digest over everything that defines the model and its optimization; run
/// length, logging cadence and dataset sizes are excluded so a run can be
/// resumed with a larger step budget.
inline std::string config_digest(const TrainConfig& c) {
  json j = to_json(c);
  for (const char* k : {"steps", "checkpoint_every", "log_every", "n_train", "n_val", "grid_sampling", "output_mode"})
    j.erase(k);
  return sha256_hex(j.dump());
}

inline json to_json(const synthetic::SynthConfig& c) {
  return {{"n_blobs", c.n_blobs},
          {"blob_sigma", c.blob_sigma},
          {"velocity_range", c.velocity_range},
          {"frame_size", c.frame_size},
          {"T", c.T},
          {"lag", c.lag},
          {"transform", std::string(synthetic::to_string(c.transform))},
          {"strength", c.strength},
          {"noise_sigma", c.noise_sigma},
          {"seed", c.seed}};
}

inline void merge_json(const json& j, synthetic::SynthConfig& c) {
  using config_detail::read;
  config_detail::reject_unknown(j, {"n_blobs", "blob_sigma", "velocity_range", "frame_size", "T", "lag", "transform",
                                    "strength", "noise_sigma", "seed"});
  read(j, "n_blobs", c.n_blobs);
  read(j, "blob_sigma", c.blob_sigma);
  read(j, "velocity_range", c.velocity_range);
  read(j, "frame_size", c.frame_size);
  read(j, "T", c.T);
  read(j, "lag", c.lag);
  std::string transform(synthetic::to_string(c.transform));
  read(j, "transform", transform);
  c.transform = synthetic::parse_transform(transform);
  read(j, "strength", c.strength);
  read(j, "noise_sigma", c.noise_sigma);
  read(j, "seed", c.seed);
}

inline synthetic::SynthConfig synth_config_from_json(const json& j) {
  synthetic::SynthConfig c;
  merge_json(j, c);
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::DiskError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  require(out.good(), Errc::DiskError, "cannot write " + path.string());
}

}  // namespace stgan

#endif  // STGAN_CONFIG_HPP
