#ifndef STGAN_CLI_HPP
#define STGAN_CLI_HPP

// The `stgan` executable: synth, train, translate, evaluate, third-channel.
//
// Exit codes: 0 ok, 2 bad flags or config, 3 training diverged, 4 I/O or
// data mismatch, 5 checkpoint unreadable or incompatible.

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stgan/config.hpp"
#include "stgan/inference.hpp"
#include "stgan/ingest.hpp"
#include "stgan/metrics.hpp"
#include "stgan/synthetic.hpp"
#include "stgan/trainer.hpp"

namespace stgan::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kDiverged = 3, kIoError = 4, kCheckpointError = 5 };

inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::ConfigMismatch:
    case Errc::TauTooSmall:
    case Errc::ShiftTooLarge:
    case Errc::LagTooLarge:
    case Errc::CropTooLarge:
    case Errc::InsufficientArea:
    case Errc::InputTooSmall:
    case Errc::SequenceTooShort:
    case Errc::DirectionMismatch:
    case Errc::ArityError:
      return kConfigError;
    case Errc::NaNLoss:
      return kDiverged;
    case Errc::VersionMismatch:
    case Errc::CorruptFile:
      return kCheckpointError;
    default:
      return kIoError;
  }
}

namespace detail {

// Flags that override config-file values only when given on the command line.
template <class Config>
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, T Config::*member, const std::string& help,
                   const Config& defaults = {}) {
    auto value = std::make_shared<T>(defaults.*member);
    CLI::Option* opt = app->add_option(name, *value, help)->capture_default_str();
    apply_.push_back([opt, value, member](Config& c) {
      if (opt->count() > 0) c.*member = *value;
    });
    return opt;
  }

  CLI::Option* add_switch(CLI::App* app, const std::string& name, bool Config::*member, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *value, help);
    apply_.push_back([opt, value, member](Config& c) {
      if (opt->count() > 0) c.*member = *value;
    });
    return opt;
  }

  void add_custom(std::function<void(Config&)> f) { apply_.push_back(std::move(f)); }

  void apply(Config& c) const {
    for (const auto& f : apply_) f(c);
  }

 private:
  std::vector<std::function<void(Config&)>> apply_;
};

inline std::string extension_of(const fs::path& dir) {
  const auto files = ingest::list_frames(dir);
  require(!files.empty(), Errc::EmptyDirectory, "no indexed PNG/TIFF frames in " + dir.string());
  return io::lower_extension(files.front().path);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::DiskError, "cannot create " + dir.string());
}

inline nlohmann::json translation_manifest(const Translation& tr, const fs::path& checkpoint, const TrainState& state,
                                           Direction direction, OutputMode mode, const fs::path& input,
                                           const std::vector<fs::path>& written) {
  nlohmann::json frames = nlohmann::json::array(), fallback = nlohmann::json::array();
  for (int i = 0; i < tr.sequence.length(); ++i) {
    const bool fb = tr.spatial_fallback[static_cast<std::size_t>(i)];
    frames.push_back({{"index", tr.sequence[i].t},
                      {"file", written[static_cast<std::size_t>(i)].filename().string()},
                      {"output", fb ? "spatial-fallback" : std::string(to_string(mode))}});
    if (fb) fallback.push_back(tr.sequence[i].t);
  }
  return {{"checkpoint", fs::absolute(checkpoint).lexically_normal().string()},
          {"checkpoint_digest", checkpoint_file_digest(checkpoint)},
          {"config_digest", state.bundle.digest},
          {"step", state.bundle.step},
          {"tau", state.bundle.config.tau},
          {"direction", std::string(to_string(direction))},
          {"mode", std::string(to_string(mode))},
          {"input", fs::absolute(input).lexically_normal().string()},
          {"spatial_fallback", fallback},
          {"frames", frames}};
}

struct TranslateArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::string direction = "u2v";
  std::string mode = "averaged";
  std::string suffix;
  int tile = 0;
  int overlap = 32;
};

inline void add_translate_flags(CLI::App* cmd, TranslateArgs& a, bool with_direction) {
  cmd->add_option("--checkpoint,-c", a.checkpoint, "Trained checkpoint file")->required();
  cmd->add_option("--input,-i", a.input, "Directory of source-domain frames")->required();
  if (with_direction)
    cmd->add_option("--direction", a.direction, "u2v (G_s) or v2u (F_s)")->capture_default_str();
  cmd->add_option("--mode", a.mode, "spatial or averaged")->capture_default_str();
  cmd->add_option("--tile", a.tile, "Tile size for large frames; 0 translates whole frames")->capture_default_str();
  cmd->add_option("--overlap", a.overlap, "Tile overlap in pixels")->capture_default_str();
}

inline void run_translate(const TranslateArgs& a, std::ostream& out) {
  const Direction direction = parse_direction(a.direction);
  const OutputMode mode = parse_output_mode(a.mode);
  require(a.tile == 0 || (a.tile >= kMinFrameExtent && a.overlap >= 0 && a.overlap < a.tile), Errc::InvalidConfig,
          "tile: must be 0 or >= 16 with 0 <= overlap < tile");
  const TrainState state = load_checkpoint(a.checkpoint);
  const auto ext = extension_of(a.input);
  const VideoSequence seq = ingest::load_sequence(a.input, source_domain(direction));
  InferenceOptions opt;
  opt.tile = a.tile;
  opt.overlap = a.overlap;
  const Translation tr = translate(state.bundle, seq, direction, mode, opt);
  const auto written = ingest::save_sequence(tr.sequence, a.out, seq.bit_depth, ext, a.suffix);
  const auto manifest = translation_manifest(tr, a.checkpoint, state, direction, mode, a.input, written);
  write_text_file(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << written.size() << " frames to " << a.out << "\n";
}

}  // namespace detail

/// Parses and executes one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"STGAN: spatial-temporal translation between paired microscopy channels", "stgan"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a paired synthetic (U, V) movie with known structure");
  std::string synth_config, synth_out;
  bool synth_oracle = false;
  detail::Overrides<synthetic::SynthConfig> synth_flags;
  synth->add_option("--config", synth_config, "JSON file with SynthConfig keys");
  synth->add_option("--out,-o", synth_out, "Output directory (u/, v/, synth_config.json)")->required();
  synth->add_flag("--oracle", synth_oracle, "Also write the noise-free oracle translation to oracle/");
  synth_flags.add(synth, "--n-blobs", &synthetic::SynthConfig::n_blobs, "Blobs per movie");
  synth_flags.add(synth, "--blob-sigma", &synthetic::SynthConfig::blob_sigma, "Mean blob radius (px)");
  synth_flags.add(synth, "--velocity-range", &synthetic::SynthConfig::velocity_range, "Max speed per axis (px/frame)");
  synth_flags.add(synth, "--frame-size", &synthetic::SynthConfig::frame_size, "Frame side (px)");
  synth_flags.add(synth, "--frames,-T", &synthetic::SynthConfig::T, "Movie length");
  synth_flags.add(synth, "--lag", &synthetic::SynthConfig::lag, "V lags U by this many frames");
  synth_flags.add(synth, "--strength", &synthetic::SynthConfig::strength, "Weight of the transformed U in V");
  synth_flags.add(synth, "--noise-sigma", &synthetic::SynthConfig::noise_sigma, "Gaussian noise on V");
  synth_flags.add(synth, "--seed", &synthetic::SynthConfig::seed, "Random seed");
  auto transform = std::make_shared<std::string>("identity");
  auto* transform_opt = synth->add_option("--transform", *transform, "identity, halo, blur or threshold")
                            ->capture_default_str();
  synth_flags.add_custom([transform, transform_opt](synthetic::SynthConfig& c) {
    if (transform_opt->count() > 0) c.transform = synthetic::parse_transform(*transform);
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the six networks on a paired movie");
  std::string train_config, domain_u, domain_v, train_out, resume;
  detail::Overrides<TrainConfig> train_flags;
  train_cmd->add_option("--config", train_config, "JSON file with TrainConfig keys");
  train_cmd->add_option("--domain-u", domain_u, "Directory of U frames")->required();
  train_cmd->add_option("--domain-v", domain_v, "Directory of V frames")->required();
  train_cmd->add_option("--out,-o", train_out, "Output directory (checkpoints, losses.csv)")->required();
  train_cmd->add_option("--resume", resume, "Continue from this checkpoint");
  train_flags.add(train_cmd, "--tau", &TrainConfig::tau, "Causal window length");
  train_flags.add(train_cmd, "--shift", &TrainConfig::shift, "Time shift removed before windowing (V lags U)");
  train_flags.add(train_cmd, "--lambda-s", &TrainConfig::lambda_s, "Spatial L1 weight");
  train_flags.add(train_cmd, "--lambda-t", &TrainConfig::lambda_t, "Temporal loss weight");
  train_flags.add(train_cmd, "--lr", &TrainConfig::learning_rate, "Adam learning rate");
  train_flags.add(train_cmd, "--beta1", &TrainConfig::beta1, "Adam beta1");
  train_flags.add(train_cmd, "--beta2", &TrainConfig::beta2, "Adam beta2");
  train_flags.add(train_cmd, "--batch-size", &TrainConfig::batch_size, "Windows per step");
  train_flags.add(train_cmd, "--steps", &TrainConfig::steps, "Total optimizer steps");
  train_flags.add(train_cmd, "--crop", &TrainConfig::crop_size, "Crop side (px)");
  train_flags.add(train_cmd, "--seed", &TrainConfig::seed, "Random seed");
  train_flags.add_switch(train_cmd, "--spatial-only", &TrainConfig::spatial_only,
                         "Ablation: drop the temporal losses and never update G_t/F_t");
  train_flags.add(train_cmd, "--gen-depth", &TrainConfig::gen_depth, "U-Net levels");
  train_flags.add(train_cmd, "--gen-width", &TrainConfig::gen_width, "U-Net base width");
  train_flags.add(train_cmd, "--disc-width", &TrainConfig::disc_width, "Discriminator base width");
  train_flags.add(train_cmd, "--disc-layers", &TrainConfig::disc_layers, "Stride-2 discriminator layers");
  train_flags.add_switch(train_cmd, "--disc-norm", &TrainConfig::disc_instance_norm,
                         "Instance norm in the discriminator's inner layers");
  train_flags.add_switch(train_cmd, "--disc-conditional", &TrainConfig::disc_conditional,
                         "Discriminators score (source, target) pairs instead of target frames alone");
  train_flags.add(train_cmd, "--n-train", &TrainConfig::n_train, "Training windows");
  train_flags.add(train_cmd, "--n-val", &TrainConfig::n_val, "Validation windows");
  train_flags.add_switch(train_cmd, "--grid", &TrainConfig::grid_sampling, "Grid crop origins instead of random");
  train_flags.add(train_cmd, "--checkpoint-every", &TrainConfig::checkpoint_every, "Checkpoint interval (steps)");
  train_flags.add(train_cmd, "--log-every", &TrainConfig::log_every, "Progress line interval (steps)");

  // translate
  auto* translate_cmd = app.add_subcommand("translate", "Translate a movie with a trained checkpoint");
  detail::TranslateArgs translate_args;
  detail::add_translate_flags(translate_cmd, translate_args, true);
  translate_cmd->add_option("--out,-o", translate_args.out, "Output directory")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "MSE/SSIM/PSNR of predicted vs real frames");
  std::string pred_dir, real_dir, report_out, eval_direction = "u2v", eval_mode = "spatial";
  evaluate_cmd->add_option("--pred", pred_dir, "Directory of predicted frames")->required();
  evaluate_cmd->add_option("--real", real_dir, "Directory of real frames")->required();
  evaluate_cmd->add_option("--out,-o", report_out, "Report path prefix; writes <prefix>.csv and <prefix>.json")
      ->required();
  evaluate_cmd->add_option("--direction", eval_direction, "Label recorded in the report")->capture_default_str();
  evaluate_cmd->add_option("--mode", eval_mode, "Label recorded in the report")->capture_default_str();

  // third-channel
  auto* third = app.add_subcommand("third-channel",
                                   "Predict the V channel of a U recording and write it beside the real channels");
  detail::TranslateArgs third_args;
  third_args.suffix = "_pred";
  detail::add_translate_flags(third, third_args, false);
  third->add_option("--out,-o", third_args.out, "Output directory (default: <input>/../<input name>_pred)");

  std::vector<std::string> argv_store{"stgan"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*synth) {
      synthetic::SynthConfig cfg;
      if (!synth_config.empty()) merge_json(read_json_file(synth_config), cfg);
      synth_flags.apply(cfg);
      cfg.validate();
      const auto u = synthetic::gen_source_video(cfg);
      const auto v = synthetic::derive_target_video(u, cfg);
      const fs::path dir(synth_out);
      ingest::save_sequence(u, dir / "u", 16);
      ingest::save_sequence(v, dir / "v", 16);
      if (synth_oracle) ingest::save_sequence(synthetic::oracle_translate(u, cfg), dir / "oracle", 16);
      write_text_file(dir / "synth_config.json", to_json(cfg).dump(2) + "\n");
      out << "wrote " << cfg.T << " paired frames to " << dir.string() << "\n";
    } else if (*train_cmd) {
      TrainConfig cfg;
      if (!train_config.empty()) merge_json(read_json_file(train_config), cfg);
      train_flags.apply(cfg);
      cfg.validate();
      const auto u_raw = ingest::load_sequence(domain_u, Domain::U);
      const auto v_raw = ingest::load_sequence(domain_v, Domain::V);
      const auto [u, v] = ingest::align_time_shift(u_raw, v_raw, cfg.shift);
      ingest::PatchOptions po;
      po.crop = cfg.crop_size;
      po.n_train = cfg.n_train;
      po.n_val = cfg.n_val;
      po.tau = cfg.tau;
      po.seed = cfg.seed;
      po.grid = cfg.grid_sampling;
      const auto [train_set, val_set] = ingest::extract_patches(u, v, po);
      const fs::path dir(train_out);
      detail::ensure_dir(dir);
      write_text_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
      write_text_file(dir / "dataset.json", ingest::dataset_manifest(train_set, val_set, po).dump() + "\n");
      std::optional<TrainState> state;
      if (!resume.empty()) state = load_checkpoint(resume, &cfg);
      TrainOptions opt;
      opt.out_dir = dir;
      opt.progress = &out;
      const TrainState done = train(train_set, cfg, opt, std::move(state));
      out << "finished at step " << done.bundle.step << "; checkpoint " << (dir / "checkpoint_final.stgck").string()
          << "\n";
    } else if (*translate_cmd) {
      detail::run_translate(translate_args, out);
    } else if (*evaluate_cmd) {
      const auto pred = ingest::load_sequence(pred_dir, Domain::V);
      const auto real = ingest::load_sequence(real_dir, Domain::V);
      const auto report = metrics::evaluate_sequences(pred, real, eval_direction, eval_mode);
      const fs::path prefix(report_out);
      if (prefix.has_parent_path()) detail::ensure_dir(prefix.parent_path());
      write_text_file(prefix.string() + ".csv", metrics::report_csv(report));
      write_text_file(prefix.string() + ".json", metrics::report_json(report).dump(2) + "\n");
      out << "frames " << report.per_frame.size() << "  mse " << report.mse.mean << "  ssim " << report.ssim.mean
          << "  psnr " << report.psnr.mean << "\n";
    } else if (*third) {
      if (third_args.out.empty()) {
        const fs::path in = fs::absolute(third_args.input).lexically_normal();
        const fs::path base = in.filename().empty() ? in.parent_path() : in;
        third_args.out = (base.parent_path() / (base.filename().string() + "_pred")).string();
      }
      third_args.direction = "u2v";
      detail::run_translate(third_args, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace stgan::cli

#endif  // STGAN_CLI_HPP
