#ifndef STGAN_TRAINER_HPP
#define STGAN_TRAINER_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stgan/ingest.hpp"
#include "stgan/losses.hpp"
#include "stgan/model.hpp"

namespace stgan {

namespace trainer_detail {

/// Temporarily freezes a parameter set; restores on scope exit.
class Freeze {
 public:
  explicit Freeze(std::vector<Var<float>> params) : params_(std::move(params)) { set_trainable(params_, false); }
  ~Freeze() { set_trainable(params_, true); }
  Freeze(const Freeze&) = delete;
  Freeze& operator=(const Freeze&) = delete;

 private:
  std::vector<Var<float>> params_;
};

/// (B·τ, 1, H, W) with sample-major ordering: row b·τ + k is frame k of window b.
inline Tensor<float> stack_windows(std::span<const PairedWindow> batch, bool domain_u, int tau) {
  const auto& first = domain_u ? batch.front().u : batch.front().v;
  require(!first.empty(), Errc::ShapeError, "empty window");
  const int h = first.front().height, w = first.front().width;
  Tensor<float> t(Shape{static_cast<int>(batch.size()) * tau, 1, h, w});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& frames = domain_u ? batch[b].u : batch[b].v;
    require(static_cast<int>(frames.size()) == tau, Errc::ShapeError,
            "window has " + std::to_string(frames.size()) + " frames, config tau is " + std::to_string(tau));
    for (int k = 0; k < tau; ++k) {
      require(frames[k].height == h && frames[k].width == w, Errc::ShapeError, "batch frames differ in shape");
      std::copy(frames[k].pixels.begin(), frames[k].pixels.end(), t.plane(static_cast<int>(b) * tau + k, 0));
    }
  }
  return t;
}

// Tracks which component is being computed so divergence errors name it.
template <class F>
auto named(const char* component, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::NaNLoss) fail(Errc::NaNLoss, std::string(component) + " diverged (" + e.what() + ")");
    throw;
  }
}

}  // namespace trainer_detail

/// Real batch and the spatial generators' outputs on it. The generator graphs
/// are built once and shared by the D and G updates.
struct BatchGraph {
  Var<float> u, v;            // (B·τ, 1, H, W)
  Var<float> fake_u, fake_v;  // ũ = F_s(v), ṽ = G_s(u)
  int windows = 0;
  int tau = 0;
};

inline BatchGraph forward_batch(const ModelBundle& bundle, std::span<const PairedWindow> batch, const TrainConfig& cfg) {
  require(!batch.empty(), Errc::ShapeError, "empty batch");
  require(cfg.tau == bundle.config.tau, Errc::ShapeError, "config tau differs from the bundle's");
  BatchGraph g;
  g.windows = static_cast<int>(batch.size());
  g.tau = cfg.tau;
  g.u = nn::constant(trainer_detail::stack_windows(batch, true, cfg.tau));
  g.v = nn::constant(trainer_detail::stack_windows(batch, false, cfg.tau));
  g.fake_v = bundle.g_s.forward(g.u);
  g.fake_u = bundle.f_s.forward(g.v);
  return g;
}

// What a discriminator scores: the target frames alone, or stacked after the
// source frames they were translated from when disc_conditional is set.
inline Var<float> disc_input(const TrainConfig& cfg, const Var<float>& source, const Var<float>& target) {
  return cfg.disc_conditional ? nn::concat_channels(source, target) : target;
}

/// D_G and D_F ascend their log-likelihood on real frames vs detached fakes.
/// Fills rec.d_G and rec.d_F (values before the update).
inline void discriminator_step(ModelBundle& bundle, const BatchGraph& g, const TrainConfig& cfg, LossRecord& rec) {
  using trainer_detail::named;
  const AdamOptions adam{cfg.learning_rate, cfg.beta1, cfg.beta2};
  zero_grads(bundle.parameters(kDG));
  zero_grads(bundle.parameters(kDF));
  auto d_g = named("d_G", [&] {
    return losses::discriminator_loss(bundle.d_g.forward(disc_input(cfg, g.u, g.v)),
                                      bundle.d_g.forward(disc_input(cfg, g.u, nn::detach(g.fake_v))), g.tau);
  });
  auto d_f = named("d_F", [&] {
    return losses::discriminator_loss(bundle.d_f.forward(disc_input(cfg, g.v, g.u)),
                                      bundle.d_f.forward(disc_input(cfg, g.v, nn::detach(g.fake_u))), g.tau);
  });
  rec.d_G = nn::scalar_value(d_g);
  rec.d_F = nn::scalar_value(d_f);
  nn::backward(nn::weighted_sum<float>({d_g, d_f}, {-1.0, -1.0}));
  adam_step(bundle.parameters(kDG), bundle.adam[kDG], adam);
  adam_step(bundle.parameters(kDF), bundle.adam[kDF], adam);
  zero_grads(bundle.parameters(kDG));
  zero_grads(bundle.parameters(kDF));
}

/// One joint update of G_s, F_s, G_t, F_t on the weighted objective, with
/// both discriminators frozen. Fills the generator-side fields of rec.
inline void generator_step(ModelBundle& bundle, const BatchGraph& g, const TrainConfig& cfg, LossRecord& rec) {
  using trainer_detail::named;
  const AdamOptions adam{cfg.learning_rate, cfg.beta1, cfg.beta2};
  const int tau = g.tau;
  trainer_detail::Freeze freeze_dg(bundle.parameters(kDG));
  trainer_detail::Freeze freeze_df(bundle.parameters(kDF));
  for (auto slot : {kGs, kFs, kGt, kFt}) zero_grads(bundle.parameters(slot));

  auto adv_gs = named("adv_Gs", [&] {
    return losses::generator_adv_loss(bundle.d_g.forward(disc_input(cfg, g.u, g.fake_v)), tau);
  });
  auto adv_fs = named("adv_Fs", [&] {
    return losses::generator_adv_loss(bundle.d_f.forward(disc_input(cfg, g.v, g.fake_u)), tau);
  });
  auto l1_gs = named("l1_Gs", [&] { return losses::spatial_l1(g.fake_v, g.v, tau); });
  auto l1_fs = named("l1_Fs", [&] { return losses::spatial_l1(g.fake_u, g.u, tau); });

  Var<float> lt_gt, lt_ft, lts_gtgs, lts_ftfs;
  if (!cfg.spatial_only) {
    const Shape s = g.u->value.shape;
    const Shape windows{g.windows, tau, s.h, s.w};
    auto history = [&](const Var<float>& x) { return nn::slice_channels(nn::reshape(x, windows), 0, tau - 1); };
    auto last = [&](const Var<float>& x) { return nn::slice_channels(nn::reshape(x, windows), tau - 1, tau); };
    auto v_last = last(g.v), u_last = last(g.u);
    lt_gt = named("lt_Gt", [&] { return losses::temporal_loss(bundle.g_t.forward(history(g.v)), v_last); });
    lt_ft = named("lt_Ft", [&] { return losses::temporal_loss(bundle.f_t.forward(history(g.u)), u_last); });
    lts_gtgs = named("lts_GtGs",
                     [&] { return losses::temporal_spatial_loss(bundle.g_t.forward(history(g.fake_v)), v_last); });
    lts_ftfs = named("lts_FtFs",
                     [&] { return losses::temporal_spatial_loss(bundle.f_t.forward(history(g.fake_u)), u_last); });
    rec.lt_Gt = nn::scalar_value(lt_gt);
    rec.lt_Ft = nn::scalar_value(lt_ft);
    rec.lts_GtGs = nn::scalar_value(lts_gtgs);
    rec.lts_FtFs = nn::scalar_value(lts_ftfs);
  }
  rec.adv_Gs = nn::scalar_value(adv_gs);
  rec.adv_Fs = nn::scalar_value(adv_fs);
  rec.l1_Gs = nn::scalar_value(l1_gs);
  rec.l1_Fs = nn::scalar_value(l1_fs);

  auto total = named("total_generator", [&] {
    return losses::full_generator_objective(adv_gs, adv_fs, l1_gs, l1_fs, lt_gt, lt_ft, lts_gtgs, lts_ftfs,
                                            {cfg.lambda_s, cfg.lambda_t});
  });
  nn::backward(total);
  adam_step(bundle.parameters(kGs), bundle.adam[kGs], adam);
  adam_step(bundle.parameters(kFs), bundle.adam[kFs], adam);
  if (!cfg.spatial_only) {
    adam_step(bundle.parameters(kGt), bundle.adam[kGt], adam);
    adam_step(bundle.parameters(kFt), bundle.adam[kFt], adam);
  }
  for (auto slot : {kGs, kFs, kGt, kFt}) zero_grads(bundle.parameters(slot));
}

/// One discriminator update followed by one generator update. The returned
/// record holds the losses computed in this step: D terms before the D
/// update, generator terms with the updated D.
inline LossRecord train_step(ModelBundle& bundle, std::span<const PairedWindow> batch, const TrainConfig& cfg) {
  const BatchGraph g = forward_batch(bundle, batch, cfg);
  LossRecord rec;
  discriminator_step(bundle, g, cfg, rec);
  generator_step(bundle, g, cfg, rec);
  rec.total_generator = full_generator_objective(rec, cfg.lambda_s, cfg.lambda_t);
  const auto bad = rec.first_nonfinite();
  require(bad.empty(), Errc::NaNLoss, bad + " is not finite");
  ++bundle.step;
  return rec;
}

// ---------------------------------------------------------------------------
// Training state and checkpoints.

inline constexpr std::size_t kHistoryTail = 200;

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  ModelBundle bundle;
  std::mt19937_64 rng;
  std::vector<std::uint32_t> order;  // current epoch's shuffled window order
  std::size_t cursor = 0;
  std::uint64_t dataset_size = 0;
  std::deque<LossRecord> history;

  explicit TrainState(const TrainConfig& cfg) : bundle(cfg), rng(cfg.seed ^ 0x9E3779B97F4A7C15ull) {}
  explicit TrainState(ModelBundle b) : bundle(std::move(b)) {}
};

/// Next batch of window indices in seeded epoch order.
inline std::vector<std::size_t> next_batch_indices(TrainState& state, std::size_t dataset_size, int batch) {
  require(dataset_size > 0, Errc::ShapeError, "dataset is empty");
  if (state.dataset_size == 0) state.dataset_size = dataset_size;
  require(state.dataset_size == dataset_size, Errc::ConfigMismatch, "dataset size differs from the checkpointed run");
  std::vector<std::size_t> out;
  for (int i = 0; i < batch; ++i) {
    if (state.cursor >= state.order.size()) {
      state.order.resize(dataset_size);
      std::iota(state.order.begin(), state.order.end(), 0u);
      std::shuffle(state.order.begin(), state.order.end(), state.rng);
      state.cursor = 0;
    }
    out.push_back(state.order[state.cursor++]);
  }
  return out;
}

namespace checkpoint_detail {

inline constexpr char kMagic[8] = {'S', 'T', 'G', 'A', 'N', 'C', 'K', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const Tensor<float>& t) {
    for (int d : {t.shape.n, t.shape.c, t.shape.h, t.shape.w}) pod(static_cast<std::int32_t>(d));
    bytes(t.data.data(), t.data.size() * sizeof(float));
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

  template <class T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    require(n <= end_ - pos_, Errc::CorruptFile, "string length out of range");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Tensor<float> tensor() {
    Shape s;
    s.n = pod<std::int32_t>();
    s.c = pod<std::int32_t>();
    s.h = pod<std::int32_t>();
    s.w = pod<std::int32_t>();
    require(s.n >= 0 && s.c >= 0 && s.h >= 0 && s.w >= 0, Errc::CorruptFile, "negative tensor extent");
    require(s.numel() * sizeof(float) <= end_ - pos_, Errc::CorruptFile, "tensor exceeds file");
    Tensor<float> t(s);
    take(t.data.data(), t.data.size() * sizeof(float));
    return t;
  }
  bool done() const { return pos_ == end_; }

 private:
  void take(void* out, std::size_t n) {
    require(n <= end_ - pos_, Errc::CorruptFile, "unexpected end of checkpoint");
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline constexpr std::size_t kDigestChars = 64;

}  // namespace checkpoint_detail

/// Serializes the full training state. Layout: magic, format version, config
/// JSON, config digest, step, RNG state, epoch order, loss-history tail, then
/// per network (G_s, F_s, G_t, F_t, D_G, D_F) its parameters and Adam state;
/// a trailing SHA-256 (hex) covers every preceding byte. Written to a
/// temporary file and renamed into place.
inline void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  using namespace checkpoint_detail;
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kFormatVersion);
  w.str(to_json(state.bundle.config).dump());
  w.str(state.bundle.digest);
  w.pod(static_cast<std::int64_t>(state.bundle.step));
  std::ostringstream rng;
  rng << state.rng;
  w.str(rng.str());
  w.pod(state.dataset_size);
  w.pod(static_cast<std::uint64_t>(state.cursor));
  w.pod(static_cast<std::uint64_t>(state.order.size()));
  w.bytes(state.order.data(), state.order.size() * sizeof(std::uint32_t));
  w.pod(static_cast<std::uint64_t>(state.history.size()));
  for (const auto& r : state.history)
    for (double v : r.values()) w.pod(v);
  for (int slot = 0; slot < kNetworkCount; ++slot) {
    const auto params = state.bundle.parameters(static_cast<NetworkSlot>(slot));
    const auto& adam = state.bundle.adam[slot];
    w.pod(static_cast<std::uint64_t>(params.size()));
    for (const auto& p : params) w.tensor(p->value);
    w.pod(static_cast<std::int64_t>(adam.t));
    w.pod(static_cast<std::uint64_t>(adam.m.size()));
    for (std::size_t i = 0; i < adam.m.size(); ++i) {
      w.tensor(adam.m[i]);
      w.tensor(adam.v[i]);
    }
  }
  const std::string digest = sha256_hex(w.buffer());
  w.bytes(digest.data(), digest.size());

  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    require(out.good(), Errc::DiskError, "cannot write checkpoint " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  require(!ec, Errc::DiskError, "cannot move checkpoint into place: " + ec.message());
}

/// SHA-256 stored at the end of a checkpoint file (its content digest).
inline std::string checkpoint_file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::DiskError, "cannot open checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() >= checkpoint_detail::kDigestChars, Errc::CorruptFile, "checkpoint truncated");
  return buf.substr(buf.size() - checkpoint_detail::kDigestChars);
}

/// Restores a training state. When `expected` is given, its model-defining
/// fields must match the stored configuration.
inline TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig* expected = nullptr) {
  using namespace checkpoint_detail;
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::DiskError, "cannot open checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() > sizeof kMagic + kDigestChars && std::equal(kMagic, kMagic + sizeof kMagic, buf.begin()),
          Errc::CorruptFile, path.string() + " is not a checkpoint");
  const std::size_t body = buf.size() - kDigestChars;
  require(sha256_hex(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(buf.data()), body)) ==
              buf.substr(body),
          Errc::CorruptFile, "checkpoint digest mismatch in " + path.string());

  Reader r(buf, body);
  char magic[sizeof kMagic];
  for (char& c : magic) c = r.pod<char>();
  const auto version = r.pod<std::uint32_t>();
  require(version == kFormatVersion, Errc::VersionMismatch, "checkpoint format version " + std::to_string(version));
  TrainConfig cfg;
  try {
    cfg = train_config_from_json(json::parse(r.str()));
  } catch (const json::exception&) {
    fail(Errc::CorruptFile, "unreadable config block");
  }
  const std::string digest = r.str();
  require(digest == config_digest(cfg), Errc::CorruptFile, "stored config digest is inconsistent");
  if (expected) {
    require(config_digest(*expected) == digest, Errc::VersionMismatch,
            "checkpoint was trained with a different configuration (tau " + std::to_string(cfg.tau) + " vs " +
                std::to_string(expected->tau) + ")");
    const int steps = expected->steps, every = expected->checkpoint_every, log = expected->log_every;
    cfg.steps = steps;
    cfg.checkpoint_every = every;
    cfg.log_every = log;
  }

  TrainState state{ModelBundle(cfg)};
  state.bundle.step = r.pod<std::int64_t>();
  std::istringstream rng(r.str());
  rng >> state.rng;
  require(!rng.fail(), Errc::CorruptFile, "unreadable RNG state");
  state.dataset_size = r.pod<std::uint64_t>();
  state.cursor = r.pod<std::uint64_t>();
  state.order.resize(r.pod<std::uint64_t>());
  for (auto& o : state.order) o = r.pod<std::uint32_t>();
  const auto hist = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < hist; ++i) {
    std::array<double, 11> v;
    for (double& x : v) x = r.pod<double>();
    state.history.push_back(LossRecord::from_values(v));
  }
  for (int slot = 0; slot < kNetworkCount; ++slot) {
    auto params = state.bundle.parameters(static_cast<NetworkSlot>(slot));
    require(r.pod<std::uint64_t>() == params.size(), Errc::CorruptFile, "parameter count mismatch");
    for (auto& p : params) {
      auto t = r.tensor();
      require(t.shape == p->value.shape, Errc::CorruptFile, "parameter shape mismatch");
      p->value = std::move(t);
    }
    auto& adam = state.bundle.adam[slot];
    adam.t = r.pod<std::int64_t>();
    const auto moments = r.pod<std::uint64_t>();
    require(moments == 0 || moments == params.size(), Errc::CorruptFile, "optimizer state mismatch");
    for (std::uint64_t i = 0; i < moments; ++i) {
      adam.m.push_back(r.tensor());
      adam.v.push_back(r.tensor());
    }
  }
  require(r.done(), Errc::CorruptFile, "trailing bytes in checkpoint");
  return state;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::ostream* progress = &std::cout;
};

inline std::string loss_csv_header() {
  std::string h = "step";
  for (auto f : LossRecord::kFields) h += "," + std::string(f);
  return h;
}

inline std::string loss_csv_row(std::int64_t step, const LossRecord& r) {
  std::ostringstream os;
  os << step;
  os << std::setprecision(17);
  for (double v : r.values()) os << ',' << v;
  return os.str();
}

/// Runs train steps until the bundle reaches cfg.steps. Continues `resume`
/// when given (its configuration must match), otherwise starts fresh.
inline TrainState train(const ingest::PatchDataset& dataset, const TrainConfig& cfg, const TrainOptions& opt = {},
                        std::optional<TrainState> resume = std::nullopt) {
  cfg.validate();
  require(dataset.size() > 0, Errc::ShapeError, "training dataset is empty");
  require(dataset.tau == cfg.tau, Errc::ConfigMismatch, "dataset tau differs from config tau");
  TrainState state = resume ? std::move(*resume) : TrainState(cfg);
  require(state.bundle.digest == config_digest(cfg), Errc::VersionMismatch,
          "resumed state was trained with a different configuration");
  state.bundle.config = cfg;

  std::ofstream log;
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    require(!ec, Errc::DiskError, "cannot create " + opt.out_dir.string());
    const auto path = opt.out_dir / "losses.csv";
    const bool append = resume.has_value() && std::filesystem::exists(path);
    log.open(path, append ? std::ios::app : std::ios::trunc);
    require(log.good(), Errc::DiskError, "cannot open " + path.string());
    if (!append) log << loss_csv_header() << '\n';
  }

  auto checkpoint_path = [&](const std::string& tag) { return opt.out_dir / ("checkpoint_" + tag + ".stgck"); };
  std::vector<PairedWindow> batch;
  while (state.bundle.step < cfg.steps) {
    batch.clear();
    for (auto i : next_batch_indices(state, dataset.size(), cfg.batch_size)) batch.push_back(dataset.window(i));
    const LossRecord rec = train_step(state.bundle, batch, cfg);
    state.history.push_back(rec);
    if (state.history.size() > kHistoryTail) state.history.pop_front();
    const auto step = state.bundle.step;
    if (log.is_open()) {
      log << loss_csv_row(step, rec) << '\n';
      require(log.good(), Errc::DiskError, "cannot append to loss log");
    }
    if (opt.progress && (step % cfg.log_every == 0 || step == cfg.steps)) {
      *opt.progress << "step " << step << "/" << cfg.steps << "  total " << std::setprecision(5)
                    << rec.total_generator << "  l1_Gs " << rec.l1_Gs << "  l1_Fs " << rec.l1_Fs << "  d_G "
                    << rec.d_G << "  d_F " << rec.d_F << std::endl;
    }
    if (!opt.out_dir.empty() && step % cfg.checkpoint_every == 0 && step != cfg.steps)
      save_checkpoint(state, checkpoint_path(std::to_string(step)));
  }
  if (log.is_open()) log.flush();
  if (!opt.out_dir.empty()) save_checkpoint(state, checkpoint_path("final"));
  return state;
}

}  // namespace stgan

#endif  // STGAN_TRAINER_HPP
