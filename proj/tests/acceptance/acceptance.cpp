// Acceptance suite. `stgan_acceptance <n>` runs criterion n, no argument runs
// all nine. Prints one [PASS]/[FAIL] line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "stgan/cli.hpp"
#include "stgan/stgan.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/tiny.hpp"

using namespace stgan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note("FAILED " + what);
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("stgan_accept_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------- 1 metrics

testing::Image as_image(const metrics::MetricImage& m) { return {m.pixels, m.height, m.width}; }

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> noise(0, 0.1);
  double worst_ssim = 0, worst_mse = 0, worst_psnr = 0;
  for (int i = 0; i < 50; ++i) {
    auto a = metrics::constant_image(32, 32, 0), b = a;
    for (auto& p : a.pixels) p = u(rng);
    // Half the pairs independent, half correlated so SSIM spans its range.
    for (std::size_t k = 0; k < b.pixels.size(); ++k)
      b.pixels[k] = i % 2 ? u(rng) : std::clamp(a.pixels[k] + noise(rng), 0.0, 1.0);
    worst_ssim = std::max(worst_ssim, std::abs(metrics::ssim(a, b) - testing::brute_ssim(as_image(a), as_image(b))));
    worst_mse = std::max(worst_mse, std::abs(metrics::mse(a, b) - testing::brute_mse(as_image(a), as_image(b))));
    worst_psnr = std::max(worst_psnr, std::abs(metrics::psnr(a, b) - testing::brute_psnr(as_image(a), as_image(b))));
  }
  o.note("max |diff| ssim " + fmt(worst_ssim) + ", mse " + fmt(worst_mse) + ", psnr " + fmt(worst_psnr));
  o.check(worst_ssim < 1e-6 && worst_mse < 1e-6 && worst_psnr < 1e-6, "oracle agreement within 1e-6");

  auto x = metrics::constant_image(32, 32, 0);
  for (auto& p : x.pixels) p = u(rng);
  const double self = metrics::ssim(x, x);
  o.note("SSIM(x,x) = " + fmt(self, 17));
  o.check(self == 1.0, "SSIM(x,x) == 1");
  o.note("PSNR(0.01) = " + fmt(metrics::psnr_from_mse(0.01), 17));
  o.check(metrics::psnr_from_mse(0.01) == 20.0, "PSNR(mse=0.01) == 20");
  return o;
}

// ---------------------------------------------------------------- 2 losses

nn::Tensor<double> filled(nn::Shape s, double v) {
  nn::Tensor<double> t(s);
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

Outcome loss_arithmetic() {
  Outcome o;
  int n = 0;
  auto near = [&](double got, double want, const std::string& what) {
    ++n;
    o.check(std::abs(got - want) <= 1e-6, what + " = " + fmt(got, 10) + ", expected " + fmt(want, 10));
  };
  near(losses::discriminator_loss(filled({1, 1, 14, 14}, 0.5), filled({1, 1, 14, 14}, 0.5)), 2 * std::log(0.5),
       "d loss at 0.5/0.5");
  near(losses::discriminator_loss(filled({1, 1, 14, 14}, 1 - 1e-7), filled({1, 1, 14, 14}, 1e-7)), 0.0,
       "d loss, perfect discriminator");
  near(losses::discriminator_loss(filled({1, 1, 1, 1}, 0.9), filled({1, 1, 1, 1}, 0.1)), 2 * std::log(0.9),
       "d loss at 0.9/0.1");
  near(losses::generator_adv_loss(filled({1, 1, 14, 14}, 0.5)), std::log(2.0), "adv loss at 0.5");
  near(losses::generator_adv_loss(filled({1, 1, 14, 14}, 1.0)), 0.0, "adv loss at 1");
  near(losses::generator_adv_loss(filled({3, 1, 14, 14}, 0.5), 3), 3 * std::log(2.0), "adv loss over 3 frames");
  const auto r = filled({1, 1, 8, 8}, 0.37);
  near(losses::spatial_l1(r, r), 0.0, "l1 identical");
  near(losses::spatial_l1(filled({1, 1, 8, 8}, 0.2), filled({1, 1, 8, 8}, 0.5)), 0.3, "l1 0.2 vs 0.5");
  nn::Tensor<double> pred = filled({2, 1, 4, 4}, 0.0), real({2, 1, 4, 4});
  std::fill(real.plane(0, 0), real.plane(0, 0) + 16, 0.3);
  std::fill(real.plane(1, 0), real.plane(1, 0) + 16, -0.1);
  near(losses::spatial_l1(pred, real, 2), 0.4, "l1 over 2 frames");
  near(losses::temporal_loss(r, r), 0.0, "temporal identical");
  near(losses::temporal_loss(filled({1, 1, 4, 4}, 0.5), filled({1, 1, 4, 4}, 0.1)), 0.16, "temporal 0.5 vs 0.1");
  near(losses::temporal_loss(nn::Tensor<double>({1, 1, 1, 2}, {0, 1}), nn::Tensor<double>({1, 1, 1, 2}, {1, 1})), 0.5,
       "temporal 2-pixel");
  near(losses::temporal_spatial_loss(r, r), 0.0, "temporal-spatial identical");
  near(losses::temporal_spatial_loss(filled({1, 1, 4, 4}, 0.5), filled({1, 1, 4, 4}, 0.1)), 0.16,
       "temporal-spatial 0.5 vs 0.1");

  LossRecord rec;
  rec.adv_Gs = rec.adv_Fs = 0.7;
  rec.l1_Gs = 0.05;
  rec.l1_Fs = 0.04;
  rec.lt_Gt = 0.01;
  rec.lt_Ft = 0.02;
  rec.lts_GtGs = 0.03;
  rec.lts_FtFs = 0.01;
  const double total = full_generator_objective(rec, 100, 10);
  near(total, 11.1, "worked example");
  near(full_generator_objective(LossRecord{}, 100, 10), 0.0, "all-zero objective");
  near(full_generator_objective(rec, 0, 0), 1.4, "lambda 0 objective");
  o.note(std::to_string(n) + " closed forms, worked example " + fmt(total, 10));
  return o;
}

// ---------------------------------------------------------------- 3 gradients

Outcome gradient_checks() {
  Outcome o;
  std::mt19937_64 rng(31);
  using testing::random_tensor;
  auto pred = nn::parameter(random_tensor({3, 1, 8, 8}, rng, -0.9, 0.9));
  auto real = nn::parameter(random_tensor({3, 1, 8, 8}, rng, -0.9, 0.9));
  auto sr = nn::parameter(random_tensor({3, 1, 8, 8}, rng, 0.05, 0.95));
  auto sf = nn::parameter(random_tensor({3, 1, 8, 8}, rng, 0.05, 0.95));
  const std::vector<std::tuple<std::string, std::function<nn::Var<double>()>, std::vector<nn::Var<double>>>> cases{
      {"d", [&] { return losses::discriminator_loss(sr, sf, 3); }, {sr, sf}},
      {"adv", [&] { return losses::generator_adv_loss(sf, 3); }, {sf}},
      {"l1", [&] { return losses::spatial_l1(pred, real, 3); }, {pred, real}},
      {"lt", [&] { return losses::temporal_loss(pred, real); }, {pred, real}},
      {"lts", [&] { return losses::temporal_spatial_loss(pred, real); }, {pred, real}},
  };
  for (const auto& [name, f, leaves] : cases) {
    const auto r = testing::check_gradients(f, leaves, 150, 7);
    o.note(name + " rel " + fmt(r.max_rel_error, 2) + " (" + std::to_string(r.checked) + ")");
    o.check(r.checked >= 100 && r.max_rel_error < 1e-3, name + " gradient");
  }

  // Composed path: l1 through G_s plus l_ts through G_t applied to G_s output.
  UNetGenerator<double> gs({1, 1, 2, 4}, rng), gt({2, 1, 2, 4}, rng);
  testing::spread_parameters(gs.parameters(), rng);
  testing::spread_parameters(gt.parameters(), rng);
  const auto u = random_tensor({3, 1, 16, 16}, rng);
  const auto v = random_tensor({3, 1, 16, 16}, rng, -0.9, 0.9);
  const auto v_last = nn::constant(nn::Tensor<double>({1, 1, 16, 16}, {v.plane(2, 0), v.plane(2, 0) + 256}));
  auto objective = [&] {
    auto fake = gs.forward(nn::constant(u));
    auto l1 = losses::spatial_l1(fake, nn::constant(v), 3);
    auto history = nn::slice_channels(nn::reshape(fake, nn::Shape{1, 3, 16, 16}), 0, 2);
    auto lts = losses::temporal_spatial_loss(gt.forward(history), v_last);
    return nn::weighted_sum<double>({l1, lts}, {100.0, 10.0});
  };
  auto params = gs.parameters();
  for (const auto& p : gt.parameters()) params.push_back(p);
  const auto r = testing::check_gradients(objective, params, 300, 8);
  o.note("composed rel " + fmt(r.max_rel_error, 2) + " (" + std::to_string(r.checked) + ")");
  o.check(r.checked >= 100 && r.max_rel_error < 1e-3, "composed generator gradient");
  auto reaches = [](const std::vector<nn::Var<double>>& ps) {
    for (const auto& p : ps)
      for (double g : p->grad.data)
        if (g != 0.0) return true;
    return false;
  };
  o.check(reaches(gs.parameters()), "gradient reaches G_s");
  o.check(reaches(gt.parameters()), "gradient reaches G_t");
  return o;
}

// ---------------------------------------------------------------- 4 identity

// Widths reduced for a single CPU; every other setting is the paper default.
TrainConfig reduced(std::uint64_t seed, int steps) {
  TrainConfig c;
  c.crop_size = 64;
  c.gen_width = 16;
  c.gen_depth = 6;
  c.disc_width = 8;
  c.seed = seed;
  c.steps = steps;
  return c;
}

Outcome identity_overfit() {
  Outcome o;
  synthetic::SynthConfig sc;  // identity, lag 0, strength 1, noise 0
  sc.frame_size = 128;
  sc.T = 20;
  sc.seed = 1;
  const auto u = synthetic::gen_source_video(sc);
  const auto v = synthetic::derive_target_video(u, sc);
  ingest::PatchOptions po;
  po.crop = 64;
  po.n_train = 200;
  po.n_val = 0;
  po.tau = 3;
  po.seed = 1;
  const auto train_set = ingest::extract_patches(u, v, po).first;

  const TrainConfig cfg = reduced(1, 400);
  const TrainState st = train(train_set, cfg, TrainOptions{{}, nullptr});
  double ssim = 0, l1 = 0;
  int n = 0;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const auto w = train_set.window(i);
    const Frame pred = spatial_forward(st.bundle.g_s, w.u.back());
    ssim += metrics::ssim(metrics::to_metric(pred), metrics::to_metric(w.v.back()));
    double d = 0;
    for (std::size_t k = 0; k < pred.pixels.size(); ++k) d += std::abs(pred.pixels[k] - w.v.back().pixels[k]);
    l1 += d / static_cast<double>(pred.pixels.size());
    ++n;
  }
  ssim /= n;
  l1 /= n;
  o.note(std::to_string(cfg.steps) + " steps, " + std::to_string(n) + " train windows: SSIM " + fmt(ssim) +
         ", L1 " + fmt(l1));
  o.check(cfg.steps <= 2000, "step budget");
  o.check(ssim >= 0.85, "SSIM >= 0.85");
  o.check(l1 < 0.05, "L1 < 0.05");
  return o;
}

// ---------------------------------------------------------------- 5, 6 synthetic tasks

struct Task {
  ingest::PatchDataset train_set, val_set;
  int first_scored = 0;  // frames before this are not scored
};

Task make_task(synthetic::Transform tf, int lag, std::uint64_t seed) {
  synthetic::SynthConfig sc;
  sc.frame_size = 256;
  sc.T = 20;
  sc.n_blobs = 12;
  sc.lag = lag;
  sc.transform = tf;
  sc.seed = seed;
  const auto u = synthetic::gen_source_video(sc);
  const auto v = synthetic::derive_target_video(u, sc);
  ingest::PatchOptions po;
  po.crop = 64;
  po.n_train = 2000;
  po.n_val = 8 * (sc.T - lag - 2);  // 8 validation crop origins
  po.tau = 3;
  po.seed = seed;
  po.first_frame = lag;
  auto [tr, va] = ingest::extract_patches(u, v, po);
  // Frames t < lag carry no causal source; the first tau-1 scored frames have
  // no temporal history. Both are skipped in every mode.
  return {std::move(tr), std::move(va), lag + 2};
}

double validation_mse(const ModelBundle& b, const Task& task, Direction d, OutputMode mode) {
  double acc = 0;
  int n = 0;
  for (int o = 0; o < static_cast<int>(task.val_set.origins.size()); ++o) {
    const auto [u, v] = task.val_set.crop_sequences(o);
    const auto& src = d == Direction::UToV ? u : v;
    const auto& dst = d == Direction::UToV ? v : u;
    const auto out = translate(b, src, d, mode).sequence;
    for (int t = task.first_scored; t < dst.length(); ++t) {
      acc += metrics::mse(metrics::to_metric(out[t]), metrics::to_metric(dst[t]));
      ++n;
    }
  }
  return acc / n;
}

Outcome temporal_benefit() {
  Outcome o;
  std::vector<double> avg_vs_spatial, full_vs_ablation;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Task task = make_task(synthetic::Transform::Identity, 1, seed);
    TrainConfig cfg = reduced(seed, 600);
    const TrainState full = train(task.train_set, cfg, TrainOptions{{}, nullptr});
    cfg.spatial_only = true;
    const TrainState ablation = train(task.train_set, cfg, TrainOptions{{}, nullptr});
    const double full_avg = validation_mse(full.bundle, task, Direction::UToV, OutputMode::Averaged);
    const double full_sp = validation_mse(full.bundle, task, Direction::UToV, OutputMode::Spatial);
    const double abl_sp = validation_mse(ablation.bundle, task, Direction::UToV, OutputMode::Spatial);
    avg_vs_spatial.push_back(1 - full_avg / full_sp);
    full_vs_ablation.push_back(1 - full_avg / abl_sp);
    o.note("seed " + std::to_string(seed) + ": averaged " + fmt(full_avg) + ", spatial " + fmt(full_sp) +
           ", ablation " + fmt(abl_sp));
    std::cout << "  criterion 5 seed " << seed << " done" << std::endl;
  }
  const double m1 = median3(avg_vs_spatial), m2 = median3(full_vs_ablation);
  o.note("median gain averaged vs spatial " + fmt(100 * m1, 3) + "%, full vs ablation " + fmt(100 * m2, 3) + "%");
  o.check(m1 >= 0.10, "averaged beats spatial by >= 10%");
  o.check(m2 >= 0.10, "full beats spatial-only ablation by >= 10%");
  return o;
}

Outcome directional_asymmetry() {
  Outcome o;
  int wins = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Task task = make_task(synthetic::Transform::Threshold, 0, seed);
    const TrainState st = train(task.train_set, reduced(seed, 400), TrainOptions{{}, nullptr});
    const double uv = validation_mse(st.bundle, task, Direction::UToV, OutputMode::Spatial);
    const double vu = validation_mse(st.bundle, task, Direction::VToU, OutputMode::Spatial);
    wins += uv < vu;
    o.note("seed " + std::to_string(seed) + ": U->V " + fmt(uv) + ", V->U " + fmt(vu));
    std::cout << "  criterion 6 seed " << seed << " done" << std::endl;
  }
  o.note(std::to_string(wins) + "/3 seeds with U->V lower");
  o.check(wins >= 2, "U->V lower in >= 2 of 3 seeds");
  return o;
}

// ---------------------------------------------------------------- 7 determinism

double max_rel_diff(const std::deque<LossRecord>& a, const std::deque<LossRecord>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto va = a[i].values(), vb = b[i].values();
    for (std::size_t k = 0; k < va.size(); ++k)
      worst = std::max(worst, std::abs(va[k] - vb[k]) / std::max(std::abs(va[k]), 1e-12));
  }
  return worst;
}

double max_param_rel_diff(const ModelBundle& a, const ModelBundle& b) {
  double worst = 0;
  for (int s = 0; s < kNetworkCount; ++s) {
    const auto pa = a.parameters(static_cast<NetworkSlot>(s)), pb = b.parameters(static_cast<NetworkSlot>(s));
    for (std::size_t i = 0; i < pa.size(); ++i)
      for (std::size_t k = 0; k < pa[i]->value.data.size(); ++k) {
        const double x = pa[i]->value.data[k], y = pb[i]->value.data[k];
        worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), 1e-12));
      }
  }
  return worst;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism_and_resume() {
  Outcome o;
  ScratchDir dir("c7");
  TrainConfig cfg = testing::tiny_config();
  const auto ds = testing::tiny_dataset(cfg);

  cfg.steps = 50;
  const TrainState a = train(ds, cfg, TrainOptions{{}, nullptr});
  const TrainState b = train(ds, cfg, TrainOptions{{}, nullptr});
  const double curve = max_rel_diff(a.history, b.history);
  o.note("50-step curves max rel diff " + fmt(curve, 3));
  o.check(a.history.size() == 50 && curve <= 1e-5, "fixed-seed loss curves reproduce");

  save_checkpoint(a, dir / "a.stgck");
  const TrainState back = load_checkpoint(dir / "a.stgck");
  save_checkpoint(back, dir / "b.stgck");
  const bool same_bytes = slurp(dir / "a.stgck") == slurp(dir / "b.stgck");
  const bool same_params = max_param_rel_diff(a.bundle, back.bundle) == 0.0;
  o.note(std::string("round trip ") + (same_bytes && same_params ? "bit-exact" : "differs"));
  o.check(same_bytes && same_params && back.bundle.step == 50 && back.history.size() == 50,
          "checkpoint round trip is bit-exact");

  cfg.steps = 150;
  const TrainState full = train(ds, cfg, TrainOptions{{}, nullptr});
  cfg.steps = 100;
  save_checkpoint(train(ds, cfg, TrainOptions{{}, nullptr}), dir / "100.stgck");
  cfg.steps = 150;
  const TrainState resumed = train(ds, cfg, TrainOptions{{}, nullptr}, load_checkpoint(dir / "100.stgck", &cfg));
  const double hist = max_rel_diff(resumed.history, full.history);
  const double params = max_param_rel_diff(resumed.bundle, full.bundle);
  o.note("resume@100 to 150: loss rel diff " + fmt(hist, 3) + ", param rel diff " + fmt(params, 3));
  o.check(resumed.bundle.step == 150 && hist <= 1e-5 && params <= 1e-5, "resume matches uninterrupted training");
  return o;
}

// ---------------------------------------------------------------- 8 shapes

Frame random_frame(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1, 1);
  Frame f{std::vector<float>(static_cast<std::size_t>(h) * w), h, w, 0, Domain::U};
  for (auto& p : f.pixels) p = d(rng);
  return f;
}

Outcome architecture_invariants() {
  Outcome o;
  const TrainConfig defaults;  // full widths
  std::mt19937_64 rng(8);
  const PatchDiscriminator<float> d(discriminator_spec(defaults), rng);
  const auto s128 = discriminator_forward(d, random_frame(128, 128, 1)).shape;
  const auto s256 = discriminator_forward(d, random_frame(256, 256, 2)).shape;
  o.note("score maps " + s128.str() + " and " + s256.str());
  o.check(s128 == nn::Shape{1, 1, 14, 14} && s256 == nn::Shape{1, 1, 30, 30}, "score map sizes");
  o.check(d.spec().receptive_field() == 70, "70x70 receptive field");

  // Perturbation in double precision so that untouched cells are exactly equal.
  const PatchDiscriminator<double> dd(discriminator_spec(defaults), rng);
  const auto x = testing::random_tensor({1, 1, 128, 128}, rng);
  nn::NoGradGuard guard;
  const auto base = dd.forward(nn::constant(x))->value;
  const auto& spec = dd.spec();
  int inside = 0, leaked = 0, missed = 0;
  for (auto [py, px] : {std::pair{0, 0}, std::pair{50, 93}, std::pair{127, 64}}) {
    auto xp = x;
    xp.at(0, 0, py, px) += 0.5;
    const auto moved = dd.forward(nn::constant(xp))->value;
    for (int oy = 0; oy < base.shape.h; ++oy)
      for (int ox = 0; ox < base.shape.w; ++ox) {
        const int y0 = spec.field_origin() + oy * spec.total_stride();
        const int x0 = spec.field_origin() + ox * spec.total_stride();
        const bool covers = py >= y0 && py < y0 + 70 && px >= x0 && px < x0 + 70;
        const bool changed = moved.at(0, 0, oy, ox) != base.at(0, 0, oy, ox);
        inside += covers;
        leaked += !covers && changed;
        missed += covers && !changed;
      }
  }
  o.note("perturbation: " + std::to_string(inside) + " covering cells, " + std::to_string(leaked) +
         " outside changed, " + std::to_string(missed) + " covering unchanged");
  o.check(inside > 0 && leaked == 0 && missed == 0, "perturbation confined to receptive field");

  const UNetGenerator<float> gs(spatial_spec(defaults), rng), gt(temporal_spec(defaults), rng);
  int sizes = 0;
  for (auto [h, w] : {std::pair{128, 128}, std::pair{256, 256}, std::pair{64, 64}, std::pair{200, 136},
                      std::pair{129, 131}}) {
    const Frame f = random_frame(h, w, 5);
    const Frame y = spatial_forward(gs, f);
    std::vector<Frame> hist{f, f};
    const Frame z = temporal_forward(gt, hist);
    o.check(y.height == h && y.width == w && z.height == h && z.width == w && y.valid() && z.valid(),
            "generator shape at " + std::to_string(h) + "x" + std::to_string(w));
    ++sizes;
  }
  o.note(std::to_string(sizes) + " generator sizes preserved");
  return o;
}

// ---------------------------------------------------------------- 9 pipeline

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome pipeline_round_trip() {
  Outcome o;
  ScratchDir dir("c9");
  const auto d = [&](const char* s) { return (dir / s).string(); };
  std::ostringstream log;
  auto step = [&](const std::string& name, const std::vector<std::string>& args) {
    const int code = cli::run(args, log, log);
    o.note(name + " exit " + std::to_string(code));
    o.check(code == 0, name);
    return code == 0;
  };
  const bool ok =
      step("synth", {"synth", "--out", d("data"), "--frame-size", "160", "-T", "10", "--n-blobs", "4", "--seed",
                     "9"}) &&
      step("train", {"train", "--domain-u", d("data/u"), "--domain-v", d("data/v"), "--out", d("run"), "--steps",
                     "20", "--crop", "64", "--gen-depth", "4", "--gen-width", "8", "--disc-width", "8", "--batch-size",
                     "4", "--n-train", "64", "--n-val", "8", "--seed", "9"}) &&
      step("translate", {"translate", "-c", d("run/checkpoint_final.stgck"), "-i", d("data/u"), "-o", d("pred"),
                         "--mode", "averaged"}) &&
      step("evaluate", {"evaluate", "--pred", d("pred"), "--real", d("data/v"), "-o", d("report/metrics"),
                        "--mode", "averaged"});
  if (!ok) {
    std::cerr << log.str();
    return o;
  }

  const auto rows = read_csv(dir / "report/metrics.csv");
  const auto j = read_json_file(dir / "report/metrics.json");
  o.check(rows.size() == 11 && rows[0] == std::vector<std::string>{"index", "mse", "ssim", "psnr"},
          "per-frame CSV has 10 rows");
  for (int col = 1; col <= 3; ++col) {
    const std::string name = rows[0][static_cast<std::size_t>(col)];
    std::vector<double> v;
    for (std::size_t r = 1; r < rows.size(); ++r) v.push_back(std::stod(rows[r][static_cast<std::size_t>(col)]));
    double sum = 0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double sq = 0;
    for (double x : v) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / static_cast<double>(v.size()));
    const double jm = j["aggregate"][name]["mean"].get<double>(), js = j["aggregate"][name]["std"].get<double>();
    o.check(mean == jm && sd == js, name + " aggregate recomputes exactly (" + fmt(mean, 17) + " vs " +
                                        fmt(jm, 17) + ")");
  }
  o.note("aggregates: mse " + fmt(j["aggregate"]["mse"]["mean"].get<double>()) + ", ssim " +
         fmt(j["aggregate"]["ssim"]["mean"].get<double>()) + ", psnr " +
         fmt(j["aggregate"]["psnr"]["mean"].get<double>()));
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
  double budget_s;  // stated runtime limit
};

const Criterion kCriteria[] = {
    {"metric oracle equivalence", metric_oracle, 60},
    {"loss arithmetic", loss_arithmetic, 60},
    {"gradient checks", gradient_checks, 300},
    {"identity overfit", identity_overfit, 1800},
    {"temporal-information benefit", temporal_benefit, 3600},
    {"directional asymmetry", directional_asymmetry, 3600},
    {"determinism and resume", determinism_and_resume, 600},
    {"shape/architecture invariants", architecture_invariants, 600},
    {"pipeline round-trip", pipeline_round_trip, 600},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  } else {
    for (int i = 1; i <= 9; ++i) which.push_back(i);
  }
  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > 9) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    const auto& c = kCriteria[n - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.note("over runtime budget of " + fmt(c.budget_s) + " s");
    }
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << n << " " << c.name << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
    failures += !o.pass;
  }
  return failures;
}
