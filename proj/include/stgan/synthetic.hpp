#ifndef STGAN_SYNTHETIC_HPP
#define STGAN_SYNTHETIC_HPP

// Paired synthetic videos with a known causal link, standing in for real
// two-channel live imaging. U is a field of drifting Gaussian blobs; V is a
// lagged, transformed copy of U mixed with an independent blob field and
// Gaussian noise. All intensities are model space [-1, 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stgan/core_types.hpp"

namespace stgan::synthetic {

enum class Transform { Identity, Halo, Blur, Threshold };

constexpr std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::Identity: return "identity";
    case Transform::Halo: return "halo";
    case Transform::Blur: return "blur";
    case Transform::Threshold: return "threshold";
  }
  return "identity";
}

inline Transform parse_transform(std::string_view s) {
  if (s == "identity") return Transform::Identity;
  if (s == "halo") return Transform::Halo;
  if (s == "blur") return Transform::Blur;
  if (s == "threshold") return Transform::Threshold;
  fail(Errc::InvalidConfig, "transform: unknown value '" + std::string(s) + "'");
}

// Rendering constants (model space).
inline constexpr double kBackground = -0.8;     // 0.1 in [0, 1] space: a camera pedestal
inline constexpr double kAmplitudeMin = 0.8;    // blob peak above background
inline constexpr double kAmplitudeMax = 1.6;
inline constexpr double kSigmaJitter = 0.3;     // per-blob sigma in blob_sigma·[0.7, 1.3]
inline constexpr double kThreshold = 0.4;       // threshold transform cut level (bg + 1.2)
inline constexpr double kThresholdHigh = 0.6;   // level of "on" pixels
inline constexpr int kHaloRadius = 3;
inline constexpr double kBlurSigma = 2.0;

struct SynthConfig {
  int n_blobs = 3;
  double blob_sigma = 4.0;
  double velocity_range = 2.0;
  int frame_size = 128;
  int T = 20;
  int lag = 0;
  Transform transform = Transform::Identity;
  double strength = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto check = [](bool ok, const char* key, const std::string& rule) {
      require(ok, Errc::InvalidConfig, std::string(key) + ": " + rule);
    };
    check(n_blobs >= 0, "n_blobs", "must be >= 0");
    check(blob_sigma > 0, "blob_sigma", "must be > 0");
    check(velocity_range >= 0, "velocity_range", "must be >= 0");
    check(frame_size >= kMinFrameExtent, "frame_size", "must be >= 16");
    check(T >= 1, "T", "must be >= 1");
    check(lag >= 0, "lag", "must be >= 0");
    check(lag + 1 < T, "lag", "lag + 1 must be < T");
    check(strength >= 0 && strength <= 1, "strength", "must be in [0, 1]");
    check(noise_sigma >= 0, "noise_sigma", "must be >= 0");
  }
};

struct Blob {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  double amplitude = 1.0;
  double sigma = 1.0;
};

namespace detail {

// Independent random streams per role, all derived from cfg.seed.
enum Stream : std::uint32_t { kSource = 0, kIndependent = 1, kNoise = 2 };

inline std::mt19937_64 stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline void reflect(double& p, double& v, double hi) {
  if (hi <= 0) {
    p = 0;
    return;
  }
  for (int guard = 0; guard < 8 && (p < 0 || p > hi); ++guard) {
    if (p < 0) {
      p = -p;
      v = -v;
    }
    if (p > hi) {
      p = 2 * hi - p;
      v = -v;
    }
  }
  p = std::clamp(p, 0.0, hi);
}

inline float clip(double v) { return static_cast<float>(std::clamp(v, -1.0, 1.0)); }

}  // namespace detail

inline std::vector<Blob> spawn_blobs(int n, double sigma, double velocity_range, int size, std::mt19937_64& rng) {
  std::vector<Blob> blobs(static_cast<std::size_t>(n));
  const double hi = size - 1.0;
  for (auto& b : blobs) {
    b.x = detail::uniform(rng, 0, hi);
    b.y = detail::uniform(rng, 0, hi);
    b.vx = detail::uniform(rng, -velocity_range, velocity_range);
    b.vy = detail::uniform(rng, -velocity_range, velocity_range);
    b.amplitude = detail::uniform(rng, kAmplitudeMin, kAmplitudeMax);
    b.sigma = sigma * detail::uniform(rng, 1.0 - kSigmaJitter, 1.0 + kSigmaJitter);
  }
  return blobs;
}

/// Constant-velocity motion with reflecting walls at 0 and size−1.
inline void advance(std::vector<Blob>& blobs, int size) {
  for (auto& b : blobs) {
    b.x += b.vx;
    b.y += b.vy;
    detail::reflect(b.x, b.vx, size - 1.0);
    detail::reflect(b.y, b.vy, size - 1.0);
  }
}

/// Background plus Gaussian blobs, clipped to [-1, 1].
inline Frame render_blobs(const std::vector<Blob>& blobs, int size, int t, Domain domain) {
  std::vector<double> acc(static_cast<std::size_t>(size) * size, kBackground);
  for (const auto& b : blobs) {
    const double reach = 4.0 * b.sigma;
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y - reach)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(b.y + reach)));
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x - reach)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(b.x + reach)));
    const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        acc[static_cast<std::size_t>(y) * size + x] += b.amplitude * std::exp(-d2 * inv);
      }
  }
  Frame f{std::vector<float>(acc.size()), size, size, t, domain};
  for (std::size_t i = 0; i < acc.size(); ++i) f.pixels[i] = detail::clip(acc[i]);
  return f;
}

namespace detail {

inline VideoSequence blob_video(const SynthConfig& cfg, Stream s, Domain domain) {
  auto rng = stream(cfg.seed, s);
  auto blobs = spawn_blobs(cfg.n_blobs, cfg.blob_sigma, cfg.velocity_range, cfg.frame_size, rng);
  VideoSequence seq;
  seq.domain = domain;
  seq.source_id = "synthetic-seed" + std::to_string(cfg.seed);
  for (int t = 0; t < cfg.T; ++t) {
    seq.frames.push_back(render_blobs(blobs, cfg.frame_size, t, domain));
    advance(blobs, cfg.frame_size);
  }
  return seq;
}

}  // namespace detail

inline VideoSequence gen_source_video(const SynthConfig& cfg) {
  cfg.validate();
  return detail::blob_video(cfg, detail::kSource, Domain::U);
}

/// The uncorrelated blob field mixed into V with weight 1 − strength.
inline VideoSequence independent_field(const SynthConfig& cfg) {
  cfg.validate();
  return detail::blob_video(cfg, detail::kIndependent, Domain::V);
}

/// Grayscale dilation with a disk structuring element, edge-clamped.
inline std::vector<double> dilate_disk(const Frame& f, int radius) {
  std::vector<double> out(f.pixels.size());
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double m = -std::numeric_limits<double>::infinity();
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= f.height || xx >= f.width) continue;
          m = std::max(m, static_cast<double>(f.at(yy, xx)));
        }
      out[static_cast<std::size_t>(y) * f.width + x] = m;
    }
  return out;
}

/// Separable Gaussian blur with mirrored borders.
inline std::vector<double> gaussian_blur(const Frame& f, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * r + 1);
  double norm = 0;
  for (int i = -r; i <= r; ++i) norm += k[i + r] = std::exp(-i * i / (2 * sigma * sigma));
  for (auto& v : k) v /= norm;
  auto mirror = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  std::vector<double> tmp(f.pixels.size()), out(f.pixels.size());
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * f.at(y, mirror(x + i, f.width));
      tmp[static_cast<std::size_t>(y) * f.width + x] = acc;
    }
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[static_cast<std::size_t>(mirror(y + i, f.height)) * f.width + x];
      out[static_cast<std::size_t>(y) * f.width + x] = acc;
    }
  return out;
}

/// Morphology change applied to a source frame, before mixing.
inline std::vector<double> apply_transform(const Frame& u, Transform transform) {
  std::vector<double> out(u.pixels.size());
  switch (transform) {
    case Transform::Identity:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = u.pixels[i];
      break;
    case Transform::Halo: {
      // Ring around each structure: dilation minus the structure itself.
      const auto dil = dilate_disk(u, kHaloRadius);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = kBackground + (dil[i] - u.pixels[i]);
      break;
    }
    case Transform::Blur:
      out = gaussian_blur(u, kBlurSigma);
      break;
    case Transform::Threshold:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = u.pixels[i] > kThreshold ? kThresholdHigh : kBackground;
      break;
  }
  return out;
}

namespace detail {
inline int source_index(int t, int lag) { return std::max(0, t - lag); }
}  // namespace detail

/// v_t = clip(s·T(u_{t−lag}) + (1−s)·I_t + ε_t), with frames t < lag using u_0.
inline VideoSequence derive_target_video(const VideoSequence& u, const SynthConfig& cfg) {
  cfg.validate();
  require(cfg.lag < u.length(), Errc::LagTooLarge,
          "lag " + std::to_string(cfg.lag) + " >= sequence length " + std::to_string(u.length()));
  SynthConfig field_cfg = cfg;
  field_cfg.T = u.length();
  field_cfg.frame_size = u.height();
  require(u.height() == u.width(), Errc::ShapeError, "synthetic videos use square frames");
  const auto field = cfg.strength < 1.0 ? independent_field(field_cfg) : VideoSequence{};
  auto noise_rng = detail::stream(cfg.seed, detail::kNoise);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0 ? cfg.noise_sigma : 1.0);

  VideoSequence v;
  v.domain = Domain::V;
  v.source_id = u.source_id;
  v.bit_depth = u.bit_depth;
  for (int t = 0; t < u.length(); ++t) {
    const auto transformed = apply_transform(u[detail::source_index(t, cfg.lag)], cfg.transform);
    Frame f{std::vector<float>(transformed.size()), u.height(), u.width(), t, Domain::V};
    for (std::size_t i = 0; i < transformed.size(); ++i) {
      double mixed = cfg.strength * transformed[i];
      if (cfg.strength < 1.0) mixed += (1.0 - cfg.strength) * field[t].pixels[i];
      if (cfg.noise_sigma > 0) mixed += noise(noise_rng);
      f.pixels[i] = detail::clip(mixed);
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

/// Expected value of one pixel of the independent field, ignoring blob
/// truncation at the frame edge.
inline double independent_field_mean(const SynthConfig& cfg) {
  const double mean_amplitude = 0.5 * (kAmplitudeMin + kAmplitudeMax);
  const double mean_sigma_sq = cfg.blob_sigma * cfg.blob_sigma * (1.0 + kSigmaJitter * kSigmaJitter / 3.0);
  const double area = static_cast<double>(cfg.frame_size) * cfg.frame_size;
  return std::min(1.0, kBackground + cfg.n_blobs * mean_amplitude * 2.0 * std::numbers::pi * mean_sigma_sq / area);
}

/// Noise-free deterministic part of V given U: s·T(u_{t−lag}) + (1−s)·E[I].
/// Rejects a source video that `cfg` does not regenerate.
inline VideoSequence oracle_translate(const VideoSequence& u, const SynthConfig& cfg) {
  cfg.validate();
  require(u.length() == cfg.T && u.height() == cfg.frame_size && u.width() == cfg.frame_size, Errc::ConfigMismatch,
          "source video shape does not match the synthetic config");
  const auto expected = gen_source_video(cfg);
  // Tolerates one 8-bit quantization step from a disk round trip.
  constexpr double tol = 2.0 / 255.0 + 1e-6;
  for (int t = 0; t < u.length(); ++t)
    for (std::size_t i = 0; i < u[t].pixels.size(); ++i)
      require(std::abs(u[t].pixels[i] - expected[t].pixels[i]) <= tol, Errc::ConfigMismatch,
              "source video was not generated by this config (seed mismatch?)");

  const double field_mean = independent_field_mean(cfg);
  VideoSequence out;
  out.domain = Domain::V;
  out.source_id = u.source_id;
  out.bit_depth = u.bit_depth;
  for (int t = 0; t < u.length(); ++t) {
    const auto transformed = apply_transform(u[detail::source_index(t, cfg.lag)], cfg.transform);
    Frame f{std::vector<float>(transformed.size()), u.height(), u.width(), t, Domain::V};
    for (std::size_t i = 0; i < transformed.size(); ++i) {
      double mixed = cfg.strength * transformed[i];
      if (cfg.strength < 1.0) mixed += (1.0 - cfg.strength) * field_mean;
      f.pixels[i] = detail::clip(mixed);
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace stgan::synthetic

#endif  // STGAN_SYNTHETIC_HPP
