#ifndef STGAN_CORE_TYPES_HPP
#define STGAN_CORE_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stgan/error.hpp"

namespace stgan {

enum class Domain { U, V };
enum class Direction { UToV, VToU };
enum class OutputMode { Spatial, Averaged };

constexpr Domain other(Domain d) { return d == Domain::U ? Domain::V : Domain::U; }
constexpr Domain source_domain(Direction dir) { return dir == Direction::UToV ? Domain::U : Domain::V; }
constexpr Domain target_domain(Direction dir) { return other(source_domain(dir)); }

constexpr std::string_view to_string(Domain d) { return d == Domain::U ? "U" : "V"; }
constexpr std::string_view to_string(Direction d) { return d == Direction::UToV ? "u2v" : "v2u"; }
constexpr std::string_view to_string(OutputMode m) { return m == OutputMode::Spatial ? "spatial" : "averaged"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "u2v") return Direction::UToV;
  if (s == "v2u") return Direction::VToU;
  fail(Errc::InvalidConfig, "direction must be u2v or v2u, got '" + std::string(s) + "'");
}

inline OutputMode parse_output_mode(std::string_view s) {
  if (s == "spatial") return OutputMode::Spatial;
  if (s == "averaged") return OutputMode::Averaged;
  fail(Errc::InvalidConfig, "output_mode must be spatial or averaged, got '" + std::string(s) + "'");
}

inline constexpr int kMinFrameExtent = 16;

/// One grayscale frame in model space [-1, 1], row-major.
struct Frame {
  std::vector<float> pixels;
  int height = 0;
  int width = 0;
  int t = 0;
  Domain domain = Domain::U;

  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Frame& o) const { return height == o.height && width == o.width; }

  /// Pixel values finite and within [-1, 1]; extent at least 16×16.
  bool valid() const {
    if (height < kMinFrameExtent || width < kMinFrameExtent) return false;
    if (pixels.size() != static_cast<std::size_t>(height) * width) return false;
    for (float v : pixels)
      if (!std::isfinite(v) || v < -1.0f || v > 1.0f) return false;
    return true;
  }

  Frame crop(int x0, int y0, int size_y, int size_x) const {
    require(x0 >= 0 && y0 >= 0 && x0 + size_x <= width && y0 + size_y <= height, Errc::CropTooLarge,
            "crop window outside frame");
    Frame out{std::vector<float>(static_cast<std::size_t>(size_y) * size_x), size_y, size_x, t, domain};
    for (int y = 0; y < size_y; ++y)
      for (int x = 0; x < size_x; ++x) out.at(y, x) = at(y0 + y, x0 + x);
    return out;
  }
};

struct VideoSequence {
  std::vector<Frame> frames;
  Domain domain = Domain::U;
  std::string source_id;
  int bit_depth = 16;

  int length() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  /// Indices consecutive, shapes and domains uniform.
  bool consistent() const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].domain != domain || !frames[i].same_shape(frames.front())) return false;
      if (i > 0 && frames[i].t != frames[i - 1].t + 1) return false;
    }
    return true;
  }

  Frame& operator[](int i) { return frames[static_cast<std::size_t>(i)]; }
  const Frame& operator[](int i) const { return frames[static_cast<std::size_t>(i)]; }
};

/// τ consecutive source frames and the target frame they condition.
struct CausalWindow {
  std::vector<Frame> inputs;
  Frame target;
  int tau = 0;
  int shift = 0;
  Direction direction = Direction::UToV;
};

/// Training unit: the same τ time points in both domains (after shift
/// removal), so either translation direction can be trained from it.
struct PairedWindow {
  std::vector<Frame> u;
  std::vector<Frame> v;

  int tau() const { return static_cast<int>(u.size()); }
};

struct TrainConfig {
  int tau = 3;
  int shift = 0;
  double lambda_s = 100.0;
  double lambda_t = 10.0;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 8;
  int steps = 1000;
  int crop_size = 128;
  std::uint64_t seed = 0;
  bool spatial_only = false;
  OutputMode output_mode = OutputMode::Averaged;

  int gen_depth = 7;
  int gen_width = 64;
  int disc_width = 64;
  int disc_layers = 3;
  bool disc_instance_norm = false;
  bool disc_conditional = false;  // D sees (source, target) pairs

  int n_train = 4000;
  int n_val = 1000;
  bool grid_sampling = false;
  int checkpoint_every = 500;
  int log_every = 50;

  void validate() const {
    auto check = [](bool ok, const char* key, const std::string& rule) {
      require(ok, Errc::InvalidConfig, std::string(key) + ": " + rule);
    };
    check(tau >= 2, "tau", "must be >= 2");
    check(lambda_s >= 0, "lambda_s", "must be >= 0");
    check(lambda_t >= 0, "lambda_t", "must be >= 0");
    check(learning_rate > 0, "learning_rate", "must be > 0");
    check(beta1 >= 0 && beta1 < 1, "beta1", "must be in [0, 1)");
    check(beta2 >= 0 && beta2 < 1, "beta2", "must be in [0, 1)");
    check(batch_size >= 1, "batch_size", "must be >= 1");
    check(steps >= 0, "steps", "must be >= 0");
    check(crop_size >= kMinFrameExtent, "crop_size", "must be >= 16");
    check(gen_depth >= 2, "gen_depth", "must be >= 2");
    check(gen_width >= 1, "gen_width", "must be >= 1");
    check(disc_width >= 1, "disc_width", "must be >= 1");
    check(disc_layers >= 1, "disc_layers", "must be >= 1");
    check(n_train >= 1, "n_train", "must be >= 1");
    check(n_val >= 0, "n_val", "must be >= 0");
    check(checkpoint_every >= 1, "checkpoint_every", "must be >= 1");
    check(log_every >= 1, "log_every", "must be >= 1");
  }
};

/// Causal window for target index t. U→V conditions v_t on u_{t−s−τ+1..t−s};
/// V→U conditions u_t on v_{t+s−τ+1..t+s}.
inline CausalWindow make_causal_window(const VideoSequence& u_seq, const VideoSequence& v_seq, int t, int tau,
                                       int shift, Direction direction) {
  require(tau >= 2, Errc::TauTooSmall, "tau must be >= 2, got " + std::to_string(tau));
  require(u_seq.domain == Domain::U && v_seq.domain == Domain::V, Errc::DomainMismatch,
          "expected (U, V) sequences");
  const VideoSequence& src = direction == Direction::UToV ? u_seq : v_seq;
  const VideoSequence& dst = direction == Direction::UToV ? v_seq : u_seq;
  const int last = direction == Direction::UToV ? t - shift : t + shift;
  const int first = last - tau + 1;
  require(t >= 0 && t < dst.length(), Errc::IndexOutOfRange, "target index " + std::to_string(t) + " outside sequence");
  require(first >= 0 && last < src.length(), Errc::IndexOutOfRange,
          "source window [" + std::to_string(first) + ", " + std::to_string(last) + "] outside sequence");

  CausalWindow w;
  w.tau = tau;
  w.shift = shift;
  w.direction = direction;
  for (int i = first; i <= last; ++i) w.inputs.push_back(src[i]);
  w.target = dst[t];
  return w;
}

}  // namespace stgan

#endif  // STGAN_CORE_TYPES_HPP
