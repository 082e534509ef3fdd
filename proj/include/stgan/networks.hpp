#ifndef STGAN_NETWORKS_HPP
#define STGAN_NETWORKS_HPP

#include <algorithm>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stgan/core_types.hpp"
#include "stgan/nn/ops.hpp"

namespace stgan {

using nn::Shape;
using nn::Tensor;
using nn::Var;

/// U-Net encoder/decoder with skip connections. Spatial generators use one
/// input channel; temporal generators take τ−1 frames stacked as channels.
struct GeneratorSpec {
  int in_channels = 1;
  int out_channels = 1;
  int depth = 7;
  int base_width = 64;

  int width_at(int level) const { return base_width * std::min(1 << level, 8); }
  int multiple() const { return 1 << depth; }
  bool operator==(const GeneratorSpec&) const = default;
};

/// PatchGAN: `layers` stride-2 convolutions, one stride-1 convolution and a
/// stride-1 one-channel head, kernel 4, padding 1. With layers = 3 each output
/// cell sees a 70×70 input patch.
struct DiscriminatorSpec {
  int in_channels = 1;
  int base_width = 64;
  int layers = 3;
  bool instance_norm = false;

  int min_input() const { return 8 << layers; }
  int total_stride() const { return 1 << layers; }
  int receptive_field() const {
    int rf = 1, jump = 1;
    for (int i = 0; i < layers; ++i) {
      rf += 3 * jump;
      jump *= 2;
    }
    return rf + 2 * 3 * jump;
  }
  /// Input offset of output cell 0's field (negative: it starts in the padding).
  int field_origin() const {
    int offset = 0, jump = 1;
    for (int i = 0; i < layers; ++i) {
      offset -= jump;
      jump *= 2;
    }
    return offset - 2 * jump;
  }
  int map_extent(int input) const {
    int e = input;
    for (int i = 0; i < layers; ++i) e /= 2;
    return e - 2;
  }
  bool operator==(const DiscriminatorSpec&) const = default;
};

namespace detail {

template <class T>
struct ConvUnit {
  Var<T> weight;
  Var<T> bias;
};

template <class T>
ConvUnit<T> make_unit(Shape weight_shape, int out_channels, std::mt19937_64& rng) {
  std::normal_distribution<double> init(0.0, 0.02);
  Tensor<T> w(weight_shape);
  for (auto& v : w.data) v = static_cast<T>(init(rng));
  return {nn::parameter(std::move(w)), nn::parameter(Tensor<T>(Shape{1, out_channels, 1, 1}))};
}

inline constexpr nn::ConvGeometry kDown{4, 2, 1};
inline constexpr nn::ConvGeometry kFlat{4, 1, 1};

}  // namespace detail

template <class T>
class UNetGenerator {
 public:
  UNetGenerator(GeneratorSpec spec, std::mt19937_64& rng) : spec_(spec) {
    require(spec.depth >= 2, Errc::InvalidConfig, "generator depth must be >= 2");
    require(spec.base_width >= 1 && spec.in_channels >= 1 && spec.out_channels >= 1, Errc::InvalidConfig,
            "generator widths must be positive");
    for (int i = 0; i < spec.depth; ++i) {
      const int in = i == 0 ? spec.in_channels : spec.width_at(i - 1);
      down_.push_back(detail::make_unit<T>(Shape{spec.width_at(i), in, 4, 4}, spec.width_at(i), rng));
    }
    for (int i = 0; i < spec.depth; ++i) {
      const int in = i == spec.depth - 1 ? spec.width_at(i) : 2 * spec.width_at(i);
      const int out = i == 0 ? spec.out_channels : spec.width_at(i - 1);
      up_.push_back(detail::make_unit<T>(Shape{in, out, 4, 4}, out, rng));
    }
  }

  const GeneratorSpec& spec() const { return spec_; }

  /// (n, in_channels, h, w) -> (n, out_channels, h, w) in [-1, 1]. Extents
  /// that are not multiples of 2^depth are reflect-padded and cropped back.
  Var<T> forward(const Var<T>& input) const {
    const Shape s = input->value.shape;
    require(s.c == spec_.in_channels, Errc::ShapeError,
            "generator expects " + std::to_string(spec_.in_channels) + " channels, got " + s.str());
    const int m = spec_.multiple();
    const int ph = (m - s.h % m) % m, pw = (m - s.w % m) % m;
    Var<T> x = input;
    if (ph || pw) {
      require(ph / 2 < s.h && ph - ph / 2 < s.h && pw / 2 < s.w && pw - pw / 2 < s.w, Errc::ShapeError,
              "input " + s.str() + " too small to pad to a multiple of " + std::to_string(m));
      x = nn::reflect_pad(x, ph / 2, ph - ph / 2, pw / 2, pw - pw / 2);
    }

    const T slope = T(0.2);
    const int d = spec_.depth;
    std::vector<Var<T>> enc(d);
    enc[0] = conv(down_[0], x);
    for (int i = 1; i < d; ++i) {
      Var<T> h = conv(down_[i], nn::leaky_relu(enc[i - 1], slope));
      enc[i] = i == d - 1 ? h : nn::instance_norm(h);
    }
    Var<T> dec = nn::instance_norm(deconv(up_[d - 1], nn::relu(enc[d - 1])));
    for (int i = d - 2; i >= 1; --i)
      dec = nn::instance_norm(deconv(up_[i], nn::relu(nn::concat_channels(enc[i], dec))));
    Var<T> out = nn::tanh(deconv(up_[0], nn::relu(nn::concat_channels(enc[0], dec))));

    if (ph || pw) out = nn::crop(out, ph / 2, pw / 2, s.h, s.w);
    return out;
  }

  std::vector<Var<T>> parameters() const {
    std::vector<Var<T>> ps;
    for (const auto* units : {&down_, &up_})
      for (const auto& u : *units) {
        ps.push_back(u.weight);
        ps.push_back(u.bias);
      }
    return ps;
  }

 private:
  static Var<T> conv(const detail::ConvUnit<T>& u, const Var<T>& x) {
    return nn::conv2d(x, u.weight, u.bias, detail::kDown);
  }
  static Var<T> deconv(const detail::ConvUnit<T>& u, const Var<T>& x) {
    return nn::conv_transpose2d(x, u.weight, u.bias, detail::kDown);
  }

  GeneratorSpec spec_;
  std::vector<detail::ConvUnit<T>> down_, up_;
};

template <class T>
class PatchDiscriminator {
 public:
  PatchDiscriminator(DiscriminatorSpec spec, std::mt19937_64& rng) : spec_(spec) {
    require(spec.layers >= 1 && spec.base_width >= 1, Errc::InvalidConfig, "discriminator layers/width must be positive");
    int in = spec.in_channels;
    for (int i = 0; i <= spec.layers; ++i) {
      const int out = spec.base_width * std::min(1 << i, 8);
      units_.push_back(detail::make_unit<T>(Shape{out, in, 4, 4}, out, rng));
      in = out;
    }
    units_.push_back(detail::make_unit<T>(Shape{1, in, 4, 4}, 1, rng));
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  /// (n, 1, h, w) -> (n, 1, map_extent(h), map_extent(w)) scores in (0, 1).
  Var<T> forward(const Var<T>& input) const {
    const Shape s = input->value.shape;
    require(s.c == spec_.in_channels, Errc::ShapeError, "discriminator channel mismatch: " + s.str());
    require(s.h >= spec_.min_input() && s.w >= spec_.min_input(), Errc::InputTooSmall,
            "discriminator needs at least " + std::to_string(spec_.min_input()) + " px per side, got " + s.str());
    const T slope = T(0.2);
    Var<T> x = input;
    for (int i = 0; i <= spec_.layers; ++i) {
      const auto g = i < spec_.layers ? detail::kDown : detail::kFlat;
      x = nn::conv2d(x, units_[i].weight, units_[i].bias, g);
      if (i > 0 && spec_.instance_norm) x = nn::instance_norm(x);
      x = nn::leaky_relu(x, slope);
    }
    const auto& head = units_.back();
    return nn::sigmoid(nn::conv2d(x, head.weight, head.bias, detail::kFlat));
  }

  std::vector<Var<T>> parameters() const {
    std::vector<Var<T>> ps;
    for (const auto& u : units_) {
      ps.push_back(u.weight);
      ps.push_back(u.bias);
    }
    return ps;
  }

 private:
  DiscriminatorSpec spec_;
  std::vector<detail::ConvUnit<T>> units_;
};

// ---------------------------------------------------------------------------
// Frame-level entry points (no gradient tracking).

inline Tensor<float> frame_tensor(const Frame& f) {
  return Tensor<float>(Shape{1, 1, f.height, f.width}, f.pixels);
}

inline Tensor<float> stack_frames(std::span<const Frame> frames) {
  require(!frames.empty(), Errc::ArityError, "no frames to stack");
  const Frame& first = frames.front();
  Tensor<float> t(Shape{1, static_cast<int>(frames.size()), first.height, first.width});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require(frames[i].height == first.height && frames[i].width == first.width, Errc::ShapeError,
            "frames to stack differ in shape");
    std::copy(frames[i].pixels.begin(), frames[i].pixels.end(), t.plane(0, static_cast<int>(i)));
  }
  return t;
}

inline Frame tensor_frame(const Tensor<float>& t, int n, int t_index, Domain domain) {
  Frame f;
  f.height = t.shape.h;
  f.width = t.shape.w;
  f.t = t_index;
  f.domain = domain;
  f.pixels.assign(t.plane(n, 0), t.plane(n, 0) + t.shape.plane());
  return f;
}

/// ṽ = G_s(u) (or ũ = F_s(v)); the output keeps the input's index and takes
/// the opposite domain.
inline Frame spatial_forward(const UNetGenerator<float>& net, const Frame& frame) {
  nn::NoGradGuard guard;
  auto out = net.forward(nn::constant(frame_tensor(frame)));
  return tensor_frame(out->value, 0, frame.t, other(frame.domain));
}

/// Next-frame prediction from exactly τ−1 preceding frames of one domain.
inline Frame temporal_forward(const UNetGenerator<float>& net, std::span<const Frame> frames) {
  require(static_cast<int>(frames.size()) == net.spec().in_channels, Errc::ArityError,
          "temporal generator takes " + std::to_string(net.spec().in_channels) + " frames, got " +
              std::to_string(frames.size()));
  nn::NoGradGuard guard;
  auto out = net.forward(nn::constant(stack_frames(frames)));
  return tensor_frame(out->value, 0, frames.back().t + 1, frames.back().domain);
}

using ScoreMap = Tensor<float>;

inline ScoreMap discriminator_forward(const PatchDiscriminator<float>& net, const Frame& frame) {
  nn::NoGradGuard guard;
  return net.forward(nn::constant(frame_tensor(frame)))->value;
}

}  // namespace stgan

#endif  // STGAN_NETWORKS_HPP
