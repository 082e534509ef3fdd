#ifndef STGAN_INFERENCE_HPP
#define STGAN_INFERENCE_HPP

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "stgan/model.hpp"

namespace stgan {

struct InferenceOptions {
  int tile = 0;  // 0: whole frame
  int overlap = 32;
  bool strict = false;  // averaged mode: SequenceTooShort instead of spatial fallback when T < tau
};

struct Translation {
  VideoSequence sequence;
  std::vector<bool> spatial_fallback;  // per output frame
};

namespace inference_detail {

inline std::vector<int> tile_starts(int extent, int tile, int overlap) {
  if (extent <= tile) return {0};
  const int step = tile - overlap;
  std::vector<int> s;
  for (int p = 0;; p += step) {
    if (p + tile >= extent) {
      s.push_back(extent - tile);
      break;
    }
    s.push_back(p);
  }
  return s;
}

// Ramp from 1/(overlap+1) up to 1 across an overlap that borders another tile.
inline std::vector<float> feather(int len, int overlap, bool ramp_lo, bool ramp_hi) {
  std::vector<float> w(static_cast<std::size_t>(len), 1.0f);
  for (int i = 0; i < len; ++i) {
    float v = 1.0f;
    if (ramp_lo && i < overlap) v = std::min(v, float(i + 1) / float(overlap + 1));
    if (ramp_hi && len - 1 - i < overlap) v = std::min(v, float(len - i) / float(overlap + 1));
    w[i] = v;
  }
  return w;
}

}  // namespace inference_detail

/// Applies a generator to a (1, c, H, W) input, whole or in feathered tiles.
inline Tensor<float> run_generator(const UNetGenerator<float>& net, const Tensor<float>& x,
                                   const InferenceOptions& opt = {}) {
  using namespace inference_detail;
  require(x.shape.n == 1 && x.shape.c == net.spec().in_channels, Errc::ShapeError,
          "generator expects 1x" + std::to_string(net.spec().in_channels) + " input, got " + x.shape.str());
  nn::NoGradGuard guard;
  const int h = x.shape.h, w = x.shape.w;
  if (opt.tile <= 0 || (h <= opt.tile && w <= opt.tile)) return net.forward(nn::constant(x))->value;
  require(opt.overlap >= 0 && opt.overlap < opt.tile, Errc::InvalidConfig, "overlap must be below the tile size");

  Tensor<float> out(Shape{1, 1, h, w});
  std::vector<double> acc(static_cast<std::size_t>(h) * w, 0.0), wsum(acc.size(), 0.0);
  const auto ys = tile_starts(h, opt.tile, opt.overlap), xs = tile_starts(w, opt.tile, opt.overlap);
  const int th = std::min(h, opt.tile), tw = std::min(w, opt.tile);
  for (int y0 : ys)
    for (int x0 : xs) {
      Tensor<float> patch(Shape{1, x.shape.c, th, tw});
      for (int c = 0; c < x.shape.c; ++c)
        for (int y = 0; y < th; ++y)
          std::copy_n(x.plane(0, c) + static_cast<std::size_t>(y0 + y) * w + x0, tw,
                      patch.plane(0, c) + static_cast<std::size_t>(y) * tw);
      const auto pred = net.forward(nn::constant(patch))->value;
      const auto wy = feather(th, opt.overlap, y0 > 0, y0 + th < h);
      const auto wx = feather(tw, opt.overlap, x0 > 0, x0 + tw < w);
      for (int y = 0; y < th; ++y)
        for (int xx = 0; xx < tw; ++xx) {
          const double wt = double(wy[y]) * wx[xx];
          const std::size_t i = static_cast<std::size_t>(y0 + y) * w + x0 + xx;
          acc[i] += wt * pred.data[static_cast<std::size_t>(y) * tw + xx];
          wsum[i] += wt;
        }
    }
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] / wsum[i]);
  return out;
}

inline void require_direction(const VideoSequence& seq, Direction direction) {
  require(seq.domain == source_domain(direction), Errc::DirectionMismatch,
          "sequence is domain " + std::string(to_string(seq.domain)) + " but direction " +
              std::string(to_string(direction)) + " reads " + std::string(to_string(source_domain(direction))));
  require(seq.consistent(), Errc::ShapeError, "sequence frames differ in shape or domain");
}

/// ũ: frame-by-frame spatial translation.
inline VideoSequence translate_spatial(const ModelBundle& bundle, const VideoSequence& seq, Direction direction,
                                       const InferenceOptions& opt = {}) {
  require_direction(seq, direction);
  const auto& net = bundle.spatial(direction);
  VideoSequence out{{}, target_domain(direction), seq.source_id, seq.bit_depth};
  for (const auto& f : seq.frames) {
    auto y = run_generator(net, frame_tensor(f), opt);
    out.frames.push_back(tensor_frame(y, 0, f.t, out.domain));
  }
  return out;
}

/// Temporal prediction ü_t from the spatial outputs of the τ−1 preceding frames.
inline Frame temporal_from_spatial(const ModelBundle& bundle, std::span<const Frame> spatial_history,
                                   Direction direction, const InferenceOptions& opt = {}) {
  const auto& net = bundle.temporal(direction);
  require(static_cast<int>(spatial_history.size()) == net.spec().in_channels, Errc::ArityError,
          "temporal generator takes " + std::to_string(net.spec().in_channels) + " frames");
  auto y = run_generator(net, stack_frames(spatial_history), opt);
  return tensor_frame(y, 0, spatial_history.back().t + 1, spatial_history.back().domain);
}

/// (ũ_t + ü_t)/2 for t ≥ τ−1; the first τ−1 frames fall back to ũ_t and are flagged.
inline Translation translate_averaged(const ModelBundle& bundle, const VideoSequence& seq, Direction direction,
                                      const InferenceOptions& opt = {}) {
  const int tau = bundle.config.tau;
  require(!opt.strict || seq.length() >= tau, Errc::SequenceTooShort,
          "averaged mode needs at least " + std::to_string(tau) + " frames, got " + std::to_string(seq.length()));
  const VideoSequence spatial = translate_spatial(bundle, seq, direction, opt);
  Translation out{spatial, std::vector<bool>(static_cast<std::size_t>(seq.length()), true)};
  for (int t = tau - 1; t < seq.length(); ++t) {
    const auto history = std::span<const Frame>(spatial.frames).subspan(static_cast<std::size_t>(t - tau + 1),
                                                                        static_cast<std::size_t>(tau - 1));
    const Frame temporal = temporal_from_spatial(bundle, history, direction, opt);
    auto& dst = out.sequence.frames[t].pixels;
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = std::clamp(0.5f * (spatial.frames[t].pixels[i] + temporal.pixels[i]), -1.0f, 1.0f);
    out.spatial_fallback[t] = false;
  }
  return out;
}

inline Translation translate(const ModelBundle& bundle, const VideoSequence& seq, Direction direction,
                             OutputMode mode, const InferenceOptions& opt = {}) {
  if (mode == OutputMode::Averaged) return translate_averaged(bundle, seq, direction, opt);
  auto s = translate_spatial(bundle, seq, direction, opt);
  const auto n = static_cast<std::size_t>(s.length());
  return {std::move(s), std::vector<bool>(n, false)};
}

/// Predicts the unobserved V channel of a U recording (bundle trained on U→V).
inline Translation translate_third_channel(const ModelBundle& bundle, const VideoSequence& seq, OutputMode mode,
                                           const InferenceOptions& opt = {}) {
  return translate(bundle, seq, Direction::UToV, mode, opt);
}

}  // namespace stgan

#endif  // STGAN_INFERENCE_HPP
