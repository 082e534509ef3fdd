#ifndef STGAN_MODEL_HPP
#define STGAN_MODEL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stgan/config.hpp"
#include "stgan/networks.hpp"

namespace stgan {

/// Adam moment buffers for one network.
struct AdamState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::int64_t t = 0;
};

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update from the gradients currently held by `params`.
/// Parameters without a gradient are left untouched.
inline void adam_step(const std::vector<Var<float>>& params, AdamState& state, const AdamOptions& opt) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p->value.shape);
      state.v.emplace_back(p->value.shape);
    }
  }
  require(state.m.size() == params.size(), Errc::ShapeError, "optimizer state does not match parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p->grad.empty()) continue;
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    auto& w = p->value.data;
    const auto& g = p->grad.data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = opt.beta1 * m[k] + (1.0 - opt.beta1) * gk;
      const double vk = opt.beta2 * v[k] + (1.0 - opt.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      w[k] = static_cast<float>(w[k] - opt.lr * (mk / c1) / (std::sqrt(vk / c2) + opt.eps));
    }
  }
}

inline void zero_grads(const std::vector<Var<float>>& params) {
  for (const auto& p : params) p->zero_grad();
}

inline void set_trainable(const std::vector<Var<float>>& params, bool on) {
  for (const auto& p : params) p->requires_grad = on;
}

enum NetworkSlot : int { kGs = 0, kFs, kGt, kFt, kDG, kDF, kNetworkCount };
inline constexpr std::array<std::string_view, kNetworkCount> kNetworkNames{"G_s", "F_s", "G_t", "F_t", "D_G", "D_F"};

inline GeneratorSpec spatial_spec(const TrainConfig& c) { return {1, 1, c.gen_depth, c.gen_width}; }
inline GeneratorSpec temporal_spec(const TrainConfig& c) { return {c.tau - 1, 1, c.gen_depth, c.gen_width}; }
inline DiscriminatorSpec discriminator_spec(const TrainConfig& c) {
  return {c.disc_conditional ? 2 : 1, c.disc_width, c.disc_layers, c.disc_instance_norm};
}

/// The six networks and their optimizer state.
///   G_s: U→V frame translator    F_s: V→U frame translator
///   G_t: V next-frame predictor  F_t: U next-frame predictor
///   D_G: real/fake V scorer      D_F: real/fake U scorer
class ModelBundle {
 public:
  explicit ModelBundle(const TrainConfig& cfg) : ModelBundle(cfg, cfg.seed) {}

  ModelBundle(const TrainConfig& cfg, std::uint64_t init_seed)
      : config(cfg),
        digest(config_digest(cfg)),
        rng_(init_seed),
        g_s(spatial_spec(cfg), rng_),
        f_s(spatial_spec(cfg), rng_),
        g_t(temporal_spec(cfg), rng_),
        f_t(temporal_spec(cfg), rng_),
        d_g(discriminator_spec(cfg), rng_),
        d_f(discriminator_spec(cfg), rng_) {
    cfg.validate();
  }

  // Networks hold shared parameter handles; a copy would alias them.
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;
  ModelBundle(ModelBundle&&) = default;
  ModelBundle& operator=(ModelBundle&&) = default;

  TrainConfig config;
  std::string digest;

 private:
  std::mt19937_64 rng_;  // initialization only; declared before the networks

 public:
  UNetGenerator<float> g_s, f_s, g_t, f_t;
  PatchDiscriminator<float> d_g, d_f;
  std::array<AdamState, kNetworkCount> adam;
  std::int64_t step = 0;

  std::vector<Var<float>> parameters(NetworkSlot slot) const {
    switch (slot) {
      case kGs: return g_s.parameters();
      case kFs: return f_s.parameters();
      case kGt: return g_t.parameters();
      case kFt: return f_t.parameters();
      case kDG: return d_g.parameters();
      case kDF: return d_f.parameters();
      default: break;
    }
    fail(Errc::ShapeError, "unknown network slot");
  }

  const UNetGenerator<float>& spatial(Direction d) const { return d == Direction::UToV ? g_s : f_s; }
  /// Next-frame predictor of the direction's target domain.
  const UNetGenerator<float>& temporal(Direction d) const { return d == Direction::UToV ? g_t : f_t; }
};

}  // namespace stgan

#endif  // STGAN_MODEL_HPP
