#ifndef STGAN_LOSSES_HPP
#define STGAN_LOSSES_HPP

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "stgan/nn/ops.hpp"

namespace stgan {

/// Scores are clamped to [ε, 1−ε] before any log.
inline constexpr double kScoreEps = 1e-7;

/// One training step's objective components. Sums over the τ window frames
/// are already applied; values are batch means.
struct LossRecord {
  double adv_Gs = 0, adv_Fs = 0;
  double d_G = 0, d_F = 0;
  double l1_Gs = 0, l1_Fs = 0;
  double lt_Gt = 0, lt_Ft = 0;
  double lts_GtGs = 0, lts_FtFs = 0;
  double total_generator = 0;

  static constexpr std::array<std::string_view, 11> kFields{"adv_Gs", "adv_Fs", "d_G",     "d_F",
                                                             "l1_Gs",  "l1_Fs",  "lt_Gt",   "lt_Ft",
                                                             "lts_GtGs", "lts_FtFs", "total_generator"};

  std::array<double, 11> values() const {
    return {adv_Gs, adv_Fs, d_G, d_F, l1_Gs, l1_Fs, lt_Gt, lt_Ft, lts_GtGs, lts_FtFs, total_generator};
  }
  static LossRecord from_values(const std::array<double, 11>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]};
  }

  /// Name of the first non-finite component, empty when all are finite.
  std::string first_nonfinite() const {
    const auto v = values();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!std::isfinite(v[i])) return std::string(kFields[i]);
    return {};
  }
};

/// adv_Gs + adv_Fs + λs(l1_Gs + l1_Fs) + λt(lt_Gt + lt_Ft + lts_GtGs + lts_FtFs)
inline double full_generator_objective(const LossRecord& r, double lambda_s, double lambda_t) {
  const double total = r.adv_Gs + r.adv_Fs + lambda_s * (r.l1_Gs + r.l1_Fs) +
                       lambda_t * (r.lt_Gt + r.lt_Ft + r.lts_GtGs + r.lts_FtFs);
  require(std::isfinite(total), Errc::NaNLoss, "generator objective is not finite");
  return total;
}

namespace losses {

using nn::Var;

namespace detail {
template <class T>
Var<T> checked(Var<T> v, const char* what) {
  require(std::isfinite(static_cast<double>(v->value.data[0])), Errc::NaNLoss, std::string(what) + " is not finite");
  return v;
}

template <class T>
Var<T> scaled(const Var<T>& v, double factor) {
  return factor == 1.0 ? v : nn::weighted_sum<T>({v}, {factor});
}
}  // namespace detail

/// mean log D(real) + mean log(1 − D(fake)), per frame and summed over the
/// `frames` frames of a window. Stacked batches of windows reduce to
/// frames × global mean. The discriminator ascends this value.
template <class T>
Var<T> discriminator_loss(const Var<T>& score_real, const Var<T>& score_fake, int frames = 1) {
  auto real = nn::mean_log(score_real, kScoreEps, false);
  auto fake = nn::mean_log(score_fake, kScoreEps, true);
  return detail::checked(nn::weighted_sum<T>({real, fake}, {double(frames), double(frames)}), "discriminator loss");
}

/// Non-saturating generator term: −mean log D(fake), summed over frames.
template <class T>
Var<T> generator_adv_loss(const Var<T>& score_fake, int frames = 1) {
  auto l = nn::mean_log(score_fake, kScoreEps, false);
  return detail::checked(nn::weighted_sum<T>({l}, {-double(frames)}), "generator adversarial loss");
}

/// Per-pixel mean |pred − real| per frame, summed over frames.
template <class T>
Var<T> spatial_l1(const Var<T>& pred, const Var<T>& real, int frames = 1) {
  return detail::checked(detail::scaled(nn::mean_abs_diff(pred, real), frames), "spatial L1 loss");
}

/// Next-frame loss from real inputs: per-pixel mean squared error on frame τ.
template <class T>
Var<T> temporal_loss(const Var<T>& pred_last, const Var<T>& real_last) {
  return detail::checked(nn::mean_sq_diff(pred_last, real_last), "temporal loss");
}

/// Same reduction as temporal_loss, but `pred_last` comes from the temporal
/// generator applied to spatial-generator outputs, so it couples both.
template <class T>
Var<T> temporal_spatial_loss(const Var<T>& pred_last, const Var<T>& real_last) {
  return detail::checked(nn::mean_sq_diff(pred_last, real_last), "temporal-spatial loss");
}

struct GeneratorTerms {
  double lambda_s = 100.0;
  double lambda_t = 10.0;
};

/// Graph version of full_generator_objective. Temporal terms may be null
/// (spatial-only ablation) and then contribute nothing.
template <class T>
Var<T> full_generator_objective(const Var<T>& adv_gs, const Var<T>& adv_fs, const Var<T>& l1_gs,
                                const Var<T>& l1_fs, const Var<T>& lt_gt, const Var<T>& lt_ft,
                                const Var<T>& lts_gtgs, const Var<T>& lts_ftfs, GeneratorTerms w) {
  std::vector<Var<T>> terms{adv_gs, adv_fs, l1_gs, l1_fs};
  std::vector<double> weights{1.0, 1.0, w.lambda_s, w.lambda_s};
  for (const auto& t : {lt_gt, lt_ft, lts_gtgs, lts_ftfs})
    if (t) {
      terms.push_back(t);
      weights.push_back(w.lambda_t);
    }
  return detail::checked(nn::weighted_sum<T>(terms, weights), "generator objective");
}

// Plain-value conveniences over score maps and frames.

template <class T>
double discriminator_loss(const nn::Tensor<T>& real, const nn::Tensor<T>& fake, int frames = 1) {
  return discriminator_loss<T>(nn::constant(real), nn::constant(fake), frames)->value.data[0];
}

template <class T>
double generator_adv_loss(const nn::Tensor<T>& fake, int frames = 1) {
  return generator_adv_loss<T>(nn::constant(fake), frames)->value.data[0];
}

template <class T>
double spatial_l1(const nn::Tensor<T>& pred, const nn::Tensor<T>& real, int frames = 1) {
  return spatial_l1<T>(nn::constant(pred), nn::constant(real), frames)->value.data[0];
}

template <class T>
double temporal_loss(const nn::Tensor<T>& pred, const nn::Tensor<T>& real) {
  return temporal_loss<T>(nn::constant(pred), nn::constant(real))->value.data[0];
}

template <class T>
double temporal_spatial_loss(const nn::Tensor<T>& pred, const nn::Tensor<T>& real) {
  return temporal_spatial_loss<T>(nn::constant(pred), nn::constant(real))->value.data[0];
}

}  // namespace losses
}  // namespace stgan

#endif  // STGAN_LOSSES_HPP
