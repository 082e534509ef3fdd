#ifndef STGAN_METRICS_HPP
#define STGAN_METRICS_HPP

// MSE, PSNR and SSIM in [0, 1] intensity space (data range 1).

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgan/core_types.hpp"

namespace stgan::metrics {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Grayscale image in metric space [0, 1].
struct MetricImage {
  std::vector<double> pixels;
  int height = 0;
  int width = 0;

  double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline MetricImage to_metric(const Frame& f) {
  MetricImage m{std::vector<double>(f.pixels.size()), f.height, f.width};
  for (std::size_t i = 0; i < f.pixels.size(); ++i) m.pixels[i] = (static_cast<double>(f.pixels[i]) + 1.0) * 0.5;
  return m;
}

inline MetricImage constant_image(int height, int width, double value) {
  return {std::vector<double>(static_cast<std::size_t>(height) * width, value), height, width};
}

inline void require_same_shape(const MetricImage& a, const MetricImage& b) {
  require(a.height == b.height && a.width == b.width && a.pixels.size() == b.pixels.size(), Errc::ShapeError,
          "metric inputs differ in shape");
}

inline double mse(const MetricImage& a, const MetricImage& b) {
  require_same_shape(a, b);
  double acc = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

/// 10·log10(range² / mse); +infinity when mse is zero.
inline double psnr_from_mse(double m, double data_range = 1.0) {
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / m);
}

inline double psnr(const MetricImage& a, const MetricImage& b) { return psnr_from_mse(mse(a, b)); }

inline std::vector<double> gaussian_window(const SsimParams& p) {
  std::vector<double> k(static_cast<std::size_t>(p.window));
  const int r = p.window / 2;
  double sum = 0;
  for (int i = 0; i < p.window; ++i) sum += k[i] = std::exp(-double((i - r) * (i - r)) / (2 * p.sigma * p.sigma));
  for (auto& v : k) v /= sum;
  return k;
}

/// Mean SSIM over all fully-contained windows (no padding).
inline double ssim(const MetricImage& a, const MetricImage& b, const SsimParams& p = {}) {
  require_same_shape(a, b);
  require(a.height >= p.window && a.width >= p.window, Errc::FrameTooSmall,
          "SSIM needs frames of at least " + std::to_string(p.window) + "x" + std::to_string(p.window));
  const auto k = gaussian_window(p);
  const int oh = a.height - p.window + 1, ow = a.width - p.window + 1;
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);

  // Horizontal pass over the five moment images, then vertical.
  constexpr int kMoments = 5;
  std::array<std::vector<double>, kMoments> horiz;
  for (auto& h : horiz) h.assign(static_cast<std::size_t>(a.height) * ow, 0.0);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s[kMoments] = {0, 0, 0, 0, 0};
      for (int i = 0; i < p.window; ++i) {
        const double va = a.at(y, x + i), vb = b.at(y, x + i), w = k[i];
        s[0] += w * va;
        s[1] += w * vb;
        s[2] += w * va * va;
        s[3] += w * vb * vb;
        s[4] += w * va * vb;
      }
      for (int m = 0; m < kMoments; ++m) horiz[m][static_cast<std::size_t>(y) * ow + x] = s[m];
    }

  double total = 0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s[kMoments] = {0, 0, 0, 0, 0};
      for (int i = 0; i < p.window; ++i)
        for (int m = 0; m < kMoments; ++m) s[m] += k[i] * horiz[m][static_cast<std::size_t>(y + i) * ow + x];
      const double mu_a = s[0], mu_b = s[1];
      const double var_a = s[2] - mu_a * mu_a, var_b = s[3] - mu_b * mu_b, cov = s[4] - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  return total / (static_cast<double>(oh) * ow);
}

struct FrameMetrics {
  int index = 0;
  double mse = 0;
  double ssim = 0;
  double psnr = 0;
};

struct Summary {
  double mean = 0;
  double std = 0;  // population
};

/// Mean/std of `values`. Any +inf (PSNR of a perfect frame) makes the mean
/// +inf; the std is then 0 if every value is +inf and NaN otherwise.
inline Summary summarize(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::size_t infinite = 0;
  double sum = 0;
  for (double v : values) {
    if (std::isinf(v)) ++infinite;
    sum += v;
  }
  if (infinite > 0)
    return {std::numeric_limits<double>::infinity(),
            infinite == values.size() ? 0.0 : std::numeric_limits<double>::quiet_NaN()};
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

struct MetricReport {
  std::vector<FrameMetrics> per_frame;
  Summary mse, ssim, psnr;
  std::string direction = "u2v";
  std::string mode = "spatial";
  SsimParams ssim_params;

  void recompute_aggregates() {
    std::vector<double> m, s, p;
    for (const auto& r : per_frame) {
      m.push_back(r.mse);
      s.push_back(r.ssim);
      p.push_back(r.psnr);
    }
    mse = summarize(m);
    ssim = summarize(s);
    psnr = summarize(p);
  }
};

inline FrameMetrics frame_metrics(const Frame& pred, const Frame& real, const SsimParams& p = {}) {
  const auto a = to_metric(pred), b = to_metric(real);
  const double m = mse(a, b);
  return {real.t, m, ssim(a, b, p), psnr_from_mse(m, p.data_range)};
}

/// Per-frame metrics of `pred` against `real` (model space inputs).
inline MetricReport evaluate_sequences(const VideoSequence& pred, const VideoSequence& real,
                                       std::string direction = "u2v", std::string mode = "spatial") {
  require(pred.length() == real.length(), Errc::LengthMismatch,
          "predicted length " + std::to_string(pred.length()) + " vs real " + std::to_string(real.length()));
  MetricReport report;
  report.direction = std::move(direction);
  report.mode = std::move(mode);
  for (int i = 0; i < real.length(); ++i) {
    require(pred[i].same_shape(real[i]), Errc::ShapeError, "frame " + std::to_string(i) + " differs in shape");
    report.per_frame.push_back(frame_metrics(pred[i], real[i], report.ssim_params));
  }
  report.recompute_aggregates();
  return report;
}

namespace detail {
inline std::string exact(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}
}  // namespace detail

/// index,mse,ssim,psnr with round-trip precision.
inline std::string report_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "index,mse,ssim,psnr\n";
  for (const auto& row : r.per_frame)
    os << row.index << ',' << detail::exact(row.mse) << ',' << detail::exact(row.ssim) << ','
       << detail::exact(row.psnr) << '\n';
  return os.str();
}

inline nlohmann::json report_json(const MetricReport& r) {
  auto summary = [](const Summary& s) { return nlohmann::json{{"mean", detail::number(s.mean)}, {"std", detail::number(s.std)}}; };
  return {{"conventions",
           {{"space", "[0,1] intensities, model values mapped by (x+1)/2"},
            {"data_range", r.ssim_params.data_range},
            {"ssim_window", r.ssim_params.window},
            {"ssim_gaussian_sigma", r.ssim_params.sigma},
            {"ssim_k1", r.ssim_params.k1},
            {"ssim_k2", r.ssim_params.k2},
            {"ssim_boundary", "valid windows only"},
            {"psnr", "10*log10(data_range^2/mse); \"inf\" when mse == 0"},
            {"std", "population standard deviation"}}},
          {"direction", r.direction},
          {"mode", r.mode},
          {"frames", r.per_frame.size()},
          {"aggregate", {{"mse", summary(r.mse)}, {"ssim", summary(r.ssim)}, {"psnr", summary(r.psnr)}}}};
}

}  // namespace stgan::metrics

#endif  // STGAN_METRICS_HPP
