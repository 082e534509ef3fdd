#ifndef STGAN_NN_OPS_HPP
#define STGAN_NN_OPS_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "stgan/nn/autograd.hpp"

namespace stgan::nn {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

/// Geometry of a square-kernel 2-D convolution with zero padding.
struct ConvGeometry {
  int kernel = 4;
  int stride = 1;
  int pad = 0;

  int out_extent(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  int transposed_extent(int in) const { return (in - 1) * stride - 2 * pad + kernel; }
};

namespace detail {

// Output columns [lo, hi) whose input column ox·stride − pad + kx lies inside [0, w).
inline std::pair<int, int> valid_range(int kx, int w, int wo, const ConvGeometry& g) {
  const int off = kx - g.pad;
  int lo = off >= 0 ? 0 : (-off + g.stride - 1) / g.stride;
  int hi = w - 1 - off < 0 ? 0 : (w - 1 - off) / g.stride + 1;
  lo = std::min(lo, wo);
  hi = std::clamp(hi, lo, wo);
  return {lo, hi};
}

// Unfolds samples [n0, n0+count) of `x` (channels c, extent h×w) into a
// (c·k·k) × (count·ho·wo) row-major matrix.
template <class T>
void im2col(const T* x, int count, int c, int h, int w, const ConvGeometry& g, int ho, int wo, T* cols) {
  const std::size_t plane_out = static_cast<std::size_t>(ho) * wo;
  const std::size_t row_len = plane_out * count;
  const int k = g.kernel, st = g.stride;
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + static_cast<std::size_t>((ch * k + ky) * k + kx) * row_len;
        const auto [lo, hi] = valid_range(kx, w, wo, g);
        const int off = kx - g.pad;
        for (int n = 0; n < count; ++n) {
          const T* src = x + (static_cast<std::size_t>(n) * c + ch) * h * w;
          T* dst = row + n * plane_out;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * st - g.pad + ky;
            T* out = dst + static_cast<std::size_t>(oy) * wo;
            if (iy < 0 || iy >= h) {
              std::fill(out, out + wo, T(0));
              continue;
            }
            const T* in_row = src + static_cast<std::size_t>(iy) * w;
            std::fill(out, out + lo, T(0));
            if (st == 1) {
              std::copy(in_row + lo + off, in_row + hi + off, out + lo);
            } else {
              for (int ox = lo; ox < hi; ++ox) out[ox] = in_row[ox * st + off];
            }
            std::fill(out + hi, out + wo, T(0));
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds the column matrix back onto `x`.
template <class T>
void col2im(const T* cols, int count, int c, int h, int w, const ConvGeometry& g, int ho, int wo, T* x) {
  const std::size_t plane_out = static_cast<std::size_t>(ho) * wo;
  const std::size_t row_len = plane_out * count;
  const int k = g.kernel, st = g.stride;
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((ch * k + ky) * k + kx) * row_len;
        const auto [lo, hi] = valid_range(kx, w, wo, g);
        const int off = kx - g.pad;
        for (int n = 0; n < count; ++n) {
          T* dst = x + (static_cast<std::size_t>(n) * c + ch) * h * w;
          const T* src = row + n * plane_out;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * st - g.pad + ky;
            if (iy < 0 || iy >= h) continue;
            T* out_row = dst + static_cast<std::size_t>(iy) * w;
            const T* in = src + static_cast<std::size_t>(oy) * wo;
            for (int ox = lo; ox < hi; ++ox) out_row[ox * st + off] += in[ox];
          }
        }
      }
    }
  }
}

// Per-thread reusable buffer; contents are unspecified on return.
template <class T, int Slot>
T* scratch(std::size_t n) {
  thread_local Buffer<T> buf;
  if (buf.size() < n) {
    buf.clear();
    buf.shrink_to_fit();
    buf.resize(n);
  }
  return buf.data();
}

// (count, c, p) sample-major block <-> (c, count·p) channel-major matrix.
template <class T>
void to_channel_major(const T* x, int count, int c, std::size_t p, T* out) {
  for (int n = 0; n < count; ++n)
    for (int ch = 0; ch < c; ++ch)
      std::copy_n(x + (static_cast<std::size_t>(n) * c + ch) * p, p, out + (static_cast<std::size_t>(ch) * count + n) * p);
}

template <class T>
void to_sample_major(const T* m, int count, int c, std::size_t p, T* out) {
  for (int n = 0; n < count; ++n)
    for (int ch = 0; ch < c; ++ch)
      std::copy_n(m + (static_cast<std::size_t>(ch) * count + n) * p, p, out + (static_cast<std::size_t>(n) * c + ch) * p);
}

// Samples per GEMM chunk so the unfolded matrix stays below ~32 MB.
inline int chunk_samples(std::size_t per_sample_elems, int n) {
  constexpr std::size_t budget = std::size_t{8} << 20;
  const std::size_t fit = std::max<std::size_t>(1, budget / std::max<std::size_t>(1, per_sample_elems));
  return static_cast<int>(std::min<std::size_t>(fit, static_cast<std::size_t>(n)));
}

}  // namespace detail

/// y = conv(x, weight) + bias. weight: (cout, cin, k, k); bias: (1, cout, 1, 1).
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, ConvGeometry g) {
  const Shape xs = x->value.shape;
  const Shape ws = weight->value.shape;
  require(ws.c == xs.c && ws.h == g.kernel && ws.w == g.kernel, Errc::ShapeError,
          "conv2d weight " + ws.str() + " does not fit input " + xs.str());
  const int ho = g.out_extent(xs.h), wo = g.out_extent(xs.w);
  require(ho > 0 && wo > 0, Errc::ShapeError, "conv2d input too small: " + xs.str());
  const int cout = ws.n;
  const int kdim = xs.c * g.kernel * g.kernel;
  const std::size_t p = static_cast<std::size_t>(ho) * wo;

  Tensor<T> y(Shape{xs.n, cout, ho, wo});
  const int chunk = detail::chunk_samples(kdim * p, xs.n);
  ConstMatMap<T> wmat(weight->value.data.data(), cout, kdim);
  for (int n0 = 0; n0 < xs.n; n0 += chunk) {
    const int cnt = std::min(chunk, xs.n - n0);
    T* cols = detail::scratch<T, 0>(static_cast<std::size_t>(kdim) * cnt * p);
    T* ym = detail::scratch<T, 1>(static_cast<std::size_t>(cout) * cnt * p);
    detail::im2col(x->value.plane(n0, 0), cnt, xs.c, xs.h, xs.w, g, ho, wo, cols);
    MatMap<T>(ym, cout, cnt * p).noalias() = wmat * ConstMatMap<T>(cols, kdim, cnt * p);
    detail::to_sample_major(ym, cnt, cout, p, y.plane(n0, 0));
  }
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < cout; ++co) {
      T* out = y.plane(n, co);
      const T b = bias->value.data[co];
      for (std::size_t i = 0; i < p; ++i) out[i] += b;
    }

  return make_result<T>(std::move(y), {x, weight, bias}, [x, weight, bias, g, ho, wo, kdim, p, cout](Node<T>& self) {
    const Shape xs = x->value.shape;
    const int chunk = detail::chunk_samples(kdim * p, xs.n);
    ConstMatMap<T> wmat(weight->value.data.data(), cout, kdim);
    for (int n0 = 0; n0 < xs.n; n0 += chunk) {
      const int cnt = std::min(chunk, xs.n - n0);
      T* gm = detail::scratch<T, 2>(static_cast<std::size_t>(cout) * cnt * p);
      detail::to_channel_major(self.grad.plane(n0, 0), cnt, cout, p, gm);
      ConstMatMap<T> gmat(gm, cout, cnt * p);
      if (weight->requires_grad) {
        T* cols = detail::scratch<T, 0>(static_cast<std::size_t>(kdim) * cnt * p);
        detail::im2col(x->value.plane(n0, 0), cnt, xs.c, xs.h, xs.w, g, ho, wo, cols);
        MatMap<T>(weight->ensure_grad().data.data(), cout, kdim).noalias() +=
            gmat * ConstMatMap<T>(cols, kdim, cnt * p).transpose();
      }
      if (bias->requires_grad) {
        auto& bg = bias->ensure_grad().data;
        for (int co = 0; co < cout; ++co) bg[co] += gmat.row(co).sum();
      }
      if (x->requires_grad) {
        T* dcols = detail::scratch<T, 3>(static_cast<std::size_t>(kdim) * cnt * p);
        MatMap<T>(dcols, kdim, cnt * p).noalias() = wmat.transpose() * gmat;
        detail::col2im(dcols, cnt, xs.c, xs.h, xs.w, g, ho, wo, x->ensure_grad().plane(n0, 0));
      }
    }
  });
}

/// Transposed convolution (fractionally strided). weight: (cin, cout, k, k).
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, ConvGeometry g) {
  const Shape xs = x->value.shape;
  const Shape ws = weight->value.shape;
  require(ws.n == xs.c && ws.h == g.kernel && ws.w == g.kernel, Errc::ShapeError,
          "conv_transpose2d weight " + ws.str() + " does not fit input " + xs.str());
  const int cout = ws.c;
  const int ho = g.transposed_extent(xs.h), wo = g.transposed_extent(xs.w);
  const int kdim = cout * g.kernel * g.kernel;
  const std::size_t p = xs.plane();

  Tensor<T> y(Shape{xs.n, cout, ho, wo});
  const int chunk = detail::chunk_samples(kdim * p, xs.n);
  ConstMatMap<T> wmat(weight->value.data.data(), xs.c, kdim);
  for (int n0 = 0; n0 < xs.n; n0 += chunk) {
    const int cnt = std::min(chunk, xs.n - n0);
    T* xm = detail::scratch<T, 1>(static_cast<std::size_t>(xs.c) * cnt * p);
    T* cols = detail::scratch<T, 0>(static_cast<std::size_t>(kdim) * cnt * p);
    detail::to_channel_major(x->value.plane(n0, 0), cnt, xs.c, p, xm);
    MatMap<T>(cols, kdim, cnt * p).noalias() = wmat.transpose() * ConstMatMap<T>(xm, xs.c, cnt * p);
    detail::col2im(cols, cnt, cout, ho, wo, g, xs.h, xs.w, y.plane(n0, 0));
  }
  const std::size_t po = static_cast<std::size_t>(ho) * wo;
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < cout; ++co) {
      T* out = y.plane(n, co);
      const T b = bias->value.data[co];
      for (std::size_t i = 0; i < po; ++i) out[i] += b;
    }

  return make_result<T>(std::move(y), {x, weight, bias}, [x, weight, bias, g, ho, wo, kdim, p, po, cout](Node<T>& self) {
    const Shape xs = x->value.shape;
    const int chunk = detail::chunk_samples(kdim * p, xs.n);
    ConstMatMap<T> wmat(weight->value.data.data(), xs.c, kdim);
    if (bias->requires_grad) {
      auto& bg = bias->ensure_grad().data;
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < cout; ++co) {
          const T* gy = self.grad.plane(n, co);
          T acc = 0;
          for (std::size_t i = 0; i < po; ++i) acc += gy[i];
          bg[co] += acc;
        }
    }
    for (int n0 = 0; n0 < xs.n; n0 += chunk) {
      const int cnt = std::min(chunk, xs.n - n0);
      T* dcols = detail::scratch<T, 3>(static_cast<std::size_t>(kdim) * cnt * p);
      detail::im2col(self.grad.plane(n0, 0), cnt, cout, ho, wo, g, xs.h, xs.w, dcols);
      ConstMatMap<T> dcm(dcols, kdim, cnt * p);
      if (weight->requires_grad) {
        T* xm = detail::scratch<T, 1>(static_cast<std::size_t>(xs.c) * cnt * p);
        detail::to_channel_major(x->value.plane(n0, 0), cnt, xs.c, p, xm);
        MatMap<T>(weight->ensure_grad().data.data(), xs.c, kdim).noalias() +=
            ConstMatMap<T>(xm, xs.c, cnt * p) * dcm.transpose();
      }
      if (x->requires_grad) {
        T* dxm = detail::scratch<T, 2>(static_cast<std::size_t>(xs.c) * cnt * p);
        MatMap<T>(dxm, xs.c, cnt * p).noalias() = wmat * dcm;
        T* gx = x->ensure_grad().plane(n0, 0);
        for (int n = 0; n < cnt; ++n)
          for (int ch = 0; ch < xs.c; ++ch) {
            const T* src = dxm + (static_cast<std::size_t>(ch) * cnt + n) * p;
            T* dst = gx + (static_cast<std::size_t>(n) * xs.c + ch) * p;
            for (std::size_t i = 0; i < p; ++i) dst[i] += src[i];
          }
      }
    }
  });
}

/// Per-sample, per-channel normalization without affine parameters.
template <class T>
Var<T> instance_norm(const Var<T>& x, double eps = 1e-5) {
  const Shape s = x->value.shape;
  const std::size_t p = s.plane();
  Tensor<T> y(s);
  std::vector<T> inv_std(static_cast<std::size_t>(s.n) * s.c);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* in = x->value.plane(n, c);
      double mean = 0;
      for (std::size_t i = 0; i < p; ++i) mean += in[i];
      mean /= static_cast<double>(p);
      double var = 0;
      for (std::size_t i = 0; i < p; ++i) var += (in[i] - mean) * (in[i] - mean);
      var /= static_cast<double>(p);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[static_cast<std::size_t>(n) * s.c + c] = static_cast<T>(is);
      T* out = y.plane(n, c);
      for (std::size_t i = 0; i < p; ++i) out[i] = static_cast<T>((in[i] - mean) * is);
    }
  auto node = make_result<T>(std::move(y), {x}, nullptr);
  if (!node->requires_grad) return node;
  Node<T>* raw = node.get();
  node->backward_fn = [x, raw, inv_std = std::move(inv_std), s, p](Node<T>& self) {
    auto& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const T* gy = self.grad.plane(n, c);
        const T* yh = raw->value.plane(n, c);
        double mg = 0, mgy = 0;
        for (std::size_t i = 0; i < p; ++i) {
          mg += gy[i];
          mgy += static_cast<double>(gy[i]) * yh[i];
        }
        mg /= static_cast<double>(p);
        mgy /= static_cast<double>(p);
        const double is = inv_std[static_cast<std::size_t>(n) * s.c + c];
        T* out = gx.plane(n, c);
        for (std::size_t i = 0; i < p; ++i) out[i] += static_cast<T>(is * (gy[i] - mg - yh[i] * mgy));
      }
  };
  return node;
}

namespace detail {

// Elementwise op whose derivative is expressible from (input, output).
template <class T, class Fwd, class Deriv>
Var<T> pointwise(const Var<T>& x, Fwd fwd, Deriv deriv) {
  Tensor<T> y(x->value.shape);
  const auto& in = x->value.data;
  for (std::size_t i = 0; i < in.size(); ++i) y.data[i] = fwd(in[i]);
  auto node = make_result<T>(std::move(y), {x}, nullptr);
  if (!node->requires_grad) return node;
  Node<T>* raw = node.get();
  node->backward_fn = [x, raw, deriv](Node<T>& self) {
    auto& gx = x->ensure_grad().data;
    const auto& in = x->value.data;
    const auto& out = raw->value.data;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad.data[i] * deriv(in[i], out[i]);
  };
  return node;
}

}  // namespace detail

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return detail::pointwise<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return leaky_relu<T>(x, T(0));
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return detail::pointwise<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return detail::pointwise<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

/// Concatenates along the channel axis.
template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape sa = a->value.shape, sb = b->value.shape;
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w, Errc::ShapeError,
          "concat_channels " + sa.str() + " vs " + sb.str());
  const std::size_t p = sa.plane();
  Tensor<T> y(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a->value.plane(n, 0), sa.c * p, y.plane(n, 0));
    std::copy_n(b->value.plane(n, 0), sb.c * p, y.plane(n, sa.c));
  }
  return make_result<T>(std::move(y), {a, b}, [a, b, sa, sb, p](Node<T>& self) {
    for (int n = 0; n < sa.n; ++n) {
      if (a->requires_grad) {
        T* ga = a->ensure_grad().plane(n, 0);
        const T* g = self.grad.plane(n, 0);
        for (std::size_t i = 0; i < sa.c * p; ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        T* gb = b->ensure_grad().plane(n, 0);
        const T* g = self.grad.plane(n, sa.c);
        for (std::size_t i = 0; i < sb.c * p; ++i) gb[i] += g[i];
      }
    }
  });
}

/// Channels [begin, end) of every sample.
template <class T>
Var<T> slice_channels(const Var<T>& x, int begin, int end) {
  const Shape s = x->value.shape;
  require(0 <= begin && begin < end && end <= s.c, Errc::ShapeError, "slice_channels out of range for " + s.str());
  const std::size_t p = s.plane();
  const int c = end - begin;
  Tensor<T> y(Shape{s.n, c, s.h, s.w});
  for (int n = 0; n < s.n; ++n) std::copy_n(x->value.plane(n, begin), c * p, y.plane(n, 0));
  return make_result<T>(std::move(y), {x}, [x, begin, c, p, s](Node<T>& self) {
    auto& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n) {
      T* dst = gx.plane(n, begin);
      const T* src = self.grad.plane(n, 0);
      for (std::size_t i = 0; i < c * p; ++i) dst[i] += src[i];
    }
  });
}

/// Reinterprets the buffer with a new shape of equal element count.
template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  require(shape.numel() == x->value.numel(), Errc::ShapeError,
          "reshape " + x->value.shape.str() + " -> " + shape.str());
  Tensor<T> y(shape, x->value.data);
  return make_result<T>(std::move(y), {x}, [x](Node<T>& self) {
    auto& gx = x->ensure_grad().data;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad.data[i];
  });
}

namespace detail {
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace detail

/// Mirror padding without edge repetition (numpy "reflect").
template <class T>
Var<T> reflect_pad(const Var<T>& x, int top, int bottom, int left, int right) {
  const Shape s = x->value.shape;
  require(top < s.h && bottom < s.h && left < s.w && right < s.w, Errc::ShapeError,
          "reflect padding must be smaller than the input extent " + s.str());
  const int h = s.h + top + bottom, w = s.w + left + right;
  Tensor<T> y(Shape{s.n, s.c, h, w});
  std::vector<int> ry(h), rx(w);
  for (int i = 0; i < h; ++i) ry[i] = detail::reflect_index(i - top, s.h);
  for (int i = 0; i < w; ++i) rx[i] = detail::reflect_index(i - left, s.w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* in = x->value.plane(n, c);
      T* out = y.plane(n, c);
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) out[yy * w + xx] = in[ry[yy] * s.w + rx[xx]];
    }
  return make_result<T>(std::move(y), {x}, [x, s, h, w, ry, rx](Node<T>& self) {
    auto& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        T* out = gx.plane(n, c);
        const T* g = self.grad.plane(n, c);
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) out[ry[yy] * s.w + rx[xx]] += g[yy * w + xx];
      }
  });
}

template <class T>
Var<T> crop(const Var<T>& x, int top, int left, int h, int w) {
  const Shape s = x->value.shape;
  require(top >= 0 && left >= 0 && top + h <= s.h && left + w <= s.w, Errc::ShapeError, "crop outside " + s.str());
  Tensor<T> y(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int yy = 0; yy < h; ++yy)
        std::copy_n(x->value.plane(n, c) + (top + yy) * s.w + left, w, y.plane(n, c) + yy * w);
  return make_result<T>(std::move(y), {x}, [x, s, top, left, h, w](Node<T>& self) {
    auto& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int yy = 0; yy < h; ++yy) {
          T* dst = gx.plane(n, c) + (top + yy) * s.w + left;
          const T* src = self.grad.plane(n, c) + yy * w;
          for (int xx = 0; xx < w; ++xx) dst[xx] += src[xx];
        }
  });
}

// ---------------------------------------------------------------------------
// Scalar reductions. Accumulation is in double regardless of T.

template <class T>
Tensor<T> scalar_tensor(double v) {
  return Tensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(v));
}

template <class T>
T scalar_value(const Var<T>& s) {
  return s->value.data[0];
}

/// mean |a − b| over all elements; d|x|/dx at 0 is taken as 0.
template <class T>
Var<T> mean_abs_diff(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value.shape, b->value.shape, "mean_abs_diff");
  const auto& av = a->value.data;
  const auto& bv = b->value.data;
  double acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(static_cast<double>(av[i]) - bv[i]);
  const double inv = 1.0 / static_cast<double>(av.size());
  return make_result<T>(scalar_tensor<T>(acc * inv), {a, b}, [a, b, inv](Node<T>& self) {
    const T g = static_cast<T>(self.grad.data[0] * inv);
    const auto& av = a->value.data;
    const auto& bv = b->value.data;
    T* ga = a->requires_grad ? a->ensure_grad().data.data() : nullptr;
    T* gb = b->requires_grad ? b->ensure_grad().data.data() : nullptr;
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T d = av[i] - bv[i];
      const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
      if (ga) ga[i] += g * sgn;
      if (gb) gb[i] -= g * sgn;
    }
  });
}

/// mean (a − b)² over all elements.
template <class T>
Var<T> mean_sq_diff(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value.shape, b->value.shape, "mean_sq_diff");
  const auto& av = a->value.data;
  const auto& bv = b->value.data;
  double acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = static_cast<double>(av[i]) - bv[i];
    acc += d * d;
  }
  const double inv = 1.0 / static_cast<double>(av.size());
  return make_result<T>(scalar_tensor<T>(acc * inv), {a, b}, [a, b, inv](Node<T>& self) {
    const double g = self.grad.data[0] * inv * 2.0;
    const auto& av = a->value.data;
    const auto& bv = b->value.data;
    T* ga = a->requires_grad ? a->ensure_grad().data.data() : nullptr;
    T* gb = b->requires_grad ? b->ensure_grad().data.data() : nullptr;
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T d = static_cast<T>(g * (static_cast<double>(av[i]) - bv[i]));
      if (ga) ga[i] += d;
      if (gb) gb[i] -= d;
    }
  });
}

/// mean log(clamp(x, eps, 1 − eps)), or of log(1 − clamp(x)) when `complement`.
/// The clamp passes no gradient outside its range.
template <class T>
Var<T> mean_log(const Var<T>& x, double eps, bool complement) {
  const auto& xv = x->value.data;
  const double lo = eps, hi = 1.0 - eps;
  double acc = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double c = std::clamp(static_cast<double>(xv[i]), lo, hi);
    require(std::isfinite(static_cast<double>(xv[i])), Errc::NaNLoss, "non-finite score entering log loss");
    acc += complement ? std::log1p(-c) : std::log(c);
  }
  const double inv = 1.0 / static_cast<double>(xv.size());
  return make_result<T>(scalar_tensor<T>(acc * inv), {x}, [x, inv, lo, hi, complement](Node<T>& self) {
    const double g = self.grad.data[0] * inv;
    auto& gx = x->ensure_grad().data;
    const auto& xv = x->value.data;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      if (v < lo || v > hi) continue;
      gx[i] += static_cast<T>(complement ? -g / (1.0 - v) : g / v);
    }
  });
}

/// Weighted sum of scalars: Σ weights[i]·terms[i].
template <class T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<double>& weights) {
  require(terms.size() == weights.size() && !terms.empty(), Errc::ShapeError, "weighted_sum arity");
  double acc = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i]->value.numel() == 1, Errc::ShapeError, "weighted_sum expects scalars");
    acc += weights[i] * static_cast<double>(terms[i]->value.data[0]);
  }
  return make_result<T>(scalar_tensor<T>(acc), terms, [terms, weights](Node<T>& self) {
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (terms[i]->requires_grad) terms[i]->ensure_grad().data[0] += static_cast<T>(self.grad.data[0] * weights[i]);
  });
}

}  // namespace stgan::nn

#endif  // STGAN_NN_OPS_HPP
