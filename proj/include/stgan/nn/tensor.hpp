#ifndef STGAN_NN_TENSOR_HPP
#define STGAN_NN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stgan/error.hpp"

namespace stgan::nn {

/// NCHW extent of a dense tensor.
struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + "]";
  }
};

// Storage aligned for Eigen's packet size. Vectorized reductions peel at an
// alignment boundary, so with plain heap addresses the summation order (and
// the last bits of a result) would depend on where the allocator put a buffer.
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

template <class T>
struct Tensor {
  Shape shape;
  Buffer<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(s), data(s.numel(), fill) {}
  Tensor(Shape s, Buffer<T> values) : shape(s), data(std::move(values)) { check_size(); }
  Tensor(Shape s, std::initializer_list<T> values) : shape(s), data(values) { check_size(); }
  template <class Alloc>
  Tensor(Shape s, const std::vector<T, Alloc>& values) : shape(s), data(values.begin(), values.end()) {
    check_size();
  }

  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }

  T* plane(int n, int c) { return data.data() + (static_cast<std::size_t>(n) * shape.c + c) * shape.plane(); }
  const T* plane(int n, int c) const {
    return data.data() + (static_cast<std::size_t>(n) * shape.c + c) * shape.plane();
  }
  T& at(int n, int c, int y, int x) { return plane(n, c)[static_cast<std::size_t>(y) * shape.w + x]; }
  T at(int n, int c, int y, int x) const { return plane(n, c)[static_cast<std::size_t>(y) * shape.w + x]; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

 private:
  void check_size() const {
    require(data.size() == shape.numel(), Errc::ShapeError, "tensor data size does not match " + shape.str());
  }
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  require(a == b, Errc::ShapeError, std::string(what) + ": " + a.str() + " vs " + b.str());
}

}  // namespace stgan::nn

#endif  // STGAN_NN_TENSOR_HPP
