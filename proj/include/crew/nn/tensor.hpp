#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace crew::nn {

// Row-major (rows x cols); rows index batch samples.
template <typename T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  T operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  T* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return data.size(); }
};

// Convolution activations in channel-major layout (c, n, y, x) so that each
// channel is one contiguous block and a convolution is a single GEMM.
template <typename T>
struct FeatureMap {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int n, int h, int w, T fill = T(0))
      : channels(c), batch(n), height(h), width(w), data(static_cast<std::size_t>(c) * n * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(batch) * height * width; }
  T& at(int c, int n, int y, int x) {
    return data[((static_cast<std::size_t>(c) * batch + n) * height + y) * width + x];
  }
  T at(int c, int n, int y, int x) const {
    return data[((static_cast<std::size_t>(c) * batch + n) * height + y) * width + x];
  }
};

// Concatenates columns [a | b]; both must have equal row counts.
template <typename T>
Matrix<T> hconcat(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows != b.rows) throw std::invalid_argument("hconcat: row count mismatch");
  Matrix<T> out(a.rows, a.cols + b.cols);
  for (int r = 0; r < a.rows; ++r) {
    T* dst = out.row(r);
    for (int c = 0; c < a.cols; ++c) dst[c] = a(r, c);
    for (int c = 0; c < b.cols; ++c) dst[a.cols + c] = b(r, c);
  }
  return out;
}

// Columns [begin, begin + count) of m.
template <typename T>
Matrix<T> column_slice(const Matrix<T>& m, int begin, int count) {
  Matrix<T> out(m.rows, count);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < count; ++c) out(r, c) = m(r, begin + c);
  }
  return out;
}

}  // namespace crew::nn
