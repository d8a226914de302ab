#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace fisher {

/// Dense row-major matrix of doubles. Small markets only; no BLAS needed.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(int i, int j) {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  double operator()(int i, int j) const {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[static_cast<std::size_t>(i) * cols + j];
  }

  std::span<double> row(int i) {
    return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
  }

  std::vector<double> column(int j) const {
    std::vector<double> out(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) out[static_cast<std::size_t>(i)] = (*this)(i, j);
    return out;
  }

  /// Submatrix restricted to the given column indices, in the given order.
  Matrix select_columns(std::span<const int> idx) const {
    Matrix out(rows, static_cast<int>(idx.size()));
    for (int i = 0; i < rows; ++i)
      for (int q = 0; q < out.cols; ++q) out(i, q) = (*this)(i, idx[static_cast<std::size_t>(q)]);
    return out;
  }

  bool operator==(const Matrix&) const = default;
};

inline double row_dot(const Matrix& a, const Matrix& b, int i) {
  double s = 0.0;
  for (int j = 0; j < a.cols; ++j) s += a(i, j) * b(i, j);
  return s;
}

}  // namespace fisher
