#pragma once

#include <cstddef>
#include <vector>

namespace parcel {

// Dense row-major matrix of doubles. Plain value type: copy freely,
// share read-only across threads.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> values);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);

// Row-wise softmax with max-subtraction; long double accumulation.
Matrix softmax_rows(const Matrix& m);

// Gradient of sum_ij w_ij * softmax_rows(x)_ij with respect to x,
// given the softmax output p and the per-entry weights w.
Matrix softmax_rows_backward(const Matrix& p, const Matrix& upstream);

Matrix concat_rows(const Matrix& top, const Matrix& bottom);
Matrix slice_rows(const Matrix& m, int begin, int end);

bool all_finite(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

// diff / max(|a|, |b|) with a small floor; used by gradient checks.
double relative_error(const Matrix& a, const Matrix& b);

}  // namespace parcel
