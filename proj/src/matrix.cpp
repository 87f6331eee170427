#include "parcel/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace parcel {

Matrix::Matrix(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                " != " + std::to_string(r) + "x" + std::to_string(c));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows));
  }
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
      double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.data) v *= s;
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m.cols; ++j) row_max = std::max(row_max, m.at(i, j));
    long double sum = 0.0L;
    for (int j = 0; j < m.cols; ++j) {
      const double e = std::exp(m.at(i, j) - row_max);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < m.cols; ++j) {
      out.at(i, j) = static_cast<double>(out.at(i, j) / sum);
    }
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& p, const Matrix& upstream) {
  require_same_shape(p, upstream, "softmax_rows_backward");
  Matrix out(p.rows, p.cols);
  for (int i = 0; i < p.rows; ++i) {
    long double dot = 0.0L;
    for (int j = 0; j < p.cols; ++j) dot += upstream.at(i, j) * p.at(i, j);
    for (int j = 0; j < p.cols; ++j) {
      out.at(i, j) = p.at(i, j) * (upstream.at(i, j) - static_cast<double>(dot));
    }
  }
  return out;
}

Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
  if (top.rows == 0) return bottom;
  if (bottom.rows == 0) return top;
  if (top.cols != bottom.cols) {
    throw std::invalid_argument("concat_rows: col mismatch");
  }
  Matrix out(top.rows + bottom.rows, top.cols);
  std::copy(top.data.begin(), top.data.end(), out.data.begin());
  std::copy(bottom.data.begin(), bottom.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(top.data.size()));
  return out;
}

Matrix slice_rows(const Matrix& m, int begin, int end) {
  if (begin < 0 || end > m.rows || begin > end) {
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(begin) +
                                ", " + std::to_string(end) + ") of " + std::to_string(m.rows));
  }
  Matrix out(end - begin, m.cols);
  std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(begin) * m.cols,
            m.data.begin() + static_cast<std::ptrdiff_t>(end) * m.cols, out.data.begin());
  return out;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  return worst;
}

double relative_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "relative_error");
  long double diff2 = 0.0L, a2 = 0.0L, b2 = 0.0L;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    diff2 += static_cast<long double>(d) * d;
    a2 += static_cast<long double>(a.data[i]) * a.data[i];
    b2 += static_cast<long double>(b.data[i]) * b.data[i];
  }
  const double denom = std::max({std::sqrt(static_cast<double>(a2)),
                                 std::sqrt(static_cast<double>(b2)), 1e-12});
  return std::sqrt(static_cast<double>(diff2)) / denom;
}

}  // namespace parcel
