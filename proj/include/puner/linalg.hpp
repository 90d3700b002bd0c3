#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace puner {

// Dense row-major matrix of doubles. Just enough surface for the model code;
// heavy lifting happens in explicit loops at the call sites.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }
  double at(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }

  double* row(std::size_t r) { return a.data() + r * cols; }
  const double* row(std::size_t r) const { return a.data() + r * cols; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }
  std::size_t size() const { return a.size(); }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

}  // namespace puner
