/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "spherecast/common.hpp"

namespace spherecast {

// Compressed sparse rows. Column indices within a row are stored in the
// order the builder chose (not necessarily ascending); products accumulate
// in that stored order, which keeps results bit-deterministic.
struct CsrMatrix {
  int n = 0;  // square
  std::vector<uint32_t> row_ptr;  // size n+1
  std::vector<uint32_t> col;
  std::vector<double> val;

  size_t nnz() const { return col.size(); }

  // y = A x for dense x with an arbitrary number of columns.
  void multiply(const Tensor& x, Tensor& y) const {
    if (x.rows != n) throw DimensionError("CsrMatrix::multiply: row count mismatch");
    y = Tensor(n, x.cols);
    for (int i = 0; i < n; ++i) {
      double* yi = &y.data[static_cast<size_t>(i) * x.cols];
      for (uint32_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const double v = val[k];
        const double* xj = &x.data[static_cast<size_t>(col[k]) * x.cols];
        for (int c = 0; c < x.cols; ++c) yi[c] += v * xj[c];
      }
    }
  }

  // y += A^T x (scatter form); exact adjoint of multiply for any A.
  void multiply_transpose_accum(const Tensor& x, Tensor& y) const {
    if (x.rows != n || y.rows != n || y.cols != x.cols) throw DimensionError("CsrMatrix::multiply_transpose_accum");
    for (int i = 0; i < n; ++i) {
      const double* xi = &x.data[static_cast<size_t>(i) * x.cols];
      for (uint32_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const double v = val[k];
        double* yj = &y.data[static_cast<size_t>(col[k]) * x.cols];
        for (int c = 0; c < x.cols; ++c) yj[c] += v * xi[c];
      }
    }
  }
};

}  // namespace spherecast
