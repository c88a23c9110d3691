#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

#include "ccgl/error.hpp"

namespace ccgl {

/// Dense row-major matrix; all arithmetic is carried out in double.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
/// Compressed-row sparse matrix.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError("non-finite value in " + what);
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(what + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

/// Numerically stable row-wise softmax.
inline Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

/// Drops explicit zeros from a dense matrix and returns it in CSR form.
inline SparseMatrix to_sparse(const Matrix& m) {
  SparseMatrix s(m.rows(), m.cols());
  std::vector<Eigen::Triplet<double, int>> trips;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), m(i, j));
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

}  // namespace ccgl
