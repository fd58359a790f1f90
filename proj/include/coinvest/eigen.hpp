#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coinvest/matrix.hpp"

namespace coinvest::linalg {

/// Spectrum of a real symmetric matrix.
struct EigenDecomposition {
  std::vector<double> values;  // descending
  /// Row a is the unit eigenvector for values[a]: vectors(a, j) = v_aj.
  /// Each row is oriented so its component sum is >= 0 (for a zero sum, the
  /// first non-negligible component is positive).
  Matrix vectors;
  std::string fingerprint;  // SHA-256 of the input matrix
  std::size_t negative_count = 0;
  std::size_t sweeps = 0;
  double residual = 0.0;  // max_a ||C v_a - lambda_a v_a||_inf
};

inline constexpr std::size_t kMaxJacobiSweeps = 100;

/// Cyclic Jacobi rotations. ArgumentError for non-square, non-symmetric or
/// non-finite input; NumericalError (carrying the residual) when the sweeps
/// do not converge or the final residual exceeds 1e-10 * max(1, ||C||_inf).
EigenDecomposition symmetric_eigen(const Matrix& c);

/// max_a ||C v_a - lambda_a v_a||_inf
double eigen_residual(const Matrix& c, const EigenDecomposition& d);

/// ||V V^T - I||_inf (entrywise max)
double orthonormality_error(const EigenDecomposition& d);

}  // namespace coinvest::linalg
