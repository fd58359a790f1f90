#include "coinvest/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coinvest/errors.hpp"
#include "coinvest/hash.hpp"

namespace coinvest::linalg {

namespace {

void validate(const Matrix& c) {
  if (c.rows() != c.cols()) throw ArgumentError("eigendecomposition needs a square matrix");
  double scale = 0.0;
  for (double v : c.data()) {
    if (!std::isfinite(v)) throw ArgumentError("eigendecomposition of non-finite matrix");
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = i + 1; j < c.cols(); ++j) {
      if (std::abs(c(i, j) - c(j, i)) > 1e-12 * std::max(1.0, scale)) {
        throw ArgumentError("eigendecomposition of non-symmetric matrix");
      }
    }
  }
}

// Rotates rows/columns p and q of the symmetric work matrix `a` and rows p
// and q of the transposed eigenvector accumulator `vt`.
void rotate(Matrix& a, Matrix& vt, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
  double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  if (theta < 0.0) t = -t;
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = a(q, p) = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == p || r == q) continue;
    const double arp = a(r, p);
    const double arq = a(r, q);
    a(r, p) = a(p, r) = c * arp - s * arq;
    a(r, q) = a(q, r) = s * arp + c * arq;
  }
  auto vp = vt.row(p);
  auto vq = vt.row(q);
  for (std::size_t r = 0; r < n; ++r) {
    const double x = vp[r];
    const double y = vq[r];
    vp[r] = c * x - s * y;
    vq[r] = s * x + c * y;
  }
}

double infinity_norm(const Matrix& c) {
  double norm = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double row = 0.0;
    for (double v : c.row(i)) row += std::abs(v);
    norm = std::max(norm, row);
  }
  return norm;
}

}  // namespace

EigenDecomposition symmetric_eigen(const Matrix& c) {
  validate(c);
  const std::size_t n = c.rows();
  Matrix a = c;
  // Symmetrize exactly so rotations act on one consistent matrix.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (c(i, j) + c(j, i));
  }
  Matrix vt = Matrix::identity(n);

  EigenDecomposition d;
  bool converged = false;
  for (std::size_t sweep = 1; sweep <= kMaxJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    }
    if (off == 0.0) {
      d.sweeps = sweep - 1;
      converged = true;
      break;
    }
    // Early sweeps skip small elements; later sweeps zero elements that are
    // negligible against both diagonal entries.
    const double threshold = sweep < 4 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = 100.0 * std::abs(a(p, q));
        if (sweep > 4 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;
        } else if (std::abs(a(p, q)) > threshold && a(p, q) != 0.0) {
          rotate(a, vt, p, q);
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    }
    throw NumericalError("Jacobi iteration did not converge in " +
                             std::to_string(kMaxJacobiSweeps) + " sweeps",
                         off);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  d.values.resize(n);
  d.vectors = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    d.values[r] = a(order[r], order[r]);
    auto src = vt.row(order[r]);
    auto dst = d.vectors.row(r);
    double sum = std::accumulate(src.begin(), src.end(), 0.0);
    double sign = 1.0;
    if (std::abs(sum) > 1e-12) {
      sign = sum < 0.0 ? -1.0 : 1.0;
    } else {
      for (double v : src) {
        if (std::abs(v) > 1e-12) {
          sign = v < 0.0 ? -1.0 : 1.0;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) dst[j] = sign * src[j];
    if (d.values[r] < 0.0) ++d.negative_count;
  }
  d.fingerprint = sha256_hex(c.data());
  d.residual = eigen_residual(c, d);
  if (!(d.residual <= 1e-10 * std::max(1.0, infinity_norm(c)))) {
    throw NumericalError("eigen residual too large", d.residual);
  }
  return d;
}

double eigen_residual(const Matrix& c, const EigenDecomposition& d) {
  const std::size_t n = c.rows();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    auto v = d.vectors.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      double cv = 0.0;
      for (std::size_t j = 0; j < n; ++j) cv += c(i, j) * v[j];
      worst = std::max(worst, std::abs(cv - d.values[k] * v[i]));
    }
  }
  return worst;
}

double orthonormality_error(const EigenDecomposition& d) {
  const std::size_t n = d.vectors.rows();
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d.vectors.cols(); ++j) dot += d.vectors(a, j) * d.vectors(b, j);
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace coinvest::linalg
