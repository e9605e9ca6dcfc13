#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "slf/errors.hpp"

namespace slf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  return llt.info() == Eigen::Success;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Eigenpairs of a symmetric matrix. values ascend; column i of vectors is
/// the unit eigenvector of values(i).
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi rotations. Eigenvector signs are normalized so that the
/// largest-magnitude entry of each column is positive (first such entry on
/// ties), which makes the result reproducible for simple spectra.
inline SymmetricEigen jacobi_eigen(const Matrix& input, int max_sweeps = 100) {
  if (input.rows() != input.cols()) {
    throw DimensionError("jacobi_eigen: matrix is not square");
  }
  const Eigen::Index n = input.rows();
  Matrix a = symmetrize(input);
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);

  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) > 1e-12 * scale) {
      throw ConvergenceError("jacobi_eigen: no convergence within sweep limit");
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Vector col = v.col(src);
    Eigen::Index big = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(col(i)) > std::abs(col(big)) + 1e-14) big = i;
    if (col(big) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

inline double min_eigenvalue(const Matrix& symmetric) {
  return jacobi_eigen(symmetric).values.minCoeff();
}

/// Largest real part over the spectrum of a general square matrix.
inline double spectral_abscissa(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("spectral_abscissa: eigenvalue solver failed");
  }
  return solver.eigenvalues().real().maxCoeff();
}

}  // namespace slf
