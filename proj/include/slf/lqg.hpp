#pragma once

// State-feedback LQ design with additive noise: Riccati solution, closed
// loop, eigenbasis of P and the weighted-abs candidate sum_i pbar_i |z_i|.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "slf/candidates.hpp"
#include "slf/checker.hpp"
#include "slf/errors.hpp"
#include "slf/generator.hpp"
#include "slf/linalg.hpp"
#include "slf/parallel.hpp"
#include "slf/sde_model.hpp"

namespace slf {

struct LqgProblem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix G;  // n x d, columns G_k

  int n() const { return static_cast<int>(A.rows()); }

  void validate() const {
    const auto n = A.rows();
    if (n < 1 || A.cols() != n) throw DimensionError("lqg: A must be square and non-empty");
    if (B.rows() != n || B.cols() < 1) throw DimensionError("lqg: B must have n rows");
    if (Q.rows() != n || Q.cols() != n) throw DimensionError("lqg: Q must be n x n");
    if (R.rows() != B.cols() || R.cols() != B.cols()) throw DimensionError("lqg: R must be m x m");
    if (G.size() != 0 && G.rows() != n) throw DimensionError("lqg: G must have n rows");
    auto symmetric = [](const Matrix& m) {
      return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
    };
    if (!symmetric(Q) || !is_positive_definite(Q))
      throw InvalidArgument("lqg: Q must be symmetric positive definite");
    if (!symmetric(R) || !is_positive_definite(R))
      throw InvalidArgument("lqg: R must be symmetric positive definite");
  }
};

struct RiccatiSolution {
  Matrix P;
  double residual = 0.0;  // Frobenius norm of A'P + PA - PBR^-1B'P + Q
  int iterations = 0;
  Matrix K;               // R^-1 B' P
  Matrix A_closed;        // A - B K
  double closed_loop_abscissa = 0.0;
};

namespace detail {

inline Matrix gain_from(const LqgProblem& prob, const Matrix& P) {
  return prob.R.llt().solve(prob.B.transpose() * P);
}

inline double care_residual(const LqgProblem& prob, const Matrix& P) {
  const Matrix S = prob.B * prob.R.llt().solve(prob.B.transpose());
  return (prob.A.transpose() * P + P * prob.A - P * S * P + prob.Q).norm();
}

// Solves A'X + XA = -C by the Kronecker-vectorized linear system.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(A'X) = (I kron A') vec X, vec(XA) = (A' kron I) vec X
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  Eigen::PartialPivLU<Matrix> lu(K);
  const Eigen::VectorXd x = lu.solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return symmetrize(X);
}

// Bass's construction: with beta above the spectral radius of A,
// (A + beta I) Z + Z (A + beta I)' = 2 B B' gives K = B' Z^-1 stabilizing
// whenever Z is nonsingular.
inline bool bass_gain(const LqgProblem& prob, Matrix& K) {
  const Eigen::Index n = prob.A.rows();
  const double beta = prob.A.norm() + 1.0;
  const Matrix shifted = prob.A + beta * Matrix::Identity(n, n);
  // solve_lyapunov solves M'X + XM = -C; use M = -(A + beta I)'
  const Matrix Z = solve_lyapunov(-shifted.transpose(), 2.0 * prob.B * prob.B.transpose());
  Eigen::FullPivLU<Matrix> lu(Z);
  if (!lu.isInvertible()) return false;
  K = prob.B.transpose() * lu.inverse();
  return spectral_abscissa(prob.A - prob.B * K) < 0.0;
}

// Stable invariant subspace of the Hamiltonian matrix.
inline bool hamiltonian_gain(const LqgProblem& prob, Matrix& K) {
  const Eigen::Index n = prob.A.rows();
  const Matrix S = prob.B * prob.R.llt().solve(prob.B.transpose());
  Matrix H(2 * n, 2 * n);
  H << prob.A, -S, -prob.Q, -prob.A.transpose();
  Eigen::EigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) return false;
  Eigen::MatrixXcd U(2 * n, n);
  Eigen::Index cols = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < -1e-12) {
      if (cols == n) return false;
      U.col(cols++) = es.eigenvectors().col(i);
    }
  }
  if (cols != n) return false;
  const Eigen::MatrixXcd U1 = U.topRows(n);
  const Eigen::MatrixXcd U2 = U.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(U1);
  if (!lu.isInvertible()) return false;
  const Matrix P = symmetrize((U2 * lu.inverse()).real());
  K = gain_from(prob, P);
  return spectral_abscissa(prob.A - prob.B * K) < 0.0;
}

}  // namespace detail

/// Newton-Kleinman iteration for A'P + PA - PBR^-1B'P + Q = 0.
inline RiccatiSolution solve_care(const LqgProblem& prob) {
  prob.validate();
  const Eigen::Index n = prob.A.rows();
  if (n > 20) throw InvalidArgument("solve_care: n above 20 is not supported");
  Matrix K = Matrix::Zero(prob.B.cols(), n);
  if (!(spectral_abscissa(prob.A) < 0.0)) {
    if (!detail::bass_gain(prob, K) && !detail::hamiltonian_gain(prob, K))
      throw InvalidArgument("solve_care: no stabilizing initial gain found (problem not stabilizable)");
  }

  RiccatiSolution sol;
  Matrix P = Matrix::Zero(n, n);
  constexpr int kMaxIterations = 100;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Matrix Ak = prob.A - prob.B * K;
    const Matrix C = prob.Q + K.transpose() * prob.R * K;
    const Matrix next = detail::solve_lyapunov(Ak, C);
    if (!next.allFinite()) throw ConvergenceError("solve_care: iteration diverged");
    const double change = (next - P).norm();
    P = next;
    K = detail::gain_from(prob, P);
    sol.iterations = it;
    const double res = detail::care_residual(prob, P);
    if (res < 1e-10 || change <= 1e-14 * (1.0 + P.norm())) break;
  }
  sol.P = P;
  sol.residual = detail::care_residual(prob, P);
  sol.K = detail::gain_from(prob, P);
  sol.A_closed = prob.A - prob.B * sol.K;
  sol.closed_loop_abscissa = spectral_abscissa(sol.A_closed);
  if (!(sol.residual < 1e-8 * (1.0 + P.norm())))
    throw ConvergenceError("solve_care: residual " + std::to_string(sol.residual) + " did not converge");
  if (!(sol.closed_loop_abscissa < 0.0))
    throw ConvergenceError("solve_care: closed loop is not Hurwitz");
  return sol;
}

/// dx = (A - B R^-1 B' P) x dt + sum_k G_k dw_k.
inline SdeSystem closed_loop(const LqgProblem& prob, const RiccatiSolution& sol) {
  const Matrix G = prob.G.size() == 0 ? Matrix(prob.A.rows(), 0) : prob.G;
  return make_linear_system(sol.A_closed, G, "lqg_closed_loop");
}

struct SpectralTransform {
  Matrix T;
  Vector pbar;
};

inline SpectralTransform spectral_transform(const RiccatiSolution& sol) {
  const SymmetricEigen eig = jacobi_eigen(sol.P);
  SpectralTransform tr{eig.vectors, eig.values};
  if (!(tr.pbar.minCoeff() > 0.0)) throw InvalidArgument("spectral_transform: P is not positive definite");
  const Eigen::Index n = tr.T.rows();
  if (!((tr.T.transpose() * tr.T - Matrix::Identity(n, n)).norm() < 1e-10))
    throw ConvergenceError("spectral_transform: eigenvectors are not orthonormal");
  if (!((sol.P * tr.T - tr.T * tr.pbar.asDiagonal()).norm() < 1e-8 * (1.0 + sol.P.norm())))
    throw ConvergenceError("spectral_transform: eigen residual too large");
  return tr;
}

/// z = T' x: dz = T' A_LQ T z dt + sum_k T' G_k dw_k.
inline SdeSystem transformed_system(const LqgProblem& prob, const RiccatiSolution& sol,
                                    const SpectralTransform& tr) {
  const Matrix D = tr.T.transpose() * sol.P * tr.T;
  const Matrix target = tr.pbar.asDiagonal();
  if (!((D - target).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + sol.P.norm())))
    throw ConvergenceError("transformed_system: T'PT is not diagonal");
  const Matrix Abar = tr.T.transpose() * sol.A_closed * tr.T;
  const Matrix Gbar = prob.G.size() == 0 ? Matrix(prob.A.rows(), 0) : Matrix(tr.T.transpose() * prob.G);
  return make_linear_system(Abar, Gbar, "lqg_transformed");
}

inline double vlq_value(const RiccatiSolution& sol, const Vector& x) { return x.dot(sol.P * x); }

/// L(x'Px) on the closed loop: -x'(Q + PBR^-1B'P)x + sum_k G_k'PG_k.
inline double vlq_generator(const LqgProblem& prob, const RiccatiSolution& sol, const Vector& x) {
  const SdeSystem sys = closed_loop(prob, sol);
  return apply_generator(sys, x, 2.0 * sol.P * x, 2.0 * sol.P).value;
}

struct LqgGridOptions {
  double half_width = 2.0;
  std::size_t lattice_budget = 20000;
  int random_points = 1000;
  std::uint64_t seed = 20240601;
  double identity_tol = 1e-8;
  double tol = 1e-9;
};

struct LqgCertificate {
  LqgProblem problem;
  RiccatiSolution riccati;
  SpectralTransform transform;
  WeightedAbsSum candidate;
  Matrix M;
  double m_min_eigenvalue = 0.0;
  bool m_positive_definite = false;

  std::size_t smooth_points = 0;
  double max_identity_error = 0.0;
  Vector worst_identity_point;
  bool identity_holds = false;
  double max_generator = -std::numeric_limits<double>::infinity();  // max L Vbar on the smooth locus
  bool generator_negative = false;

  std::size_t kink_points = 0;
  double min_kink_margin = std::numeric_limits<double>::infinity();
  bool kink_ok = false;

  double fcip_c = 0.0;
  double fcip_g = 0.0;
  bool fcip_ok = false;

  bool ascip_eligible = false;  // no noise: almost sure equilibrium
  bool nas = false;
  std::string grid_description;
};

inline Vector sqrt_sign(const Vector& z) {
  Vector y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) y(i) = detail::sgn(z(i)) * std::sqrt(std::abs(z(i)));
  return y;
}

/// Checks M > 0, the closed form L Vbar = -1/2 y'My with its sign on the
/// smooth locus, the witness inequality at kinks and the quadratic
/// forward-completeness bound. NAS requires all four.
inline LqgCertificate certify_nas(const LqgProblem& prob, const LqgGridOptions& opt = {}) {
  LqgCertificate cert;
  cert.problem = prob;
  cert.riccati = solve_care(prob);
  cert.transform = spectral_transform(cert.riccati);
  const int n = prob.n();
  const Matrix& P = cert.riccati.P;
  const Matrix& T = cert.transform.T;
  const Matrix S = prob.B * prob.R.llt().solve(prob.B.transpose());
  cert.M = symmetrize(T.transpose() * (prob.Q + P * S * P) * T);
  cert.m_min_eigenvalue = min_eigenvalue(cert.M);
  cert.m_positive_definite = is_positive_definite(cert.M);
  cert.candidate.weights = to_std(cert.transform.pbar);
  const Candidate vbar = cert.candidate;
  const SdeSystem zsys = transformed_system(prob, cert.riccati, cert.transform);

  int per_axis = static_cast<int>(std::floor(std::pow(static_cast<double>(opt.lattice_budget), 1.0 / n)));
  per_axis = std::max(per_axis, 3);
  if (per_axis % 2 == 0) --per_axis;
  GridSpec spec;
  spec.half_width = opt.half_width;
  spec.points_per_axis = per_axis;
  Grid grid = make_grid(n, spec);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < opt.random_points; ++i) {
    Vector z(n);
    for (int k = 0; k < n; ++k) z(k) = normal(rng);
    grid.points.push_back(z);
  }
  cert.grid_description = grid.description + " plus " + std::to_string(opt.random_points) +
                          " normal samples";

  struct PointResult {
    bool smooth = false;
    double generator = 0.0;
    double identity_error = 0.0;
    double kink_margin = 0.0;
  };
  std::vector<PointResult> results(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    const Vector& z = grid.points[i];
    PointResult r;
    r.smooth = smooth_locus(vbar, z);
    if (r.smooth) {
      if (z.norm() == 0.0) return;
      const SemijetElement e = jet_at(vbar, z);
      r.generator = apply_generator(zsys, z, e.p, e.X).value;
      const Vector y = sqrt_sign(z);
      r.identity_error = std::abs(r.generator + 0.5 * y.dot(cert.M * y));
    } else {
      const SemijetElement w = canonical_witness(vbar, z);
      r.kink_margin = -apply_generator(zsys, z, w.p, w.X).value;
    }
    results[i] = r;
  });

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.smooth) {
      if (grid.points[i].norm() == 0.0) continue;
      ++cert.smooth_points;
      cert.max_generator = std::max(cert.max_generator, r.generator);
      if (r.identity_error > cert.max_identity_error) {
        cert.max_identity_error = r.identity_error;
        cert.worst_identity_point = grid.points[i];
      }
    } else {
      ++cert.kink_points;
      cert.min_kink_margin = std::min(cert.min_kink_margin, r.kink_margin);
    }
  }
  cert.identity_holds = cert.max_identity_error < opt.identity_tol;
  cert.generator_negative = cert.max_generator < 0.0;
  cert.kink_ok = cert.min_kink_margin >= -opt.tol;

  cert.fcip_c = 0.0;
  cert.fcip_g = prob.G.size() == 0 ? 0.0 : (prob.G.transpose() * P * prob.G).trace();
  cert.fcip_ok = is_positive_definite(symmetrize(prob.Q + P * S * P));
  cert.ascip_eligible = prob.G.size() == 0 || prob.G.cwiseAbs().maxCoeff() == 0.0;
  cert.nas = cert.m_positive_definite && cert.identity_holds && cert.generator_negative &&
             cert.kink_ok && cert.fcip_ok;
  return cert;
}

}  // namespace slf
