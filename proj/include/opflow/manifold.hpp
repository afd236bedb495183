#pragma once

// Weighted linear algebra on orbital matrices. Every inner product here is
// the diagonal quadrature inner product <u, v> = sum_g w_g u_g v_g, and every
// "Gram" is the N_U x N_V matrix of such products between columns.

#include "opflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace opflow {

namespace detail {

inline void require_same_grid(const Orbitals &a, const Orbitals &b,
                              const char *op) {
  if (a.grid_size() != b.grid_size())
    throw ShapeError(std::string(op) + ": grid sizes differ (" +
                     std::to_string(a.grid_size()) + " vs " +
                     std::to_string(b.grid_size()) + ")");
  if (!a.quad.same_as(b.quad))
    throw ShapeError(std::string(op) + ": quadratures differ");
}

inline void require_same_shape(const Orbitals &a, const Orbitals &b,
                               const char *op) {
  require_same_grid(a, b, op);
  if (a.count() != b.count())
    throw ShapeError(std::string(op) + ": orbital counts differ (" +
                     std::to_string(a.count()) + " vs " +
                     std::to_string(b.count()) + ")");
}

} // namespace detail

/// <U^T V> in the quadrature inner product.
inline Mat gram(const Orbitals &U, const Orbitals &V) {
  detail::require_same_grid(U, V, "gram");
  return U.coeffs.transpose() * (U.quad.weights().asDiagonal() * V.coeffs);
}

/// |||X||| = sqrt(tr <X^T X>).
inline double trace_norm(const Orbitals &X) {
  const Vec &w = X.quad.weights();
  double acc = 0.0;
  for (Index j = 0; j < X.count(); ++j)
    acc += (w.array() * X.coeffs.col(j).array().square()).sum();
  return std::sqrt(acc);
}

/// ||<U^T U> - I||_F
inline double orth_error(const Orbitals &U) {
  return (gram(U, U) - Mat::Identity(U.count(), U.count())).norm();
}

/// Low-rank skew operator A_U = G U^T - U G^T, kept in factored form.
struct SkewGenerator {
  Orbitals gradient_factor; // G
  Orbitals base;            // U

  SkewGenerator(Orbitals g, Orbitals u)
      : gradient_factor(std::move(g)), base(std::move(u)) {
    detail::require_same_shape(gradient_factor, base, "skew generator");
  }
};

/// A_U V = G <U^T V> - U <G^T V>, O(N_g N^2).
inline Orbitals skew_apply(const SkewGenerator &A, const Orbitals &V) {
  const auto &G = A.gradient_factor;
  const auto &U = A.base;
  detail::require_same_grid(U, V, "skew_apply");
  return V.like(G.coeffs * gram(U, V) - U.coeffs * gram(G, V));
}

/// Extended Grassmann gradient G <U^T U> - U <G^T U>. On the Stiefel
/// manifold this reduces to the usual projected gradient.
inline Orbitals grassmann_gradient(const Orbitals &G, const Orbitals &U) {
  detail::require_same_shape(G, U, "grassmann_gradient");
  return U.like(G.coeffs * gram(U, U) - U.coeffs * gram(G, U));
}

inline constexpr Index kDenseCayleyLimit = 512;

/// (I + s A_U)^{-1} RHS by materializing the N_g x N_g operator. Test oracle.
inline Orbitals cayley_solve_dense(const SkewGenerator &A, double s,
                                   const Orbitals &rhs,
                                   Index max_grid = kDenseCayleyLimit) {
  const auto &G = A.gradient_factor;
  const auto &U = A.base;
  detail::require_same_grid(U, rhs, "cayley_solve_dense");
  const Index ng = U.grid_size();
  if (ng > max_grid)
    throw PreconditionError("cayley_solve_dense: grid size " +
                            std::to_string(ng) + " exceeds dense limit " +
                            std::to_string(max_grid));
  const auto W = U.quad.weights().asDiagonal();
  // Operator on coefficient vectors: v -> G (U^T W v) - U (G^T W v).
  Mat op = Mat::Identity(ng, ng);
  op.noalias() += s * (G.coeffs * (U.coeffs.transpose() * W));
  op.noalias() -= s * (U.coeffs * (G.coeffs.transpose() * W));
  Mat x = op.partialPivLu().solve(rhs.coeffs);
  if (!x.allFinite())
    throw std::runtime_error("cayley_solve_dense: dense solve failed");
  return rhs.like(std::move(x));
}

/// (I + s A_U)^{-1} RHS through the Sherman-Morrison-Woodbury identity.
///
/// With A_U = [G U] diag(I, -I) [U G]^T the inverse reduces to a 2N x 2N
/// solve with core
///
///   I + s [ <U^T G>   -<U^T U> ]
///         [ <G^T G>   -<G^T U> ]
///
/// and the result is RHS + s [-G  U] core^{-1} [<U^T RHS>; <G^T RHS>].
/// Cost O(N_g N^2) + O(N^3).
inline Orbitals cayley_solve_smw(const SkewGenerator &A, double s,
                                 const Orbitals &rhs) {
  const auto &G = A.gradient_factor;
  const auto &U = A.base;
  detail::require_same_grid(U, rhs, "cayley_solve_smw");
  if (s == 0.0) return rhs;

  const Index n = U.count();
  const Mat uu = gram(U, U);
  const Mat ug = gram(U, G);
  const Mat gg = gram(G, G);

  Mat core(2 * n, 2 * n);
  core.topLeftCorner(n, n) = ug;
  core.topRightCorner(n, n) = -uu;
  core.bottomLeftCorner(n, n) = gg;
  core.bottomRightCorner(n, n) = -ug.transpose();
  core *= s;
  core += Mat::Identity(2 * n, 2 * n);

  Mat proj(2 * n, rhs.count());
  proj.topRows(n) = gram(U, rhs);
  proj.bottomRows(n) = gram(G, rhs);

  Eigen::PartialPivLU<Mat> lu(core);
  const double rcond = lu.rcond();
  if (!(rcond > std::numeric_limits<double>::epsilon()))
    throw NumericalBreakdown(s, rcond,
                             "cayley_solve_smw: singular Woodbury core (s=" +
                                 std::to_string(s) +
                                 ", rcond=" + std::to_string(rcond) + ")");
  const Mat coef = lu.solve(proj);

  Mat out = rhs.coeffs;
  out.noalias() -= s * (G.coeffs * coef.topRows(n));
  out.noalias() += s * (U.coeffs * coef.bottomRows(n));
  if (!out.allFinite())
    throw NumericalBreakdown(s, rcond, "cayley_solve_smw: non-finite result");
  return rhs.like(std::move(out));
}

/// (lambda_min, lambda_max) of the symmetric part of a square matrix.
inline std::pair<double, double> spectrum_bounds(const Mat &m) {
  if (m.rows() != m.cols())
    throw ShapeError("spectrum_bounds: matrix is not square");
  if (m.rows() == 0) throw ShapeError("spectrum_bounds: empty matrix");
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const Vec &ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

inline constexpr double kManifoldTolerance = 1e-8;

/// Distance between the subspaces spanned by U and V:
/// min over orthogonal P of |||U - V P|||, with P the Procrustes polar factor
/// of <V^T U>.
inline double subspace_distance(const Orbitals &U, const Orbitals &V) {
  detail::require_same_shape(U, V, "subspace_distance");
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("subspace_distance: first argument is not "
                            "orthonormal");
  if (orth_error(V) > kManifoldTolerance)
    throw PreconditionError("subspace_distance: second argument is not "
                            "orthonormal");
  Eigen::JacobiSVD<Mat> svd(gram(V, U), Eigen::ComputeFullU |
                                            Eigen::ComputeFullV);
  const Mat p = svd.matrixU() * svd.matrixV().transpose();
  return trace_norm(U.like(U.coeffs - V.coeffs * p));
}

/// Weighted thin QR by modified Gram-Schmidt with one reorthogonalization
/// pass. R has a positive diagonal, so this is the QR retraction.
inline Orbitals weighted_qr(const Orbitals &U, double rank_tol = 1e-10) {
  const Vec &w = U.quad.weights();
  Mat q = U.coeffs;
  auto dot = [&w](const auto &a, const auto &b) {
    return (w.array() * a.array() * b.array()).sum();
  };
  for (Index j = 0; j < q.cols(); ++j) {
    const double original = std::sqrt(dot(q.col(j), q.col(j)));
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < j; ++k) q.col(j) -= dot(q.col(k), q.col(j)) * q.col(k);
    const double nrm = std::sqrt(dot(q.col(j), q.col(j)));
    if (!(nrm > rank_tol * std::max(original, 1e-300)) || nrm == 0.0)
      throw RankDeficiencyError(j, "orthonormalize: column " +
                                       std::to_string(j) +
                                       " is linearly dependent on earlier "
                                       "columns");
    q.col(j) /= nrm;
  }
  return U.like(std::move(q));
}

/// Weighted Gram-Schmidt followed by a sign convention: in every column the
/// entry of largest magnitude (first one on ties) is made positive.
inline Orbitals orthonormalize(const Orbitals &U) {
  Orbitals q = weighted_qr(U);
  for (Index j = 0; j < q.count(); ++j) {
    Index arg = 0;
    q.coeffs.col(j).cwiseAbs().maxCoeff(&arg);
    if (q.coeffs(arg, j) < 0.0) q.coeffs.col(j) *= -1.0;
  }
  return q;
}

} // namespace opflow
