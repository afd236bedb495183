#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace opflow;
using opflow::testing::random_orbitals;
using opflow::testing::random_orthogonal;
using opflow::testing::random_stiefel;
using Catch::Matchers::WithinAbs;

namespace {

Mat naive_gram(const Orbitals &U, const Orbitals &V) {
  const Vec &w = U.quad.weights();
  Mat out = Mat::Zero(U.count(), V.count());
  for (Index i = 0; i < U.count(); ++i)
    for (Index j = 0; j < V.count(); ++j)
      for (Index g = 0; g < U.grid_size(); ++g)
        out(i, j) += w[g] * U.coeffs(g, i) * V.coeffs(g, j);
  return out;
}

/// Weighted-space matrix of v -> G <U^T v> - U <G^T v>.
Mat materialized_skew(const Orbitals &G, const Orbitals &U) {
  const Index ng = U.grid_size();
  const Vec &w = U.quad.weights();
  Mat a = Mat::Zero(ng, ng);
  for (Index r = 0; r < ng; ++r)
    for (Index c = 0; c < ng; ++c)
      for (Index i = 0; i < U.count(); ++i)
        a(r, c) += (G.coeffs(r, i) * U.coeffs(c, i) - U.coeffs(r, i) * G.coeffs(c, i)) * w[c];
  return a;
}

Quadrature random_quadrature(Index n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  Vec w(n);
  for (Index g = 0; g < n; ++g) w[g] = u(rng);
  return Quadrature(w);
}

double relative_difference(const Mat &a, const Mat &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace

TEST_CASE("quadrature rejects non-positive weights") {
  Vec w(3);
  w << 1.0, 0.0, 2.0;
  REQUIRE_THROWS_AS(Quadrature(w), PreconditionError);
  REQUIRE_THROWS_AS(Orbitals(Mat::Zero(4, 1), Quadrature::uniform(3, 0.1)), ShapeError);
}

TEST_CASE("gram of scaled unit vectors is the identity") {
  const double h = 0.3;
  const auto q = Quadrature::uniform(5, h);
  Mat c = Mat::Zero(5, 2);
  c(0, 0) = 1.0 / std::sqrt(h);
  c(1, 1) = 1.0 / std::sqrt(h);
  const Orbitals U(c, q);
  REQUIRE(gram(U, U).isApprox(Mat::Identity(2, 2), 1e-15));
}

TEST_CASE("gram is bilinear and matches brute-force summation") {
  std::mt19937_64 rng(11);
  const auto q = Quadrature::uniform(8, 0.7);
  const auto U = random_orbitals(q, 3, rng);
  const auto V = random_orbitals(q, 3, rng);
  REQUIRE((gram(U, V) - gram(V, U).transpose()).norm() < 1e-14);

  const auto q2 = Quadrature::uniform(6, 0.5);
  const auto A = random_orbitals(q2, 2, rng);
  const auto B = random_orbitals(q2, 2, rng);
  REQUIRE((gram(A, B) - naive_gram(A, B)).norm() < 1e-14);

  const auto W = random_orbitals(Quadrature::uniform(7, 0.5), 2, rng);
  REQUIRE_THROWS_AS(gram(A, W), ShapeError);
}

TEST_CASE("skew_apply vanishes for G = U and matches the dense operator") {
  std::mt19937_64 rng(12);
  const auto q = random_quadrature(5, rng);
  const auto U = random_orbitals(q, 1, rng);
  const auto V = random_orbitals(q, 1, rng);
  REQUIRE(trace_norm(skew_apply(SkewGenerator(U, U), V)) == 0.0);

  const auto G = random_orbitals(q, 1, rng);
  const Mat dense = materialized_skew(G, U) * V.coeffs;
  REQUIRE((skew_apply(SkewGenerator(G, U), V).coeffs - dense).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("skew_apply is skew in the weighted inner product") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_quadrature(12, rng);
    const SkewGenerator a(random_orbitals(q, 3, rng), random_orbitals(q, 3, rng));
    const auto V = random_orbitals(q, 2, rng);
    const auto W = random_orbitals(q, 2, rng);
    const Mat lhs = gram(W, skew_apply(a, V));
    const Mat rhs = gram(V, skew_apply(a, W)).transpose();
    REQUIRE((lhs + rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("grassmann_gradient vanishes at eigenvector critical points") {
  std::mt19937_64 rng(14);
  const Index ng = 10;
  const Mat r = opflow::testing::random_matrix(ng, ng, rng);
  const Mat s = 0.5 * (r + r.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  // Unit weights make the matrix self-adjoint in the quadrature product.
  const auto q = Quadrature::uniform(ng, 1.0);
  const Orbitals U(es.eigenvectors().leftCols(3), q);
  const Orbitals G(2.0 * s * U.coeffs, q);
  REQUIRE(trace_norm(grassmann_gradient(G, U)) < 1e-12);
}

TEST_CASE("grassmann_gradient matches naive evaluation and skew_apply") {
  std::mt19937_64 rng(15);
  const auto q = random_quadrature(7, rng);
  const auto U = random_orbitals(q, 2, rng);
  const auto G = random_orbitals(q, 2, rng);
  const Mat uu = naive_gram(U, U);
  const Mat gu = naive_gram(G, U);
  Mat expected = Mat::Zero(7, 2);
  for (Index g = 0; g < 7; ++g)
    for (Index j = 0; j < 2; ++j)
      for (Index k = 0; k < 2; ++k)
        expected(g, j) += G.coeffs(g, k) * uu(k, j) - U.coeffs(g, k) * gu(k, j);
  const auto got = grassmann_gradient(G, U);
  REQUIRE((got.coeffs - expected).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE((got.coeffs - skew_apply(SkewGenerator(G, U), U).coeffs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("trace of <U^T grad_G> vanishes when <G^T U> is symmetric") {
  std::mt19937_64 rng(16);
  const auto q = Quadrature::uniform(9, 0.4);
  const auto U = random_orbitals(q, 3, rng);
  // Symmetrize <G^T U> by projecting out its skew part.
  auto G = random_orbitals(q, 3, rng);
  const Mat gu = gram(G, U);
  const Mat skew = 0.5 * (gu - gu.transpose());
  G.coeffs -= U.coeffs * gram(U, U).inverse() * skew.transpose();
  REQUIRE((gram(G, U) - gram(G, U).transpose()).norm() < 1e-12);
  REQUIRE(std::abs(gram(U, grassmann_gradient(G, U)).trace()) < 1e-12);
}

TEST_CASE("trace of symmetric times skew is zero") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Mat a = opflow::testing::random_matrix(5, 5, rng);
    Mat b = opflow::testing::random_matrix(5, 5, rng);
    const Mat s = a + a.transpose();
    const Mat k = b - b.transpose();
    REQUIRE(std::abs((s * k).trace()) < 1e-13);
  }
}

TEST_CASE("dense Cayley solve") {
  std::mt19937_64 rng(18);
  const auto q = random_quadrature(20, rng);
  const auto U = random_orbitals(q, 2, rng);
  const auto G = random_orbitals(q, 2, rng);
  const auto rhs = random_orbitals(q, 2, rng);

  SECTION("s = 0 is the identity") {
    REQUIRE(cayley_solve_dense(SkewGenerator(G, U), 0.0, rhs).coeffs == rhs.coeffs);
  }
  SECTION("zero generator is the identity") {
    const auto x = cayley_solve_dense(SkewGenerator(U, U), 0.7, rhs);
    REQUIRE((x.coeffs - rhs.coeffs).norm() < 1e-14);
  }
  SECTION("residual of (I + sA) X = RHS") {
    const SkewGenerator a(G, U);
    const auto x = cayley_solve_dense(a, 0.3, rhs);
    const Mat resid = x.coeffs + 0.3 * skew_apply(a, x).coeffs - rhs.coeffs;
    REQUIRE(resid.norm() / rhs.coeffs.norm() <= 1e-10);
  }
  SECTION("grid above the dense limit is refused") {
    const auto big = Quadrature::uniform(kDenseCayleyLimit + 1, 0.1);
    const auto ub = random_orbitals(big, 1, rng);
    REQUIRE_THROWS_AS(cayley_solve_dense(SkewGenerator(ub, ub), 0.1, ub), PreconditionError);
  }
}

TEST_CASE("Woodbury Cayley solve agrees with the dense solve") {
  std::mt19937_64 rng(19);
  const auto q = Quadrature::uniform(200, 0.05);
  const auto U = random_orbitals(q, 6, rng);
  const auto G = random_orbitals(q, 6, rng);
  const auto rhs = random_orbitals(q, 6, rng);
  const SkewGenerator a(G, U);
  REQUIRE(cayley_solve_smw(a, 0.0, rhs).coeffs == rhs.coeffs);
  const auto x = cayley_solve_smw(a, 0.1, rhs);
  const auto y = cayley_solve_dense(a, 0.1, rhs);
  REQUIRE(relative_difference(x.coeffs, y.coeffs) <= 1e-10);
}

TEST_CASE("Woodbury solve property sweep on non-uniform weights") {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> ngd(8, 60), nd(1, 4);
  std::uniform_real_distribution<double> sd(-3.0, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = nd(rng);
    const auto q = random_quadrature(std::max(ngd(rng), 2 * n), rng);
    const SkewGenerator a(random_orbitals(q, n, rng), random_orbitals(q, n, rng));
    const double s = sd(rng);
    const auto U = random_stiefel(q, n, rng);

    const auto smw = cayley_solve_smw(a, s, U);
    const auto dense = cayley_solve_dense(a, s, U);
    REQUIRE(relative_difference(smw.coeffs, dense.coeffs) <= 1e-10);

    // Contraction: spectrum of <Ubar^T Ubar> inside [0, 1].
    const auto [lo, hi] = spectrum_bounds(gram(smw, smw));
    REQUIRE(lo >= -1e-12);
    REQUIRE(hi <= 1.0 + 1e-12);

    // Reflection 2 Ubar - U returns to the manifold.
    REQUIRE(orth_error(U.like(2.0 * smw.coeffs - U.coeffs)) <= 1e-10);
  }
}

TEST_CASE("spectrum_bounds") {
  REQUIRE(spectrum_bounds(Mat::Identity(3, 3)) == std::pair{1.0, 1.0});
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 0.25;
  d(1, 1) = 0.81;
  const auto [lo, hi] = spectrum_bounds(d);
  REQUIRE_THAT(lo, WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(hi, WithinAbs(0.81, 1e-15));
  REQUIRE_THROWS_AS(spectrum_bounds(Mat::Zero(2, 3)), ShapeError);
}

TEST_CASE("subspace distance is zero inside one equivalence class") {
  std::mt19937_64 rng(21);
  const auto q = Quadrature::uniform(30, 0.2);
  const auto U = random_stiefel(q, 3, rng);
  const auto V = U.like(U.coeffs * random_orthogonal(3, rng));
  REQUIRE(subspace_distance(U, V) < 1e-12);
}

TEST_CASE("subspace distance of orthogonal lines is sqrt 2") {
  const double h = 0.5;
  const auto q = Quadrature::uniform(4, h);
  Mat a = Mat::Zero(4, 1), b = Mat::Zero(4, 1);
  a(0, 0) = 1.0 / std::sqrt(h);
  b(1, 0) = 1.0 / std::sqrt(h);
  REQUIRE_THAT(subspace_distance(Orbitals(a, q), Orbitals(b, q)),
               WithinAbs(std::sqrt(2.0), 1e-14));
}

TEST_CASE("subspace distance matches a grid search over O(2)") {
  std::mt19937_64 rng(22);
  const auto q = Quadrature::uniform(12, 0.3);
  const auto U = random_stiefel(q, 2, rng);
  const auto V = random_stiefel(q, 2, rng);
  double best = std::numeric_limits<double>::infinity();
  const int steps = 200000;
  for (int reflect = 0; reflect < 2; ++reflect) {
    for (int k = 0; k < steps; ++k) {
      const double t = 2.0 * std::numbers::pi * k / steps;
      Mat p(2, 2);
      p << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
      if (reflect) p.col(1) *= -1.0;
      best = std::min(best, trace_norm(U.like(U.coeffs - V.coeffs * p)));
    }
  }
  REQUIRE_THAT(subspace_distance(U, V), WithinAbs(best, 1e-7));
  REQUIRE(subspace_distance(U, V) <= best + 1e-14);
}

TEST_CASE("subspace distance rejects inputs off the manifold") {
  std::mt19937_64 rng(23);
  const auto q = Quadrature::uniform(10, 0.3);
  const auto U = random_stiefel(q, 2, rng);
  const auto V = random_orbitals(q, 2, rng);
  REQUIRE_THROWS_AS(subspace_distance(U, V), PreconditionError);
}

TEST_CASE("orthonormalize") {
  std::mt19937_64 rng(24);
  const double h = 0.25;
  const auto q = Quadrature::uniform(6, h);

  SECTION("orthonormal input is returned with the sign convention") {
    const auto U = random_stiefel(q, 3, rng);
    const auto again = orthonormalize(U);
    REQUIRE((again.coeffs - U.coeffs).cwiseAbs().maxCoeff() < 1e-14);
    Mat flipped = U.coeffs;
    flipped.col(1) *= -1.0;
    REQUIRE((orthonormalize(U.like(flipped)).coeffs - U.coeffs).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("e1 and e1 + e2 become weighted e1, e2") {
    Mat c = Mat::Zero(6, 2);
    c(0, 0) = 1.0;
    c(0, 1) = 1.0;
    c(1, 1) = 1.0;
    const auto Q = orthonormalize(Orbitals(c, q));
    REQUIRE((gram(Q, Q) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE_THAT(Q.coeffs(0, 0), WithinAbs(1.0 / std::sqrt(h), 1e-14));
    REQUIRE_THAT(Q.coeffs(1, 1), WithinAbs(1.0 / std::sqrt(h), 1e-14));
    REQUIRE_THAT(Q.coeffs(0, 1), WithinAbs(0.0, 1e-14));
  }
  SECTION("random input on random weights") {
    const auto qr = random_quadrature(40, rng);
    const auto U = random_orbitals(qr, 5, rng);
    const auto Q = orthonormalize(U);
    REQUIRE(orth_error(Q) < 1e-12);
    // Span preserved: U = Q <Q^T U>.
    REQUIRE((Q.coeffs * gram(Q, U) - U.coeffs).norm() < 1e-12 * U.coeffs.norm());
  }
  SECTION("duplicated columns are rank deficient") {
    Mat c = opflow::testing::random_matrix(6, 3, rng);
    c.col(2) = c.col(0);
    try {
      orthonormalize(Orbitals(c, q));
      FAIL("expected RankDeficiencyError");
    } catch (const RankDeficiencyError &e) {
      REQUIRE(e.column == 2);
    }
  }
}
