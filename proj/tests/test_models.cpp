#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace opflow;
using opflow::testing::lih_like;
using opflow::testing::linear_spec;
using opflow::testing::random_matrix;
using opflow::testing::random_orthogonal;
using opflow::testing::random_stiefel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Independent assembly of -1/2 d^2/dx^2 + V_ext on the interior points.
Mat fd_hamiltonian(const KohnSham1DSpec &s) {
  const Index n = s.grid.n_points;
  const double h = s.grid.spacing;
  Mat a = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double x = s.grid.origin + (i + 1) * h;
    double v = 0.0;
    for (const auto &nuc : s.nuclei)
      v += -nuc.charge / std::sqrt((x - nuc.position) * (x - nuc.position) + s.soft_core * s.soft_core);
    a(i, i) = 1.0 / (h * h) + v;
    if (i > 0) a(i, i - 1) = -0.5 / (h * h);
    if (i + 1 < n) a(i, i + 1) = -0.5 / (h * h);
  }
  return a;
}

struct NaiveTerms {
  double kinetic = 0, external = 0, hartree = 0, xc = 0;
};

NaiveTerms naive_terms(const KohnSham1DSpec &s, const Mat &u) {
  const Index n = s.grid.n_points;
  const double h = s.grid.spacing;
  NaiveTerms t;
  std::vector<double> rho(n, 0.0), x(n);
  for (Index g = 0; g < n; ++g) {
    x[g] = s.grid.origin + (g + 1) * h;
    for (Index i = 0; i < u.cols(); ++i) rho[g] += 2.0 * u(g, i) * u(g, i);
  }
  for (Index i = 0; i < u.cols(); ++i)
    for (Index g = -1; g < n; ++g) {
      const double a = g >= 0 ? u(g, i) : 0.0;
      const double b = g + 1 < n ? u(g + 1, i) : 0.0;
      // (1/2) f_i h ((b - a)/h)^2 with f_i = 2
      t.kinetic += h * ((b - a) / h) * ((b - a) / h);
    }
  for (Index g = 0; g < n; ++g) {
    double v = 0.0;
    for (const auto &nuc : s.nuclei)
      v -= nuc.charge / std::sqrt((x[g] - nuc.position) * (x[g] - nuc.position) + s.soft_core * s.soft_core);
    t.external += h * v * rho[g];
  }
  for (Index g = 0; g < n; ++g)
    for (Index k = 0; k < n; ++k)
      t.hartree += 0.5 * s.hartree_scale * h * h * rho[g] * rho[k] /
                   std::sqrt((x[g] - x[k]) * (x[g] - x[k]) + s.hartree_soft_core * s.hartree_soft_core);
  for (Index g = 0; g < n; ++g) {
    const double r = std::max(rho[g], 1e-12);
    const double ex = -0.75 * std::pow(3.0 / std::numbers::pi, 1.0 / 3.0) * std::pow(r, 1.0 / 3.0);
    const double rs = std::pow(3.0 / (4.0 * std::numbers::pi * r), 1.0 / 3.0);
    const double ec = rs >= 1.0 ? -0.1423 / (1.0 + 1.0529 * std::sqrt(rs) + 0.3334 * rs)
                                : 0.0311 * std::log(rs) - 0.048 + 0.0020 * rs * std::log(rs) - 0.0116 * rs;
    t.xc += h * (ex + ec) * rho[g];
  }
  return t;
}

Orbitals random_point(const GridModel &m, std::mt19937_64 &rng) {
  // Near-normalized orbitals plus noise: realistic densities, off the manifold.
  const auto [ng, n] = m.dimension();
  Orbitals U = random_stiefel(m.quadrature(), n, rng);
  U.coeffs += 0.1 * random_matrix(ng, n, rng);
  return U;
}

double fd_relative_error(const GridModel &m, const Orbitals &U, const Orbitals &D) {
  const double t = 1e-5;
  const double ep = m.energy(U.like(U.coeffs + t * D.coeffs));
  const double em = m.energy(U.like(U.coeffs - t * D.coeffs));
  const double fd = (ep - em) / (2.0 * t);
  const double an = gram(m.gradient(U), D).trace();
  return std::abs(fd - an) / std::max(std::abs(an), 1e-12);
}

std::vector<GridModel> all_models() {
  std::vector<GridModel> out;
  out.push_back(quadratic_model(lih_like(64, 0.25)));
  out.push_back(hartree_model(lih_like(64, 0.25)));
  out.push_back(kohn_sham_model(lih_like(64, 0.25), false));
  out.push_back(kohn_sham_model(lih_like(64, 0.25), true));
  return out;
}

} // namespace

TEST_CASE("spec validation") {
  auto s = lih_like();
  s.grid.n_points = 4;
  REQUIRE_THROWS_AS(GridModel(s), PreconditionError);
  s = lih_like();
  s.nuclei.push_back({1.0, 1e3});
  REQUIRE_THROWS_AS(GridModel(s), PreconditionError);
  s = lih_like();
  s.soft_core = 0.0;
  REQUIRE_THROWS_AS(GridModel(s), PreconditionError);
  s = lih_like();
  s.nuclei[0].charge = -1.0;
  REQUIRE_THROWS_AS(GridModel(s), PreconditionError);
}

TEST_CASE("quadratic model at the dense ground state") {
  const auto spec = linear_spec(48, 3);
  const auto m = quadratic_model(spec);
  const double h = spec.grid.spacing;
  Eigen::SelfAdjointEigenSolver<Mat> es(fd_hamiltonian(spec));
  const Orbitals U(es.eigenvectors().leftCols(3) / std::sqrt(h), m.quadrature());
  const double expected = 2.0 * es.eigenvalues().head(3).sum();
  REQUIRE_THAT(m.energy(U), WithinAbs(expected, 1e-10));
  REQUIRE(grassmann_gradient_norm(m, U) < 1e-10);
}

TEST_CASE("quadratic energy is 2 sum <u, A u> and gradient is 4 A U") {
  std::mt19937_64 rng(31);
  const auto spec = linear_spec(40, 2);
  const auto m = quadratic_model(spec);
  const Mat a = fd_hamiltonian(spec);
  const Orbitals U(random_matrix(40, 2, rng), m.quadrature());
  const double h = spec.grid.spacing;
  const double direct = 2.0 * h * (U.coeffs.transpose() * a * U.coeffs).trace();
  REQUIRE_THAT(m.energy(U), WithinRel(direct, 1e-12));
  REQUIRE((m.gradient(U).coeffs - 4.0 * a * U.coeffs).norm() < 1e-10 * U.coeffs.norm() * a.norm());
  REQUIRE((m.operator_matrix() - a).norm() < 1e-12);
}

TEST_CASE("particle in a box") {
  KohnSham1DSpec spec;
  spec.grid = Grid1D{1023, 0.01, 0.0};
  spec.orbitals = 1;
  spec.hartree_scale = 0.0;
  spec.xc = XcMode::none;
  const auto m = quadratic_model(spec);
  const double length = spec.grid.length();
  Mat c(spec.grid.n_points, 1);
  for (Index g = 0; g < spec.grid.n_points; ++g)
    c(g, 0) = std::sin(std::numbers::pi * spec.grid.x(g) / length);
  const auto U = orthonormalize(Orbitals(c, m.quadrature()));
  const double exact = 2.0 * 0.5 * std::pow(std::numbers::pi / length, 2);
  // Three-point stencil error: relative (pi h / L)^2 / 12.
  const double fd_error = std::pow(std::numbers::pi * spec.grid.spacing / length, 2) / 12.0;
  REQUIRE(std::abs(m.energy(U) - exact) / exact <= 1.05 * fd_error);
  REQUIRE(std::abs(m.energy(U) - exact) / exact > 0.5 * fd_error);
}

TEST_CASE("quadratic energy is homogeneous of degree two") {
  std::mt19937_64 rng(32);
  const auto m = quadratic_model(linear_spec(32, 2));
  const Orbitals U(random_matrix(32, 2, rng), m.quadrature());
  for (double c : {0.5, 2.0, -3.0})
    REQUIRE_THAT(m.energy(U.like(c * U.coeffs)), WithinRel(c * c * m.energy(U), 1e-13));
}

TEST_CASE("Hartree potential") {
  const auto spec = lih_like(16, 0.3);
  const double h = spec.grid.spacing;
  const double b = spec.hartree_soft_core;
  REQUIRE(hartree_potential_1d(Vec::Zero(16), spec).isZero(0.0));

  Vec delta = Vec::Zero(16);
  delta[5] = 1.0 / h;
  const Vec vd = hartree_potential_1d(delta, spec);
  for (Index g = 0; g < 16; ++g) {
    const double d = spec.grid.x(g) - spec.grid.x(5);
    REQUIRE_THAT(vd[g], WithinRel(1.0 / std::sqrt(d * d + b * b), 1e-14));
  }

  const Vec uniform = Vec::Constant(16, 0.7);
  const Vec vu = hartree_potential_1d(uniform, spec);
  for (Index g = 0; g < 16; ++g) {
    double acc = 0.0;
    for (Index k = 0; k < 16; ++k) {
      const double d = (g - k) * h;
      acc += h * 0.7 / std::sqrt(d * d + b * b);
    }
    REQUIRE_THAT(vu[g], WithinRel(acc, 1e-13));
  }
}

TEST_CASE("Kohn-Sham terms match naive loops") {
  std::mt19937_64 rng(33);
  const auto spec = lih_like(24, 0.4);
  const auto m = kohn_sham_model(spec, true);
  for (int trial = 0; trial < 5; ++trial) {
    const auto U = random_point(m, rng);
    const auto t = m.energy_terms(U);
    const auto n = naive_terms(spec, U.coeffs);
    REQUIRE_THAT(t.kinetic, WithinRel(n.kinetic, 1e-12));
    REQUIRE_THAT(t.external, WithinRel(n.external, 1e-12));
    REQUIRE_THAT(t.hartree, WithinRel(n.hartree, 1e-12));
    REQUIRE_THAT(t.xc, WithinRel(n.xc, 1e-12));
  }
}

TEST_CASE("term isolation reproduces simpler models bit for bit") {
  std::mt19937_64 rng(34);
  auto spec = lih_like(40, 0.3);
  const auto quad = quadratic_model(spec);
  const auto U = random_point(quad, rng);

  auto off = spec;
  off.hartree_scale = 0.0;
  off.xc = XcMode::none;
  REQUIRE(GridModel(off).energy(U) == quad.energy(U));
  REQUIRE(GridModel(off).gradient(U).coeffs == quad.gradient(U).coeffs);

  auto h0 = spec;
  h0.hartree_scale = 0.0;
  REQUIRE(hartree_model(h0).energy(U) == quad.energy(U));

  // No nuclei and every potential off: pure kinetic term.
  auto bare = spec;
  bare.nuclei.clear();
  const auto ks_bare = kohn_sham_model(bare);
  auto bare_ks_off = bare;
  bare_ks_off.hartree_scale = 0.0;
  bare_ks_off.xc = XcMode::none;
  REQUIRE(GridModel(bare_ks_off).energy(U) == GridModel(bare_ks_off).energy_terms(U).kinetic);
  REQUIRE(GridModel(bare_ks_off).energy(U) == quadratic_model(bare).energy(U));
  REQUIRE(ks_bare.energy_terms(U).kinetic == quadratic_model(bare).energy(U));
}

TEST_CASE("kinetic gradient of the full model with potentials off") {
  std::mt19937_64 rng(35);
  auto spec = lih_like(30, 0.3);
  spec.nuclei.clear();
  spec.hartree_scale = 0.0;
  spec.xc = XcMode::none;
  const GridModel m(spec);
  const auto U = random_point(m, rng);
  const Mat lap_part = fd_hamiltonian(spec) * U.coeffs; // -1/2 Lap U
  REQUIRE((m.gradient(U).coeffs - 4.0 * lap_part).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(36);
  for (const auto &m : all_models()) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto U = random_point(m, rng);
      const auto [ng, n] = m.dimension();
      const Orbitals D(random_matrix(ng, n, rng), m.quadrature());
      REQUIRE(fd_relative_error(m, U, D) <= 1e-6);
    }
  }
}

TEST_CASE("gradient Gram matrix is symmetric everywhere") {
  std::mt19937_64 rng(37);
  for (const auto &m : all_models()) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto [ng, n] = m.dimension();
      const Orbitals U(random_matrix(ng, n, rng), m.quadrature());
      const Mat gu = gram(m.gradient(U), U);
      REQUIRE((gu - gu.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, gu.norm()));
    }
  }
}

TEST_CASE("energy and gradient are invariant under orthogonal mixing") {
  std::mt19937_64 rng(38);
  for (const auto &m : all_models()) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto U = random_point(m, rng);
      const Mat p = random_orthogonal(U.count(), rng);
      const auto UP = U.like(U.coeffs * p);
      REQUIRE_THAT(m.energy(UP), WithinAbs(m.energy(U), 1e-11));
      REQUIRE((m.gradient(UP).coeffs - m.gradient(U).coeffs * p).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("density is nonnegative") {
  std::mt19937_64 rng(39);
  const auto q = Quadrature::uniform(50, 0.1);
  const Orbitals U(random_matrix(50, 3, rng), q);
  REQUIRE((density(U).array() >= 0.0).all());
}

TEST_CASE("shape mismatch is reported") {
  const auto m = kohn_sham_model(lih_like(32, 0.3));
  const Orbitals U(Mat::Zero(32, 3), m.quadrature());
  REQUIRE_THROWS_AS(m.energy(U), ShapeError);
  const Orbitals V(Mat::Zero(32, 2), Quadrature::uniform(32, 0.3001));
  REQUIRE_THROWS_AS(m.gradient(V), ShapeError);
}
