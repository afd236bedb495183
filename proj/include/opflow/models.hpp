#pragma once

// Discretized energies on a uniform 1-D grid with zero Dirichlet boundaries.
//
// All three models share one code path (GridModel) and differ only in which
// terms are switched on:
//
//   quadratic        kinetic + external
//   hartree          kinetic + external + Hartree
//   kohn_sham_1d     kinetic + external + Hartree + LDA exchange(-correlation)
//
// Occupations are fixed at 2, so rho = 2 sum_i u_i^2 and the gradient in the
// quadrature inner product is 4 (-1/2 Lap + V_ext + V_H + v_xc) u_i.

#include "opflow/lda.hpp"
#include "opflow/manifold.hpp"
#include "opflow/types.hpp"

#include <cmath>
#include <concepts>
#include <string>
#include <utility>
#include <vector>

namespace opflow {

template <class M>
concept EnergyModel = requires(const M &m, const Orbitals &U) {
  { m.energy(U) } -> std::convertible_to<double>;
  { m.gradient(U) } -> std::same_as<Orbitals>;
  { m.quadrature() } -> std::convertible_to<Quadrature>;
  { m.dimension() } -> std::convertible_to<std::pair<Index, Index>>;
};

/// Interior points x_g = origin + (g + 1) h, g = 0..n-1; the ghost points at
/// origin and origin + (n + 1) h carry the Dirichlet zeros.
struct Grid1D {
  Index n_points = 0;
  double spacing = 0.0;
  double origin = 0.0;

  static Grid1D centered(Index n, double h) {
    return Grid1D{n, h, -0.5 * static_cast<double>(n + 1) * h};
  }

  double x(Index g) const { return origin + static_cast<double>(g + 1) * spacing; }
  double length() const { return static_cast<double>(n_points + 1) * spacing; }
  double upper() const { return origin + length(); }

  void validate() const {
    if (n_points < 8)
      throw PreconditionError("grid: need at least 8 points, got " +
                              std::to_string(n_points));
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw PreconditionError("grid: spacing must be positive");
    if (!std::isfinite(origin)) throw PreconditionError("grid: origin must be finite");
  }

  Quadrature quadrature() const { return Quadrature::uniform(n_points, spacing); }
};

struct Nucleus {
  double charge = 1.0;
  double position = 0.0;
};

enum class XcMode { none, exchange_only, exchange_correlation };

struct KohnSham1DSpec {
  Grid1D grid;
  Index orbitals = 1;
  std::vector<Nucleus> nuclei;
  double soft_core = 1.0;         // a in -Z / sqrt((x - R)^2 + a^2)
  double hartree_soft_core = 1.0; // b in 1 / sqrt((x - x')^2 + b^2)
  double hartree_scale = 1.0;
  XcMode xc = XcMode::exchange_correlation;

  void validate() const {
    grid.validate();
    if (orbitals < 1) throw PreconditionError("model: need at least one orbital");
    if (grid.n_points < orbitals)
      throw PreconditionError("model: more orbitals than grid points");
    if (!(soft_core > 0.0)) throw PreconditionError("model: soft_core must be > 0");
    if (!(hartree_soft_core > 0.0))
      throw PreconditionError("model: hartree_soft_core must be > 0");
    if (!(hartree_scale >= 0.0))
      throw PreconditionError("model: hartree_scale must be >= 0");
    for (std::size_t i = 0; i < nuclei.size(); ++i) {
      const auto &n = nuclei[i];
      if (!(n.charge > 0.0))
        throw PreconditionError("model: nucleus " + std::to_string(i) +
                                " has non-positive charge");
      if (!(n.position > grid.origin && n.position < grid.upper()))
        throw PreconditionError("model: nucleus " + std::to_string(i) +
                                " lies outside the domain");
    }
  }
};

/// rho = 2 sum_i u_i^2, pointwise.
inline Vec density(const Orbitals &U) {
  return 2.0 * U.coeffs.rowwise().squaredNorm();
}

inline Vec external_potential(const KohnSham1DSpec &spec) {
  const auto &grid = spec.grid;
  Vec v = Vec::Zero(grid.n_points);
  for (Index g = 0; g < grid.n_points; ++g) {
    const double x = grid.x(g);
    for (const auto &n : spec.nuclei) {
      const double d = x - n.position;
      v[g] -= n.charge / std::sqrt(d * d + spec.soft_core * spec.soft_core);
    }
  }
  return v;
}

inline Mat hartree_kernel(const Grid1D &grid, double b) {
  const Index n = grid.n_points;
  Mat k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = grid.x(i) - grid.x(j);
      k(i, j) = 1.0 / std::sqrt(d * d + b * b);
    }
  return k;
}

/// V_H(x_g) = h sum_g' rho(x_g') / sqrt((x_g - x_g')^2 + b^2).
inline Vec hartree_potential_1d(const Vec &rho, const KohnSham1DSpec &spec) {
  if (rho.size() != spec.grid.n_points)
    throw ShapeError("hartree_potential_1d: density length mismatch");
  return spec.grid.spacing * (hartree_kernel(spec.grid, spec.hartree_soft_core) * rho);
}

struct EnergyTerms {
  double kinetic = 0.0;
  double external = 0.0;
  double hartree = 0.0;
  double xc = 0.0;
  double total() const { return kinetic + external + hartree + xc; }
};

class GridModel {
public:
  explicit GridModel(KohnSham1DSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    quad_ = spec_.grid.quadrature();
    vext_ = external_potential(spec_);
    if (spec_.hartree_scale != 0.0)
      kernel_ = hartree_kernel(spec_.grid, spec_.hartree_soft_core);
  }

  const KohnSham1DSpec &spec() const { return spec_; }
  const Quadrature &quadrature() const { return quad_; }
  std::pair<Index, Index> dimension() const {
    return {spec_.grid.n_points, spec_.orbitals};
  }
  const Vec &external() const { return vext_; }
  bool is_linear() const {
    return spec_.hartree_scale == 0.0 && spec_.xc == XcMode::none;
  }

  EnergyTerms energy_terms(const Orbitals &U) const {
    check(U);
    const double h = spec_.grid.spacing;
    EnergyTerms t;
    // h * sum over edges of (forward difference)^2, times f_i / 2 = 1.
    for (Index j = 0; j < U.count(); ++j) {
      const auto u = U.coeffs.col(j);
      const Index n = u.size();
      double acc = u[0] * u[0] + u[n - 1] * u[n - 1];
      for (Index g = 0; g + 1 < n; ++g) {
        const double d = u[g + 1] - u[g];
        acc += d * d;
      }
      t.kinetic += acc / h;
    }
    const Vec rho = density(U);
    t.external = h * vext_.dot(rho);
    if (spec_.hartree_scale != 0.0) {
      const Vec vh = h * (kernel_ * rho);
      t.hartree = 0.5 * spec_.hartree_scale * h * rho.dot(vh);
    }
    if (spec_.xc != XcMode::none) {
      double acc = 0.0;
      for (Index g = 0; g < rho.size(); ++g) acc += xc_point(rho[g]).energy_density * rho[g];
      t.xc = h * acc;
    }
    return t;
  }

  double energy(const Orbitals &U) const {
    const double e = energy_terms(U).total();
    if (!std::isfinite(e)) throw ModelError("model: non-finite energy");
    return e;
  }

  /// Effective potential V_ext + V_H(rho) + v_xc(rho) on the grid.
  Vec effective_potential(const Vec &rho) const {
    Vec v = vext_;
    if (spec_.hartree_scale != 0.0)
      v += spec_.hartree_scale * spec_.grid.spacing * (kernel_ * rho);
    if (spec_.xc != XcMode::none)
      for (Index g = 0; g < rho.size(); ++g) v[g] += xc_point(rho[g]).potential;
    return v;
  }

  Orbitals gradient(const Orbitals &U) const {
    check(U);
    const double h = spec_.grid.spacing;
    const Vec v = effective_potential(density(U));
    Mat out(U.grid_size(), U.count());
    const double c = 0.5 / (h * h);
    for (Index j = 0; j < U.count(); ++j) {
      const auto u = U.coeffs.col(j);
      const Index n = u.size();
      for (Index g = 0; g < n; ++g) {
        const double left = g > 0 ? u[g - 1] : 0.0;
        const double right = g + 1 < n ? u[g + 1] : 0.0;
        out(g, j) = 4.0 * (c * (2.0 * u[g] - left - right) + v[g] * u[g]);
      }
    }
    if (!out.allFinite()) throw ModelError("model: non-finite gradient");
    return U.like(std::move(out));
  }

  /// Dense -1/2 Lap + V_ext. Self-adjoint in the (uniform) quadrature inner
  /// product.
  Mat operator_matrix() const {
    const Index n = spec_.grid.n_points;
    const double c = 0.5 / (spec_.grid.spacing * spec_.grid.spacing);
    Mat a = Mat::Zero(n, n);
    for (Index g = 0; g < n; ++g) {
      a(g, g) = 2.0 * c + vext_[g];
      if (g > 0) a(g, g - 1) = -c;
      if (g + 1 < n) a(g, g + 1) = -c;
    }
    return a;
  }

private:
  lda::XcPoint xc_point(double rho) const {
    auto x = lda::exchange(rho);
    if (spec_.xc == XcMode::exchange_correlation) {
      const auto c = lda::correlation(rho);
      x.energy_density += c.energy_density;
      x.potential += c.potential;
    }
    return x;
  }

  void check(const Orbitals &U) const {
    if (U.grid_size() != spec_.grid.n_points || U.count() != spec_.orbitals)
      throw ShapeError("model: orbitals are " + std::to_string(U.grid_size()) +
                       "x" + std::to_string(U.count()) + ", model expects " +
                       std::to_string(spec_.grid.n_points) + "x" +
                       std::to_string(spec_.orbitals));
    if (!U.quad.same_as(quad_)) throw ShapeError("model: quadrature mismatch");
  }

  KohnSham1DSpec spec_;
  Quadrature quad_;
  Vec vext_;
  Mat kernel_;
};

static_assert(EnergyModel<GridModel>);

/// Linear eigenvalue model: E(U) = 2 sum_i <u_i, A u_i>, grad = 4 A U.
inline GridModel quadratic_model(KohnSham1DSpec spec) {
  spec.hartree_scale = 0.0;
  spec.xc = XcMode::none;
  return GridModel(std::move(spec));
}

/// Quadratic model plus the softened Hartree term; no exchange-correlation.
inline GridModel hartree_model(KohnSham1DSpec spec) {
  spec.xc = XcMode::none;
  return GridModel(std::move(spec));
}

inline GridModel kohn_sham_model(KohnSham1DSpec spec, bool correlation = true) {
  spec.xc = correlation ? XcMode::exchange_correlation : XcMode::exchange_only;
  return GridModel(std::move(spec));
}

} // namespace opflow
