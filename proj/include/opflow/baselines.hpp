#pragma once

// Reference methods: QR-retraction projected gradient descent and the dense
// eigensolver ground state of the linear model.

#include "opflow/flow.hpp"
#include "opflow/manifold.hpp"
#include "opflow/models.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace opflow {

struct RetractionStepOutcome {
  Orbitals U_next;
  Orbitals U_tilde; // U + dt D, before retraction
  std::pair<double, double> tilde_spectrum{1.0, 1.0};
  double energy_after = 0.0;
  double direction_gram_norm = 0.0; // ||<D^T D>||_2
};

/// U_tilde = U + dt D with D = -grad_G E(U) projected onto the tangent space,
/// then U_next = weighted QR of U_tilde.
template <EnergyModel M>
RetractionStepOutcome retraction_step(const M &model, const Orbitals &U,
                                      double dt) {
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("retraction_step: U is not orthonormal");
  RetractionStepOutcome out;
  Mat d = -grassmann_gradient(model.gradient(U), U).coeffs;
  d -= U.coeffs * gram(U, U.like(d));
  const Orbitals D = U.like(std::move(d));
  out.direction_gram_norm = spectrum_bounds(gram(D, D)).second;
  out.U_tilde = U.like(U.coeffs + dt * D.coeffs);
  out.tilde_spectrum = spectrum_bounds(gram(out.U_tilde, out.U_tilde));
  out.U_next = dt == 0.0 ? U : weighted_qr(out.U_tilde);
  out.energy_after = model.energy(out.U_next);
  return out;
}

/// Projected gradient descent with QR retraction under the same outer loop
/// and dt policy as run_flow. The half_spec columns of the trace carry the
/// pre-retraction spectrum.
template <EnergyModel M>
FlowResult run_retraction(const M &model, const Orbitals &U0,
                          const FlowConfig &cfg) {
  return detail::run_outer(
      model, U0, cfg, [&](const Orbitals &U, double dt, double energy) {
        StepOutcome s;
        s.energy_before = energy;
        try {
          auto r = retraction_step(model, U, dt);
          s.U_next = std::move(r.U_next);
          s.U_half = std::move(r.U_tilde);
          s.half_spectrum = r.tilde_spectrum;
          s.energy_after = r.energy_after;
        } catch (const RankDeficiencyError &e) {
          s.U_next = U;
          s.energy_after = energy;
          s.status = StepStatus::breakdown;
          s.diagnostic = e.what();
          return s;
        }
        s.accepted = energy_not_increased(energy, s.energy_after);
        if (!s.accepted) s.status = StepStatus::energy_increase;
        return s;
      });
}

struct GroundSpace {
  Vec eigenvalues;
  Orbitals eigenvectors;
};

inline constexpr Index kDenseEigenLimit = 2048;

/// Lowest N eigenpairs of the linear operator -1/2 Lap + V_ext, orthonormal
/// in the quadrature inner product.
inline GroundSpace dense_ground_space(const GridModel &model, Index n) {
  const auto [ng, norb] = model.dimension();
  (void)norb;
  if (ng > kDenseEigenLimit)
    throw PreconditionError("dense_ground_space: grid exceeds dense limit");
  if (n < 1 || n > ng)
    throw PreconditionError("dense_ground_space: invalid eigenpair count");
  const Vec &w = model.quadrature().weights();
  const Vec sqw = w.cwiseSqrt();
  // A is self-adjoint in the W inner product: W A symmetric. Solve the
  // symmetric problem for W^{1/2} A W^{-1/2}.
  Mat a = model.operator_matrix();
  const Mat b = sqw.asDiagonal() * a * sqw.cwiseInverse().asDiagonal();
  const Mat sym = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense_ground_space: eigensolver failed");
  Mat vecs = sqw.cwiseInverse().asDiagonal() * es.eigenvectors().leftCols(n);
  Orbitals v(std::move(vecs), model.quadrature());
  for (Index j = 0; j < n; ++j) {
    Index arg = 0;
    v.coeffs.col(j).cwiseAbs().maxCoeff(&arg);
    if (v.coeffs(arg, j) < 0.0) v.coeffs.col(j) *= -1.0;
  }
  return {es.eigenvalues().head(n), std::move(v)};
}

} // namespace opflow
