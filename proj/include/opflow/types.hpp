#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace opflow {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when Gram-Schmidt meets a column that is (numerically) in the span
/// of the preceding ones.
struct RankDeficiencyError : std::runtime_error {
  RankDeficiencyError(Index col, const std::string &what)
      : std::runtime_error(what), column(col) {}
  Index column;
};

/// The 2N x 2N Woodbury core could not be factored.
struct NumericalBreakdown : std::runtime_error {
  NumericalBreakdown(double step, double rcond, const std::string &what)
      : std::runtime_error(what), s(step), condition_estimate(rcond) {}
  double s;
  double condition_estimate;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Diagonal quadrature weights defining the discrete L2 inner product.
/// Copies share the underlying weight vector.
class Quadrature {
public:
  Quadrature() : w_(std::make_shared<const Vec>()) {}

  explicit Quadrature(Vec weights) {
    if (weights.size() == 0)
      throw PreconditionError("quadrature: empty weight vector");
    for (Index g = 0; g < weights.size(); ++g) {
      if (!(weights[g] > 0.0))
        throw PreconditionError("quadrature: weight " + std::to_string(g) +
                                " is not positive");
    }
    w_ = std::make_shared<const Vec>(std::move(weights));
  }

  static Quadrature uniform(Index n, double h) {
    if (n <= 0) throw PreconditionError("quadrature: n must be positive");
    return Quadrature(Vec::Constant(n, h));
  }

  const Vec &weights() const { return *w_; }
  Index size() const { return w_->size(); }

  bool same_as(const Quadrature &other) const {
    return w_ == other.w_ ||
           (w_->size() == other.w_->size() && *w_ == *other.w_);
  }

private:
  std::shared_ptr<const Vec> w_;
};

/// Orbital coefficient matrix (N_g x N) on a quadrature grid.
struct Orbitals {
  Mat coeffs;
  Quadrature quad;

  Orbitals() = default;
  Orbitals(Mat c, Quadrature q) : coeffs(std::move(c)), quad(std::move(q)) {
    if (coeffs.rows() != quad.size())
      throw ShapeError("orbitals: coefficient rows (" +
                       std::to_string(coeffs.rows()) +
                       ") differ from quadrature size (" +
                       std::to_string(quad.size()) + ")");
  }

  Index grid_size() const { return coeffs.rows(); }
  Index count() const { return coeffs.cols(); }

  /// Same grid, new coefficients.
  Orbitals like(Mat c) const { return Orbitals(std::move(c), quad); }

  bool all_finite() const { return coeffs.allFinite(); }
};

} // namespace opflow
