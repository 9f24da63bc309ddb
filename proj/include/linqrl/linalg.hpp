#pragma once

#include <Eigen/Dense>

namespace linqrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Feature vectors may exceed unit norm by at most this much.
inline constexpr double kNormSlack = 1e-12;

// Regularized Gram matrix Λ = I + Σ φφᵀ together with a maintained inverse.
//
// The inverse is updated by Sherman–Morrison on every rank-one addition and
// recomputed from Λ by Cholesky every `refactor_period` updates, which keeps
// ‖Λ·Λ⁻¹ − I‖_max ≤ 1e-8 for the update counts this library runs at.
// Λ starts at the identity, so its smallest eigenvalue never drops below 1.
class CovarianceState {
 public:
  static constexpr int kDefaultRefactorPeriod = 256;

  explicit CovarianceState(int dim, int refactor_period = kDefaultRefactorPeriod);

  int dim() const noexcept { return dim_; }
  long long update_count() const noexcept { return update_count_; }
  int refactor_period() const noexcept { return refactor_period_; }
  const Matrix& lambda() const noexcept { return lambda_; }
  const Matrix& lambda_inv() const noexcept { return lambda_inv_; }

  // Λ ← Λ + φφᵀ. Requires ‖φ‖₂ ≤ 1. A zero φ leaves both matrices untouched
  // but still counts as an update.
  void rank_one_update(const Vector& phi);

  // φᵀΛ⁻¹φ, clamped to [0, ‖φ‖²].
  double quad_form(const Vector& phi) const;

  // Λ⁻¹·rhs using the maintained inverse.
  Vector solve_apply(const Vector& rhs) const;

  // Λ⁻¹·rhs followed by one step of iterative refinement with the residual
  // accumulated in extended precision. Use this when Λ·x must reproduce rhs
  // tightly after many updates.
  Vector solve(const Vector& rhs) const;

  // Recompute Λ⁻¹ from Λ by Cholesky. Throws NumericalIntegrityError if Λ
  // is no longer positive definite.
  void refactorize();

  // ‖Λ·Λ⁻¹ − I‖_max.
  double inverse_residual() const;

 private:
  void check_dim(const Vector& v, const char* what) const;

  int dim_;
  int refactor_period_;
  long long update_count_ = 0;
  Matrix lambda_;
  Matrix lambda_inv_;
  Vector work_;
};

}  // namespace linqrl
