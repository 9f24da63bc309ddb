#include "linqrl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "linqrl/errors.hpp"

namespace linqrl {

CovarianceState::CovarianceState(int dim, int refactor_period)
    : dim_(dim), refactor_period_(refactor_period) {
  if (dim <= 0) throw UsageError("CovarianceState: dimension must be positive");
  if (refactor_period <= 0) throw UsageError("CovarianceState: refactor_period must be positive");
  lambda_ = Matrix::Identity(dim, dim);
  lambda_inv_ = Matrix::Identity(dim, dim);
  work_ = Vector::Zero(dim);
}

void CovarianceState::check_dim(const Vector& v, const char* what) const {
  if (v.size() != dim_) {
    throw UsageError(std::string(what) + ": dimension mismatch (got " + std::to_string(v.size()) +
                     ", expected " + std::to_string(dim_) + ")");
  }
}

void CovarianceState::rank_one_update(const Vector& phi) {
  check_dim(phi, "rank_one_update");
  const double norm_sq = phi.squaredNorm();
  if (!(norm_sq <= (1.0 + kNormSlack) * (1.0 + kNormSlack))) {
    throw UsageError("rank_one_update: feature norm exceeds 1");
  }
  ++update_count_;
  if (norm_sq == 0.0) return;

  const int d = dim_;
  // work = Λ⁻¹φ; Λ⁻¹ is symmetric so φᵀΛ⁻¹ = workᵀ.
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += lambda_inv_(i, j) * phi[j];
    work_[i] = acc;
  }
  double denom = 1.0;
  for (int i = 0; i < d; ++i) denom += phi[i] * work_[i];
  const double scale = 1.0 / denom;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      lambda_(i, j) += phi[i] * phi[j];
      lambda_inv_(i, j) -= work_[i] * work_[j] * scale;
    }
  }
  if (update_count_ % refactor_period_ == 0) refactorize();
}

double CovarianceState::quad_form(const Vector& phi) const {
  check_dim(phi, "quad_form");
  const int d = dim_;
  double q = 0.0;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) row += lambda_inv_(i, j) * phi[j];
    q += phi[i] * row;
  }
  return std::clamp(q, 0.0, phi.squaredNorm());
}

Vector CovarianceState::solve_apply(const Vector& rhs) const {
  check_dim(rhs, "solve_apply");
  return lambda_inv_ * rhs;
}

Vector CovarianceState::solve(const Vector& rhs) const {
  Vector x = solve_apply(rhs);
  const int d = dim_;
  Vector residual(d);
  for (int i = 0; i < d; ++i) {
    long double acc = rhs[i];
    for (int j = 0; j < d; ++j) acc -= static_cast<long double>(lambda_(i, j)) * x[j];
    residual[i] = static_cast<double>(acc);
  }
  x.noalias() += lambda_inv_ * residual;
  return x;
}

void CovarianceState::refactorize() {
  Eigen::LLT<Matrix> llt(lambda_);
  if (llt.info() != Eigen::Success) {
    throw NumericalIntegrityError("CovarianceState: covariance is no longer positive definite");
  }
  lambda_inv_ = llt.solve(Matrix::Identity(dim_, dim_));
  lambda_inv_ = 0.5 * (lambda_inv_ + lambda_inv_.transpose()).eval();
}

double CovarianceState::inverse_residual() const {
  return (lambda_ * lambda_inv_ - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
}

}  // namespace linqrl
