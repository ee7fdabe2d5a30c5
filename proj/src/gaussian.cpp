#include "outlierlab/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "outlierlab/errors.hpp"

namespace olab {

RMatrix ComplexGaussianSampler::real_embedding(const CMatrix& cov, const CMatrix& pseudo) {
  const Index p = cov.rows();
  RMatrix s(2 * p, 2 * p);
  s.topLeftCorner(p, p) = 0.5 * (cov.real() + pseudo.real());
  s.bottomRightCorner(p, p) = 0.5 * (cov.real() - pseudo.real());
  s.topRightCorner(p, p) = 0.5 * (pseudo.imag() - cov.imag());
  s.bottomLeftCorner(p, p) = s.topRightCorner(p, p).transpose();
  return s;
}

ComplexGaussianSampler::ComplexGaussianSampler(const CMatrix& cov, const CMatrix& pseudo)
    : p_(cov.rows()) {
  if (cov.rows() != cov.cols() || pseudo.rows() != p_ || pseudo.cols() != p_) {
    throw ConfigError("ComplexGaussianSampler: covariance shapes disagree");
  }
  if (p_ == 0) return;
  linalg::require_finite(cov, "ComplexGaussianSampler covariance");
  linalg::require_finite(pseudo, "ComplexGaussianSampler pseudo-covariance");
  RMatrix s = real_embedding(cov, pseudo);
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(s);
  if (es.info() != Eigen::Success) throw NumericalError("ComplexGaussianSampler: eigensolver failed");
  const auto& ev = es.eigenvalues();
  min_eig_ = ev.minCoeff();
  const double tol = 1e-10 * std::max(1.0, ev.maxCoeff());
  if (min_eig_ < -tol) {
    throw NumericalError("ComplexGaussianSampler: covariance is not positive semidefinite "
                         "(min eigenvalue " + std::to_string(min_eig_) + ")");
  }
  factor_ = es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

CVector ComplexGaussianSampler::sample(ensembles::SeededRng& rng) const {
  CVector z(p_);
  if (p_ == 0) return z;
  Eigen::VectorXd e(2 * p_);
  for (Index i = 0; i < 2 * p_; ++i) e(i) = rng.normal();
  const Eigen::VectorXd y = factor_ * e;
  for (Index i = 0; i < p_; ++i) z(i) = {y(i), y(p_ + i)};
  return z;
}

}  // namespace olab
