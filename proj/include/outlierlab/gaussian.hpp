#pragma once

#include "outlierlab/ensembles.hpp"
#include "outlierlab/linalg.hpp"

namespace olab {

/// Centred complex Gaussian vector z with covariance E z z^H and pseudo-
/// covariance E z z^T, sampled through its 2p-dimensional real embedding.
class ComplexGaussianSampler {
 public:
  ComplexGaussianSampler() = default;
  /// Throws NumericalError when the real embedding has an eigenvalue below
  /// -1e-10 (relative to max(1, largest eigenvalue)); smaller negative
  /// eigenvalues are clamped to zero.
  ComplexGaussianSampler(const CMatrix& covariance, const CMatrix& pseudo_covariance);

  CVector sample(ensembles::SeededRng& rng) const;
  Index dim() const { return p_; }
  /// Smallest eigenvalue of the real embedding before clamping.
  double min_eigenvalue() const { return min_eig_; }

  /// Real 2p x 2p covariance of (Re z, Im z).
  static RMatrix real_embedding(const CMatrix& covariance, const CMatrix& pseudo_covariance);

 private:
  Index p_ = 0;
  RMatrix factor_;
  double min_eig_ = 0.0;
};

}  // namespace olab
