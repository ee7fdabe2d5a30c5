#pragma once

#include <string>
#include <vector>

#include "outlierlab/linalg.hpp"

namespace olab::secular {

/// Eigenvalues of Y + V J Ustar lying in the disks |lambda - theta| < delta,
/// computed without a dense eigendecomposition.
///
/// With M_k = Ustar Y^k V, every such eigenvalue is a zero of
///   det T(lambda),  T(lambda) = lambda I - sum_{k>=0} M_k J lambda^{-k},
/// valid while |lambda| exceeds the spectral radius of Y. The series is
/// truncated once its terms fall below `series_tol` on |lambda| = rho, where
/// rho = min |theta| - delta. Zeros are found by Newton's method with
/// deflation and their number in every disk is certified by the winding
/// number of det T on the disk boundary.
struct SecularOptions {
  double series_tol = 1e-15;
  int max_terms = 600;
  int newton_max_iter = 80;
  double newton_tol = 1e-13;
  int winding_max_points = 8192;
};

struct SecularResult {
  bool ok = false;
  std::string reason;                          // why the certificate failed
  std::vector<std::vector<cdouble>> roots;     // per theta, within the disk
  int terms = 0;                               // series length used
};

/// Disks must be pairwise disjoint and `expected[t]` is the number of zeros
/// sought in disk t. `ok` is false when the series does not converge, Newton
/// fails, or the winding count disagrees with the roots found; callers then
/// fall back to dense eigenvalues.
SecularResult outliers(const CMatrix& y, const CMatrix& v, const CMatrix& ustar,
                       const CMatrix& j, const std::vector<cdouble>& thetas,
                       const std::vector<int>& expected, double delta,
                       const SecularOptions& options = {});
SecularResult outliers(const RMatrix& y, const CMatrix& v, const CMatrix& ustar,
                       const CMatrix& j, const std::vector<cdouble>& thetas,
                       const std::vector<int>& expected, double delta,
                       const SecularOptions& options = {});

}  // namespace olab::secular
