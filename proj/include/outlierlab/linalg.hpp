#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace olab {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace linalg {

/// Numerical tolerances shared by every module.
struct Tolerances {
  double tol_eig = 1e-8;               // eigen-residual, relative to ||m||
  double pivot_condition_cap = 1e12;   // Schur-complement pivot blocks
  double resolvent_residual = 1e-10;   // relative residual of resolvent solves
  double singular_rcond = 1e-14;       // LU reciprocal condition floor
};

inline constexpr Tolerances kTolerances{};

/// Eigenvalues with algebraic multiplicity, in solver order.
using Spectrum = std::vector<cdouble>;

/// All eigenvalues of a square matrix (LAPACK zgeev, no vectors).
/// Throws ConfigError for non-square or non-finite input and NumericalError
/// if the QR iteration fails to converge.
Spectrum eigenvalues(const CMatrix& m);
Spectrum eigenvalues(const RMatrix& m);

/// D - C A^{-1} B where A = m[eliminate, eliminate], D = m[keep, keep],
/// B = m[eliminate, keep], C = m[keep, eliminate]; `keep` is the complement
/// of `eliminate` in increasing order. Throws NumericalError when the
/// eliminated block has condition number above the pivot cap.
CMatrix schur_complement(const CMatrix& m, std::span<const Index> eliminate);

/// k x k upper bidiagonal block with theta on the diagonal.
CMatrix jordan_block(cdouble theta, int k);

double spectral_radius(const CMatrix& m);

/// Largest singular value.
double operator_norm(const CMatrix& m);

/// Smallest singular value.
double min_singular_value(const CMatrix& m);

/// 2-norm condition number; +inf for exactly singular input.
double condition_number(const CMatrix& m);

/// LU factorisation (partial pivoting) of (m - lambda I), reusable across
/// right-hand sides. Real input with a real shift is factored in real
/// arithmetic.
class ShiftedLu {
 public:
  ShiftedLu(const CMatrix& m, cdouble lambda);
  ShiftedLu(const RMatrix& m, cdouble lambda);

  /// Solves (m - lambda I) W = rhs column by column.
  CMatrix solve(const CMatrix& rhs) const;

  Index dim() const { return n_; }
  double rcond() const { return rcond_; }

 private:
  struct RealFactor {
    RMatrix lu;
    std::vector<int> piv;
  };
  struct ComplexFactor {
    CMatrix lu;
    std::vector<int> piv;
  };

  Index n_ = 0;
  double rcond_ = 0.0;
  std::variant<RealFactor, ComplexFactor> factor_;
};

/// Solves (m - lambda I) w = v by LU with partial pivoting.
CVector resolvent_apply(const CMatrix& m, cdouble lambda, const CVector& v);

struct MultisetMatch {
  bool matched = false;        // sizes agree and every pair within tolerance
  double max_distance = 0.0;   // over accepted pairs
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (index in a, index in b)
};

/// Greedy nearest-neighbour pairing of two multisets of complex numbers.
/// Candidate pairs are taken in order of increasing distance, ties broken by
/// lexicographic (Re, Im) order of the a-element, then of the b-element.
MultisetMatch match_multisets(std::span<const cdouble> a, std::span<const cdouble> b,
                              double tol);

/// Lexicographic (Re, Im) ordering used wherever a deterministic order is needed.
bool lex_less(cdouble a, cdouble b);

void require_finite(const CMatrix& m, const char* what);

}  // namespace linalg
}  // namespace olab
