#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "outlierlab/ensembles.hpp"
#include "outlierlab/linalg.hpp"

namespace olab::perturbation {

/// One entry of a Jordan structure: m blocks J_{theta,k}.
struct JordanEntry {
  cdouble theta;
  int k = 1;
  int m = 1;
};

/// One concrete Jordan block after expanding multiplicities. Its generalized
/// eigenvectors occupy columns [offset, offset + k) of V and the same rows
/// of Ustar; column `offset` is the eigenvector, row `offset + k - 1` the left
/// eigenvector.
struct BlockRef {
  cdouble theta;
  int k = 1;
  int j = 0;          // copy index within (theta, k), 0-based
  Index offset = 0;
};

struct JordanSpec {
  std::vector<JordanEntry> entries;
  int rank_cap = 16;

  /// Throws ConfigError unless every |theta| > 1, k, m >= 1, rank <= rank_cap,
  /// no (theta, k) pair is repeated and, within one theta, k is nonincreasing
  /// in listing order.
  void validate() const;

  int rank() const;
  /// Distinct eigenvalues in order of first appearance.
  std::vector<cdouble> thetas() const;
  /// All blocks in V-column order.
  std::vector<BlockRef> blocks() const;
  /// Blocks of one theta in V-column order (k nonincreasing).
  std::vector<BlockRef> blocks_of(cdouble theta) const;
  /// Sum of k * m over the blocks of theta.
  int multiplicity(cdouble theta) const;
  /// The rank x rank block-diagonal Jordan matrix.
  CMatrix jordan_matrix() const;
  bool empty() const { return entries.empty(); }
};

enum class ProfileKind { local, delocalized_haar, delocalized_fourier, mixed, geometric };

std::string_view profile_kind_name(ProfileKind kind);
ProfileKind profile_kind_from_name(std::string_view name);

struct EigenvectorProfile {
  ProfileKind kind = ProfileKind::local;
  bool real = false;            // delocalized-haar: draw a real orthonormal frame
  int local_size = 8;           // mixed: coordinates [0, C) carry the local part
  double local_mass = 0.5;      // mixed: squared norm of the local part
  double ratio = 0.5;           // geometric: decay ratio r in (0, 1)
  bool distinct_left = false;   // delocalized kinds: biorthogonalize a generic left frame

  /// Constant c of the moment hypothesis: sup c' with |u|_inf |v|_inf << n^{-c'}.
  double c_constant() const;
  /// Implied moment requirement min(max(2/c, 4), 8) (+ epsilon, not included).
  double implied_moment() const;
  void validate() const;
};

struct PerturbationMatrix {
  Index n = 0;
  JordanSpec spec;
  EigenvectorProfile profile;
  CMatrix V;       // n x rank
  CMatrix Ustar;   // rank x n, Ustar * V = I
  CMatrix J;       // rank x rank

  int rank() const { return static_cast<int>(J.rows()); }
  /// Dense A = V J Ustar.
  CMatrix dense() const;
  /// True when V, Ustar and J have no imaginary part.
  bool is_real() const;
  /// Eigenvector v_t (column `offset` of V) and left covector u_s^* (row
  /// `offset + k - 1` of Ustar) of a block.
  CVector right_eigenvector(const BlockRef& b) const;
  CVector left_covector(const BlockRef& b) const;
  double biorthogonality_error() const;
};

/// Builds A = V J Ustar. Throws ConfigError for invalid input (including
/// n < 4 rank) and NumericalError when biorthogonalization fails 10 times.
PerturbationMatrix build_perturbation(Index n, const JordanSpec& spec,
                                      const EigenvectorProfile& profile,
                                      ensembles::SeededRng& rng);

/// Index sets of one eigenvalue: left eigenvector rows (i = k) and right
/// eigenvector columns (i = 1), one per block, in block order.
struct ThetaIndexSets {
  cdouble theta;
  std::vector<BlockRef> blocks;
};

/// Inner-product scalars for every (d1, d2) in {0,1}^2. For covectors w_s
/// (rows of Ustar) and vectors v_t:
///   U[d1][d2](s1, s2) = sum_i w_{s1,i}^{(d1)} w_{s2,i}^{(d2)}
///   V[d1][d2](t1, t2) = sum_i v_{t1,i}^{(d1)} v_{t2,i}^{(d2)}
/// where z^{(0)} = z and z^{(1)} = conj(z). Indices run over all blocks of
/// all thetas in block order.
struct LimitScalars {
  std::vector<BlockRef> blocks;
  CMatrix U[2][2];
  CMatrix V[2][2];
  /// Analytic n -> infinity value when the profile has one (orthonormal
  /// frames give Kronecker deltas), otherwise equal to the finite-n value.
  CMatrix U_limit[2][2];
  CMatrix V_limit[2][2];
  bool has_analytic_limit = false;
};

LimitScalars compute_limit_scalars(const PerturbationMatrix& pm);

/// Haar-distributed n x r orthonormal frame (thin QR of a Gaussian block with
/// phases fixed by the R diagonal); real when `real` is set.
CMatrix haar_frame(Index n, Index r, bool real, ensembles::SeededRng& rng);

/// Unit-norm geometric column: entry t (t = 0..len-1) equals r^{t+1} c_len with
/// c_len^2 = (1 - r^2) / (r^2 (1 - r^{2 len})).
double geometric_normalizer(double r, Index len);

}  // namespace olab::perturbation
