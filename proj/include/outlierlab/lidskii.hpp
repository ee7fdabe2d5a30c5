#pragma once

#include <vector>

#include "outlierlab/linalg.hpp"
#include "outlierlab/perturbation.hpp"

namespace olab::lidskii {

/// Which blocks are eliminated when forming the reduced matrix for size k.
enum class EliminationConvention {
  /// Eliminate every block larger than k among the blocks of size >= k.
  larger_blocks_first,
  /// Order blocks by increasing size and take the Schur complement of the
  /// blocks smaller than k inside the blocks of size <= k.
  smaller_blocks_first,
};

const char* convention_name(EliminationConvention c);

/// Reduced matrix for block size k from the block-indexed matrix `r`
/// (one row and column per block, sizes[b] = size of block b).
/// Throws NumericalError for a singular eliminated block.
CMatrix reduce_for_size(const CMatrix& r, const std::vector<int>& sizes, int k,
                        EliminationConvention convention);

/// The k k-th roots zeta_k^i xi^{1/k}, i = 0..k-1, principal branch first.
std::vector<cdouble> kth_roots(cdouble xi, int k);

struct LidskiiRecord {
  cdouble theta;
  int k = 1;
  int j = 0;       // eigenvalue index of the reduced matrix
  int i = 0;       // root index
  cdouble xi;      // eigenvalue of the reduced matrix
  cdouble fluctuation;
};

struct LidskiiPrediction {
  std::vector<LidskiiRecord> records;

  /// Fluctuations for one (theta, k), in record order.
  std::vector<cdouble> fluctuations(cdouble theta, int k) const;
};

/// Leading-order eigenvalue shifts of M + P for M = spec.jordan_matrix().
/// P is rank x rank and laid out conformally with spec.blocks(); each theta
/// is treated separately.
LidskiiPrediction lidskii_predict(
    const perturbation::JordanSpec& spec, const CMatrix& p,
    EliminationConvention convention = EliminationConvention::larger_blocks_first);

/// Block-indexed matrix R of one theta: R(a, b) = P(last row of block a,
/// first column of block b).
CMatrix lower_left_matrix(const std::vector<perturbation::BlockRef>& blocks, const CMatrix& p);

struct SlopeGroup {
  cdouble theta;
  int k = 1;
  int count = 0;                   // eigenvalues assigned to this group
  double slope = 0.0;              // fitted d log|lambda - theta| / d log eps
  double expected_slope = 0.0;     // 1/k
  bool slope_ok = false;           // within 5% of 1/k
  double match_error = 0.0;        // max relative pairing distance at eps_check
  double match_tolerance = 0.0;    // 10 eps_check^{1/(k(k+1))}
  bool match_ok = false;
};

struct SlopeReport {
  EliminationConvention convention;
  std::vector<double> eps;
  double eps_check = 0.0;
  std::vector<SlopeGroup> groups;
  bool ambiguous = false;          // clusters of different thetas overlapped
  bool zero_perturbation = false;  // P = 0: every shift is exactly zero
  bool all_ok() const;
};

/// Brute-force check of lidskii_predict on M + eps P over an eps sweep.
/// eps_list must be strictly decreasing with at least two entries. The
/// multiset comparison uses eps_check (default: the smallest eps).
SlopeReport verify_slope(const perturbation::JordanSpec& spec, const CMatrix& p,
                         const std::vector<double>& eps_list,
                         EliminationConvention convention =
                             EliminationConvention::larger_blocks_first,
                         double eps_check = 0.0);

/// Partition of cluster deviations into block sizes: sorted by |lambda - theta|
/// descending, the largest k_max m_{k_max} receive k_max, and so on down.
/// Returns the block size for each input index.
std::vector<int> assign_block_sizes(const std::vector<cdouble>& deviations,
                                    const std::vector<perturbation::BlockRef>& blocks);

}  // namespace olab::lidskii
