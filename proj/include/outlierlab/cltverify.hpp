#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "outlierlab/ensembles.hpp"
#include "outlierlab/linalg.hpp"
#include "outlierlab/stats.hpp"

namespace olab::cltverify {

/// Stream reserved for drawing the vector pairs of a moment experiment.
inline constexpr std::uint64_t kPairStream = ensembles::kReservedStreamBase + 2;

/// sqrt(n) u^* (X / sqrt(n))^j v by j matrix-vector products.
cdouble z_statistic(const CMatrix& x, const CVector& u, const CVector& v, int j);

/// Z_1, ..., Z_jmax from a single product chain.
std::vector<cdouble> z_powers(const CMatrix& x, const CVector& u, const CVector& v, int jmax);
std::vector<cdouble> z_powers(const RMatrix& x, const CVector& u, const CVector& v, int jmax);

/// -lambda sqrt(n) u^* ((X / sqrt(n) - lambda)^{-1} + lambda^{-1}) v by a
/// direct solve. Throws NumericalError when lambda is too close to the
/// spectrum.
cdouble s_statistic(const CMatrix& x, const CVector& u, const CVector& v, cdouble lambda);

/// sum_{k=1}^{terms} Z_k / lambda^k.
cdouble s_series(const CMatrix& x, const CVector& u, const CVector& v, cdouble lambda, int terms);

/// ceil(log(n)^2), the series cutoff.
int series_cutoff(Index n);

/// Inner-product scalars C^{(d1),(d2)}_{i1,i2} of vector pairs (u_i, v_i):
/// (sum_l w^{(d1)}_{i1,l} w^{(d2)}_{i2,l}) (sum_l v^{(d1)}_{i1,l} v^{(d2)}_{i2,l})
/// with w_i = conj(u_i). c[d1][d2] is p x p.
struct PairScalars {
  CMatrix c[2][2];
};
PairScalars pair_scalars(const std::vector<CVector>& u, const std::vector<CVector>& v);

struct VectorPair {
  CVector u;
  CVector v;
};

/// Vector pairs for the moment experiments. kind: "delocalized-haar",
/// "delocalized-haar-real", "delocalized-fourier" or "local". u_i and v_i are
/// independent unit vectors for the Haar kinds.
std::vector<VectorPair> make_pairs(Index n, int p, const std::string& kind,
                                   ensembles::SeededRng& rng);

struct ZStatConfig {
  Index n = 200;
  int trials = 1000;
  std::uint64_t seed = 1;
  ensembles::AtomDistribution atom =
      ensembles::AtomDistribution::make(ensembles::AtomKind::complex_gaussian);
  std::vector<VectorPair> pairs;
  int max_power = 3;
  int threads = 1;
  void validate() const;
};

/// Samples: rows = trials, columns = (pair i, power j) with j fastest.
CMatrix sample_z(const ZStatConfig& cfg);

/// Predicted E Z^{(d1)}_{i1,j} Z^{(d2)}_{i2,k} = delta_{jk} (E x^{(d1)} x^{(d2)})^j C.
void predicted_z_moments(const ZStatConfig& cfg, CMatrix& cov, CMatrix& pseudo);

/// Moment report for every pair of (i, j) variables, including the
/// cross-power moments predicted to vanish.
stats::MomentReport estimate_z_covariances(const ZStatConfig& cfg);

struct SStatConfig {
  Index n = 200;
  int trials = 1000;
  std::uint64_t seed = 1;
  ensembles::AtomDistribution atom =
      ensembles::AtomDistribution::make(ensembles::AtomKind::complex_gaussian);
  std::vector<VectorPair> pairs;
  std::vector<cdouble> lambdas{2.0, 3.0};
  int threads = 1;
  void validate() const;
};

struct SSamples {
  CMatrix s;            // rows = trials, columns = (pair i, lambda j) with j fastest
  CMatrix s_minus_z1;   // S - Z_1 / lambda, the part carried by g
  double max_series_gap = 0.0;  // max |S_solve - S_series| over all samples
};

SSamples sample_s(const SStatConfig& cfg);

/// Predicted moments of S: E S^{(d1)} S^{(d2)} = q C / (a b - q), and of the
/// g part: q^2 C / (a b (a b - q)), with a, b the lambdas conjugated per d.
void predicted_s_moments(const SStatConfig& cfg, CMatrix& cov, CMatrix& pseudo,
                         CMatrix& g_cov, CMatrix& g_pseudo);

struct SReport {
  stats::MomentReport total;
  stats::MomentReport g_part;
  double max_series_gap = 0.0;
};

SReport estimate_s_covariances(const SStatConfig& cfg);

struct ScanRow {
  int k = 0;
  double mean = 0.0;   // empirical E|Z_k|^2
  double se = 0.0;
};

/// Empirical E|Z_k|^2 for k = 1..k_max (k_max = 0 selects ceil(log^2 n)).
std::vector<ScanRow> bounded_moment_scan(Index n, const ensembles::AtomDistribution& atom,
                                         const CVector& u, const CVector& v, int k_max,
                                         int trials, std::uint64_t seed, int threads = 1);

}  // namespace olab::cltverify
