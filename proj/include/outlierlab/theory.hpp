#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "outlierlab/ensembles.hpp"
#include "outlierlab/gaussian.hpp"
#include "outlierlab/linalg.hpp"
#include "outlierlab/perturbation.hpp"

namespace olab::theory {

/// How the G part of F = G + g is realized.
enum class GKind { gaussian, atom_combination, mixed, geometric_combination };

std::string_view g_kind_name(GKind kind);

/// Flat index r = (s, t, theta): s and t are block positions inside the
/// blocks of theta.
struct RIndex {
  std::size_t theta_index = 0;
  Index s = 0;
  Index t = 0;
};

struct ThetaLayout {
  cdouble theta;
  std::vector<perturbation::BlockRef> blocks;  // k nonincreasing
  std::vector<int> sizes;
  std::vector<int> distinct_sizes;              // decreasing
  Index r_begin = 0;                            // first flat index of this theta
};

struct LimitLawOptions {
  /// Use the analytic n -> infinity inner products when the profile has them.
  bool use_analytic_limits = true;
  /// Exponent of the threshold n^{-a} defining the atom support of G.
  double support_exponent = 0.25;
};

struct LimitLawSpec {
  perturbation::JordanSpec spec;
  ensembles::AtomDistribution atom;
  std::vector<ThetaLayout> layouts;
  std::vector<RIndex> r_index;

  /// E g g^H and E g g^T over the flat index.
  CMatrix g_cov;
  CMatrix g_pseudo;

  GKind g_kind = GKind::gaussian;
  /// Atom part of G: G_r += sum_l atom_coeff(r, l) x_{support[l]}.
  std::vector<std::pair<Index, Index>> atom_support;
  CMatrix atom_coeff;
  /// Gaussian part of G.
  CMatrix G_cov;
  CMatrix G_pseudo;

  ComplexGaussianSampler g_sampler;
  ComplexGaussianSampler G_sampler;

  Index size() const { return static_cast<Index>(r_index.size()); }
};

/// Assembles the limit law of the normalized outlier fluctuations for the
/// perturbation `pm` and atom law `atom`. Throws NumericalError when either
/// covariance fails the PSD check.
LimitLawSpec build_limit_law(const perturbation::PerturbationMatrix& pm,
                             const ensembles::AtomDistribution& atom,
                             const LimitLawOptions& options = {});

/// Mixed moments E g^{(d1)}_{r1} g^{(d2)}_{r2} for theta values a, b (already
/// conjugated per d), atom moment q = E x^{(d1)} x^{(d2)} and inner products
/// uv = U * V.
cdouble g_moment(cdouble q, cdouble a, cdouble b, cdouble uv);

struct TheoreticalRecord {
  cdouble theta;
  int k = 1;
  int j = 0;
  int i = 0;
  cdouble f;        // k-th root fluctuation
  cdouble fk;       // eigenvalue of the reduced matrix
};

struct TheoreticalSample {
  std::vector<TheoreticalRecord> records;
  int resamples = 0;   // draws discarded because of a singular Schur pivot
};

/// One draw of F over the flat index (G + g).
CVector sample_F(const LimitLawSpec& law, ensembles::SeededRng& rng);

/// The I_u x I_v matrix F^theta for layout `t` from a flat draw.
CMatrix theta_matrix(const LimitLawSpec& law, std::size_t t, const CVector& f);

/// One draw of the limiting fluctuations. Retries up to 100 times on a
/// singular Schur pivot, then throws NumericalError.
TheoreticalSample sample_limit(const LimitLawSpec& law, ensembles::SeededRng& rng);

/// Stream ids of theoretical draws start here, disjoint from trial streams.
inline constexpr std::uint64_t kTheoryStreamBase = 0x4000'0000'0000'0000ULL;

/// `count` draws, draw s on stream kTheoryStreamBase + s; the result does not
/// depend on `threads`.
std::vector<TheoreticalSample> sample_many(const LimitLawSpec& law, int count, std::uint64_t seed,
                                           int threads = 1);

/// Analytic description of the closed-form special cases.
struct MarginalDescriptor {
  std::string case_id;
  std::string description;
  bool includes_atom = false;   // law contains the atom x itself (case i)
  int root_order = 1;           // fluctuations are root_order-th roots
  double variance = 0.0;        // E|F|^2 of the limit entry
  cdouble pseudo_variance;      // E F^2 of the limit entry
  double g_variance = 0.0;      // E|g|^2
  cdouble g_pseudo_variance;    // E g^2
  double radius = 0.0;          // iii-b: disk radius for eigenvalues scaled by 1/sqrt(m);
                                // iii-c: RMS radius of the root circle
  double radius_unscaled = 0.0; // iii-b: disk radius of the m x m matrix itself
};

struct MarginalParams {
  cdouble theta = 2.0;
  ensembles::AtomDistribution atom = ensembles::AtomDistribution::make(
      ensembles::AtomKind::complex_gaussian);
  int m = 1;                      // multiplicity (iii-b) or block size (iii-c)
  double uv_pseudo_overlap = 0.0; // lim u^* conj(u) v^T v for case ii
};

/// case_id in {i, ii, iii-a, iii-b, iii-c}; throws ConfigError otherwise.
MarginalDescriptor closed_form_marginal(std::string_view case_id, const MarginalParams& params);

}  // namespace olab::theory
