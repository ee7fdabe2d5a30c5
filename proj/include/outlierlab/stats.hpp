#pragma once

#include <string>
#include <vector>

#include "outlierlab/ensembles.hpp"
#include "outlierlab/linalg.hpp"

namespace olab::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct TwoSampleResult {
  double statistic = 0.0;       // energy distance, >= 0
  double p_value = 1.0;         // permutation p-value in (0, 1]
  int n_permutations = 0;
  KsResult ks_abs;              // marginal diagnostics
  KsResult ks_arg;
  KsResult ks_re;
  KsResult ks_im;
};

/// Two-sample energy statistic 2E|A-B| - E|A-A'| - E|B-B'| (V-statistic form)
/// on planar points, with a permutation p-value (1 + #{T_perm >= T}) / (1 + n_perm).
/// Requires |a|, |b| >= 50; throws ConfigError when the pooled sample is
/// constant.
TwoSampleResult energy_distance_test(const std::vector<cdouble>& a,
                                     const std::vector<cdouble>& b, int n_perm,
                                     ensembles::SeededRng& rng);

/// Energy statistic alone (no permutations).
double energy_distance(const std::vector<cdouble>& a, const std::vector<cdouble>& b);

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov survival function Q(t) = P(K > t).
double kolmogorov_q(double t);

/// One row of a moment table: an empirical mixed moment against a prediction.
struct MomentRow {
  std::string label;
  cdouble empirical;
  cdouble predicted;
  double se_re = 0.0;
  double se_im = 0.0;
  double z_re = 0.0;
  double z_im = 0.0;
  bool pass = false;
};

struct MomentReport {
  std::vector<MomentRow> rows;
  double threshold = 4.0;
  int batches = 20;
  bool all_pass() const;
  double max_abs_z() const;
};

/// Batch-means mean and standard error of a sequence (real and imaginary
/// parts separately). Uses min(batches, n) batches of equal length; trailing
/// samples that do not fill a batch are dropped from the error estimate only.
void batch_mean_se(const std::vector<cdouble>& x, int batches, cdouble& mean, double& se_re,
                   double& se_im);

/// z-score (empirical - predicted) / se; 0 when both the se and the
/// difference vanish, +inf when only the se vanishes.
double z_score(double empirical, double predicted, double se);

/// Empirical second moments of the columns of `samples` (rows = draws):
/// E z_a conj(z_b) and E z_a z_b for a <= b, compared with `cov` and
/// `pseudo` by z-score with batch-means errors.
MomentReport covariance_report(const CMatrix& samples, const CMatrix& cov, const CMatrix& pseudo,
                               const std::vector<std::string>& labels, int batches = 20,
                               double threshold = 4.0);

/// Appends one row comparing the sample mean of `values` to `predicted`.
void add_mean_row(MomentReport& rep, const std::string& label, const std::vector<cdouble>& values,
                  cdouble predicted);

}  // namespace olab::stats
