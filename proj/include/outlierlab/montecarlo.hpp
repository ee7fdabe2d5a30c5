#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "outlierlab/ensembles.hpp"
#include "outlierlab/linalg.hpp"
#include "outlierlab/perturbation.hpp"
#include "outlierlab/secular.hpp"

namespace olab::montecarlo {

enum class OutlierSolver {
  automatic,  // secular solver with dense fallback; dense when the spec is empty
  dense,
  secular,    // secular only: a failed certificate marks the trial failed
};

const char* solver_name(OutlierSolver s);
OutlierSolver solver_from_name(const std::string& name);

struct ExperimentConfig {
  Index n = 100;
  int trials = 100;
  std::uint64_t master_seed = 1;
  ensembles::AtomDistribution atom =
      ensembles::AtomDistribution::make(ensembles::AtomKind::complex_gaussian);
  perturbation::JordanSpec spec;
  perturbation::EigenvectorProfile profile;
  double outlier_margin = 0.0;     // 0 selects (min |theta| - 1) / 2
  double null_margin = 0.1;        // empty spec: outliers are |lambda| > 1 + null_margin
  double max_failure_rate = 0.05;
  OutlierSolver solver = OutlierSolver::automatic;
  int threads = 1;

  double effective_margin() const;
  /// Throws ConfigError for trials < 1, n < 4 rank, non-positive margins.
  void validate() const;
  /// Stable textual description hashed into every output file.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

/// Stream id from which the perturbation is drawn.
inline constexpr std::uint64_t kPerturbationStream = ensembles::kReservedStreamBase + 1;

struct OutlierRecord {
  cdouble theta;
  int k = 1;
  int j = 0;          // group (copy) index within (theta, k)
  int i = 0;          // position within the group
  cdouble lambda;
  cdouble f;          // n^{1/(2k)} (lambda - theta)
  cdouble powered;    // n^{1/2} (lambda - theta)^k
};

/// S-invariant group summary: the mean of the k powered values of one group.
struct GroupRecord {
  cdouble theta;
  int k = 1;
  int j = 0;
  cdouble powered_mean;
};

struct TrialResult {
  int trial = 0;
  bool ok = false;
  std::string failure;
  bool used_dense = false;
  std::vector<OutlierRecord> outliers;
  std::vector<GroupRecord> groups;
  /// Empty spec: eigenvalues outside radius 1 + null_margin.
  std::vector<cdouble> stray;
  /// Smallest ratio between the last deviation of one block-size class and the
  /// first of the next smaller class (values near 1 flag likely misassignment).
  double min_gap_ratio = 0.0;
};

struct FluctuationSampleSet {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<TrialResult> trials;   // every trial in index order
  int failures = 0;
  int dense_fallbacks = 0;

  double failure_rate() const;
  /// Powered group means for (theta, k) over successful trials.
  std::vector<cdouble> powered(cdouble theta, int k) const;
  /// Raw normalized fluctuations for (theta, k) over successful trials.
  std::vector<cdouble> fluctuations(cdouble theta, int k) const;
  /// |lambda - theta| for (theta, k) over successful trials.
  std::vector<double> deviations(cdouble theta, int k) const;
};

/// Context shared read-only by every trial of an experiment.
struct ExperimentContext {
  ExperimentConfig config;
  perturbation::PerturbationMatrix pm;
  CMatrix a_dense;
  bool real_arithmetic = false;   // real atom and real perturbation
};

ExperimentContext make_context(const ExperimentConfig& cfg);

/// One trial on stream `trial_idx`.
TrialResult run_trial(const ExperimentContext& ctx, int trial_idx);

/// All eigenvalues of X / sqrt(n) + A for one trial (dense).
linalg::Spectrum trial_spectrum(const ExperimentContext& ctx, int trial_idx);

/// Runs every trial; results are merged in trial order so the output does not
/// depend on `threads`. Throws NumericalError when the failure rate exceeds
/// max_failure_rate.
FluctuationSampleSet run_experiment(const ExperimentConfig& cfg);

/// Groups k deviations into m groups of k by proximity of their k-th powers.
/// Returns the group index of each input.
std::vector<int> group_by_power(const std::vector<cdouble>& deviations, int k, int m);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace olab::montecarlo
