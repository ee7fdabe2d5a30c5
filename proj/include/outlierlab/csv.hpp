#pragma once

#include <string>
#include <vector>

#include "outlierlab/linalg.hpp"
#include "outlierlab/montecarlo.hpp"
#include "outlierlab/stats.hpp"
#include "outlierlab/theory.hpp"

namespace olab::csv {

/// A CSV file: one `# config_hash=<hex>` line, optional `# ` comment lines,
/// a header row, then data rows. Cells never contain commas.
struct Table {
  std::string config_hash;
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws ConfigError when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);
double parse_double(const std::string& s);

/// One fluctuation row shared by the Monte Carlo and theoretical schemas:
/// sample, theta_re, theta_im, k, j, i, f_re, f_im, fk_re, fk_im.
struct FluctuationRow {
  int sample = 0;
  cdouble theta;
  int k = 1;
  int j = 0;
  int i = 0;
  cdouble f;
  cdouble fk;
};

extern const std::vector<std::string> kFluctuationHeader;

/// Monte Carlo rows: f = n^{1/(2k)} (lambda - theta), fk = n^{1/2} (lambda - theta)^k.
std::vector<FluctuationRow> rows_from_experiment(const montecarlo::FluctuationSampleSet& set);
/// Theoretical rows: f = k-th root, fk = eigenvalue of the reduced matrix.
std::vector<FluctuationRow> rows_from_theory(const std::vector<theory::TheoreticalSample>& samples);

void write_fluctuations(const std::string& path, const std::string& config_hash,
                        const std::vector<FluctuationRow>& rows);
/// Throws ConfigError on a malformed file or a missing column.
std::vector<FluctuationRow> read_fluctuations(const std::string& path, std::string* config_hash = nullptr);

/// S-invariant group statistic: for every (sample, theta, k, j) the mean of fk
/// over i, collected per (theta, k).
struct GroupedPowers {
  cdouble theta;
  int k = 1;
  std::vector<cdouble> values;
};
std::vector<GroupedPowers> group_powers(const std::vector<FluctuationRow>& rows);

/// Eigenvalues with an outlier flag: sample, re, im, outlier. Comment lines
/// record n and one `theta=re;im;k` entry per block size of each theta.
void write_spectrum(const std::string& path, const std::string& config_hash, int sample, Index n,
                    const perturbation::JordanSpec& spec, const std::vector<cdouble>& eigenvalues,
                    const std::vector<bool>& outlier);

/// Guide data recovered from spectrum comments.
struct SpectrumGuides {
  Index n = 0;
  std::vector<std::pair<cdouble, int>> thetas;   // (theta, k)
};
SpectrumGuides spectrum_guides(const Table& table);

/// section, label, empirical_re, empirical_im, predicted_re, predicted_im, se_re,
/// se_im, z_re, z_im, pass.
Table moment_report_table(const std::string& config_hash, const stats::MomentReport& report,
                          const std::string& section);
void append_moment_report(Table& table, const stats::MomentReport& report, const std::string& section);

}  // namespace olab::csv
