#include "outlierlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "outlierlab/errors.hpp"

namespace olab::stats {

namespace {

constexpr int kMinSample = 50;

// Planar distance matrix of the pooled sample.
RMatrix distance_matrix(const std::vector<cdouble>& pooled) {
  const Index n = static_cast<Index>(pooled.size());
  RMatrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::abs(pooled[static_cast<std::size_t>(i)] - pooled[static_cast<std::size_t>(j)]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// Energy statistic from the within-A sum, the cross sum and the within-B sum.
double energy_from_sums(double saa, double sab, double sbb, double na, double nb) {
  return 2.0 * sab / (na * nb) - saa / (na * na) - sbb / (nb * nb);
}

}  // namespace

double energy_distance(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  if (a.empty() || b.empty()) throw ConfigError("energy_distance: empty sample");
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (cdouble x : a) {
    for (cdouble y : a) saa += std::abs(x - y);
    for (cdouble y : b) sab += std::abs(x - y);
  }
  for (cdouble x : b) {
    for (cdouble y : b) sbb += std::abs(x - y);
  }
  return std::max(0.0, energy_from_sums(saa, sab, sbb, static_cast<double>(a.size()),
                                        static_cast<double>(b.size())));
}

double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

TwoSampleResult energy_distance_test(const std::vector<cdouble>& a,
                                     const std::vector<cdouble>& b, int n_perm,
                                     ensembles::SeededRng& rng) {
  if (a.size() < kMinSample || b.size() < kMinSample) {
    throw ConfigError("energy_distance_test: each sample needs at least 50 points");
  }
  if (n_perm < 1) throw ConfigError("energy_distance_test: n_perm must be positive");
  std::vector<cdouble> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (std::all_of(pooled.begin(), pooled.end(), [&](cdouble z) { return z == pooled.front(); })) {
    throw ConfigError("energy_distance_test: degenerate sample (all points identical)");
  }
  const Index n = static_cast<Index>(pooled.size());
  const Index na = static_cast<Index>(a.size());
  const double dna = static_cast<double>(na);
  const double dnb = static_cast<double>(n - na);
  const RMatrix d = distance_matrix(pooled);
  const Eigen::VectorXd rows = d.rowwise().sum();
  const double total = rows.sum();

  // For a label vector s (1 on A), S_AA = s' D s, S_AB = rows' s - S_AA,
  // S_BB = total - S_AA - 2 S_AB. All permutations share one product D S.
  auto stat_from = [&](double saa, double rs) {
    const double sab = rs - saa;
    const double sbb = total - saa - 2.0 * sab;
    return energy_from_sums(saa, sab, sbb, dna, dnb);
  };

  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(n);
  s0.head(na).setOnes();
  const double t_obs = stat_from(s0.dot(d * s0), rows.dot(s0));

  RMatrix labels = RMatrix::Zero(n, n_perm);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (int p = 0; p < n_perm; ++p) {
    // Partial Fisher-Yates: the first na entries form a uniform random subset.
    for (Index i = 0; i < na; ++i) {
      const Index span = n - i;
      const Index pick = i + static_cast<Index>(rng.bits() % static_cast<std::uint64_t>(span));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick)]);
    }
    for (Index i = 0; i < na; ++i) labels(perm[static_cast<std::size_t>(i)], p) = 1.0;
  }
  const RMatrix ds = d * labels;
  int exceed = 0;
  const double tol = 1e-12 * std::max(1.0, std::abs(t_obs));
  for (int p = 0; p < n_perm; ++p) {
    const double saa = labels.col(p).dot(ds.col(p));
    const double tp = stat_from(saa, rows.dot(labels.col(p)));
    if (tp >= t_obs - tol) ++exceed;
  }

  TwoSampleResult res;
  res.statistic = std::max(0.0, t_obs);
  res.n_permutations = n_perm;
  res.p_value = (1.0 + exceed) / (1.0 + n_perm);

  auto marg = [&](auto fn) {
    std::vector<double> xa, xb;
    for (cdouble z : a) xa.push_back(fn(z));
    for (cdouble z : b) xb.push_back(fn(z));
    return ks_two_sample(std::move(xa), std::move(xb));
  };
  res.ks_abs = marg([](cdouble z) { return std::abs(z); });
  res.ks_arg = marg([](cdouble z) { return std::arg(z); });
  res.ks_re = marg([](cdouble z) { return z.real(); });
  res.ks_im = marg([](cdouble z) { return z.imag(); });
  return res;
}

bool MomentReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const MomentRow& r) { return r.pass; });
}

double MomentReport::max_abs_z() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max({m, std::abs(r.z_re), std::abs(r.z_im)});
  return m;
}

void batch_mean_se(const std::vector<cdouble>& x, int batches, cdouble& mean, double& se_re,
                   double& se_im) {
  if (x.empty()) throw ConfigError("batch_mean_se: empty sample");
  mean = std::accumulate(x.begin(), x.end(), cdouble(0.0)) / static_cast<double>(x.size());
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), x.size());
  const std::size_t len = x.size() / nb;
  if (nb < 2 || len < 1) {
    se_re = se_im = std::numeric_limits<double>::infinity();
    return;
  }
  std::vector<cdouble> bm(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < len; ++i) bm[b] += x[b * len + i];
    bm[b] /= static_cast<double>(len);
  }
  const cdouble gm = std::accumulate(bm.begin(), bm.end(), cdouble(0.0)) / static_cast<double>(nb);
  double vr = 0.0, vi = 0.0;
  for (cdouble m : bm) {
    vr += (m.real() - gm.real()) * (m.real() - gm.real());
    vi += (m.imag() - gm.imag()) * (m.imag() - gm.imag());
  }
  const double denom = static_cast<double>(nb) * static_cast<double>(nb - 1);
  se_re = std::sqrt(vr / denom);
  se_im = std::sqrt(vi / denom);
}

double z_score(double empirical, double predicted, double se) {
  const double diff = empirical - predicted;
  if (se > 0.0) return diff / se;
  if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(predicted))) return 0.0;
  return std::numeric_limits<double>::infinity();
}

void add_mean_row(MomentReport& rep, const std::string& label, const std::vector<cdouble>& values,
                  cdouble predicted) {
  MomentRow row;
  row.label = label;
  row.predicted = predicted;
  batch_mean_se(values, rep.batches, row.empirical, row.se_re, row.se_im);
  row.z_re = z_score(row.empirical.real(), predicted.real(), row.se_re);
  row.z_im = z_score(row.empirical.imag(), predicted.imag(), row.se_im);
  row.pass = std::abs(row.z_re) <= rep.threshold && std::abs(row.z_im) <= rep.threshold;
  rep.rows.push_back(std::move(row));
}

MomentReport covariance_report(const CMatrix& samples, const CMatrix& cov, const CMatrix& pseudo,
                               const std::vector<std::string>& labels, int batches,
                               double threshold) {
  const Index p = samples.cols();
  if (cov.rows() != p || cov.cols() != p || pseudo.rows() != p || pseudo.cols() != p ||
      static_cast<Index>(labels.size()) != p) {
    throw ConfigError("covariance_report: shapes disagree");
  }
  MomentReport rep;
  rep.batches = batches;
  rep.threshold = threshold;
  const Index m = samples.rows();
  std::vector<cdouble> prod(static_cast<std::size_t>(m));
  for (Index a = 0; a < p; ++a) {
    for (Index b = a; b < p; ++b) {
      for (Index t = 0; t < m; ++t) prod[static_cast<std::size_t>(t)] = samples(t, a) * std::conj(samples(t, b));
      add_mean_row(rep, "E " + labels[a] + " conj(" + labels[b] + ")", prod, cov(a, b));
      for (Index t = 0; t < m; ++t) prod[static_cast<std::size_t>(t)] = samples(t, a) * samples(t, b);
      add_mean_row(rep, "E " + labels[a] + " " + labels[b], prod, pseudo(a, b));
    }
  }
  return rep;
}

}  // namespace olab::stats
