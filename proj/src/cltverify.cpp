#include "outlierlab/cltverify.hpp"

#include <cmath>
#include <numbers>
#include <type_traits>

#include "outlierlab/errors.hpp"
#include "outlierlab/montecarlo.hpp"
#include "outlierlab/perturbation.hpp"

namespace olab::cltverify {

namespace {

// y * b with a real y applied to the real and imaginary parts in one product.
CMatrix times(const RMatrix& y, const CMatrix& b) {
  const Index c = b.cols();
  RMatrix stacked(b.rows(), 2 * c);
  stacked.leftCols(c) = b.real();
  stacked.rightCols(c) = b.imag();
  const RMatrix out = y * stacked;
  CMatrix r(out.rows(), c);
  r.real() = out.leftCols(c);
  r.imag() = out.rightCols(c);
  return r;
}

CMatrix times(const CMatrix& y, const CMatrix& b) { return y * b; }

template <class M>
std::vector<cdouble> z_chain(const M& x, const CVector& u, const CVector& v, int jmax) {
  const Index n = x.rows();
  if (u.size() != n || v.size() != n) throw ConfigError("z_powers: vector length differs from n");
  if (jmax < 1) throw ConfigError("z_powers: jmax must be >= 1");
  const double sn = std::sqrt(static_cast<double>(n));
  std::vector<cdouble> out;
  CMatrix w = v;
  for (int j = 1; j <= jmax; ++j) {
    w = times(x, w) / sn;
    out.push_back(sn * u.dot(w.col(0)));
  }
  return out;
}

// Moment q^j of E x^{(d1)} x^{(d2)}: 1 for mixed conjugation, E x^2 (or its
// conjugate) otherwise.
cdouble atom_pair_moment(const ensembles::AtomDistribution& atom, int d1, int d2) {
  if (d1 != d2) return 1.0;
  return d1 == 0 ? atom.ex2 : std::conj(atom.ex2);
}

// Stacks the pair vectors as columns.
void stack_pairs(const std::vector<VectorPair>& pairs, CMatrix& u, CMatrix& v) {
  const Index n = pairs.front().u.size();
  const Index p = static_cast<Index>(pairs.size());
  u.resize(n, p);
  v.resize(n, p);
  for (Index i = 0; i < p; ++i) {
    u.col(i) = pairs[static_cast<std::size_t>(i)].u;
    v.col(i) = pairs[static_cast<std::size_t>(i)].v;
  }
}

void validate_common(Index n, int trials, const std::vector<VectorPair>& pairs, int threads) {
  if (n < 2) throw ConfigError("clt: n must be >= 2");
  if (trials < 2) throw ConfigError("clt: trials must be >= 2");
  if (threads < 1) throw ConfigError("clt: threads must be >= 1");
  if (pairs.empty()) throw ConfigError("clt: at least one vector pair is required");
  for (const auto& pr : pairs) {
    if (pr.u.size() != n || pr.v.size() != n) throw ConfigError("clt: pair length differs from n");
  }
}

std::vector<std::string> labels_for(int p, int inner, const char* name, const char* inner_name) {
  std::vector<std::string> out;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < inner; ++j) {
      out.push_back(std::string(name) + "[" + std::to_string(i) + ";" + inner_name +
                    std::to_string(j + 1) + "]");
    }
  }
  return out;
}

template <class M>
M scaled_matrix(Index n, const ensembles::AtomDistribution& atom, ensembles::SeededRng& rng) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  if constexpr (std::is_same_v<M, RMatrix>) {
    return ensembles::sample_real_iid_matrix(n, atom, rng) * inv;
  } else {
    return ensembles::sample_iid_matrix(n, atom, rng) * inv;
  }
}

template <class M>
void z_trials(const ZStatConfig& cfg, CMatrix& out) {
  CMatrix u, v;
  stack_pairs(cfg.pairs, u, v);
  const double sn = std::sqrt(static_cast<double>(cfg.n));
  const Index p = u.cols();
  montecarlo::parallel_for(cfg.trials, cfg.threads, [&](int t) {
    ensembles::SeededRng rng(cfg.seed, static_cast<std::uint64_t>(t));
    const M y = scaled_matrix<M>(cfg.n, cfg.atom, rng);
    CMatrix w = v;
    for (int j = 0; j < cfg.max_power; ++j) {
      w = times(y, w);
      for (Index i = 0; i < p; ++i) {
        out(t, i * cfg.max_power + j) = sn * u.col(i).dot(w.col(i));
      }
    }
  });
}

template <class M>
void s_trials(const SStatConfig& cfg, SSamples& res) {
  CMatrix u, v;
  stack_pairs(cfg.pairs, u, v);
  const double sn = std::sqrt(static_cast<double>(cfg.n));
  const Index p = u.cols();
  const Index nl = static_cast<Index>(cfg.lambdas.size());
  const int terms = series_cutoff(cfg.n);
  std::vector<double> gaps(static_cast<std::size_t>(cfg.trials), 0.0);
  montecarlo::parallel_for(cfg.trials, cfg.threads, [&](int t) {
    ensembles::SeededRng rng(cfg.seed, static_cast<std::uint64_t>(t));
    const M y = scaled_matrix<M>(cfg.n, cfg.atom, rng);
    // Z_1, ..., Z_terms for every pair.
    CMatrix z(p, terms);
    CMatrix w = v;
    for (int k = 0; k < terms; ++k) {
      w = times(y, w);
      for (Index i = 0; i < p; ++i) z(i, k) = sn * u.col(i).dot(w.col(i));
    }
    double gap = 0.0;
    for (Index l = 0; l < nl; ++l) {
      const cdouble lam = cfg.lambdas[static_cast<std::size_t>(l)];
      const linalg::ShiftedLu lu(y, lam);
      const CMatrix sol = lu.solve(v);
      for (Index i = 0; i < p; ++i) {
        const cdouble s = -lam * sn * (u.col(i).dot(sol.col(i)) + u.col(i).dot(v.col(i)) / lam);
        cdouble series = 0.0;
        cdouble pw = 1.0;
        for (int k = 0; k < terms; ++k) {
          pw /= lam;
          series += z(i, k) * pw;
        }
        gap = std::max(gap, std::abs(s - series));
        res.s(t, i * nl + l) = s;
        res.s_minus_z1(t, i * nl + l) = s - z(i, 0) / lam;
      }
    }
    gaps[static_cast<std::size_t>(t)] = gap;
  });
  for (double g : gaps) res.max_series_gap = std::max(res.max_series_gap, g);
}

}  // namespace

cdouble z_statistic(const CMatrix& x, const CVector& u, const CVector& v, int j) {
  return z_chain(x, u, v, j).back();
}

std::vector<cdouble> z_powers(const CMatrix& x, const CVector& u, const CVector& v, int jmax) {
  return z_chain(x, u, v, jmax);
}

std::vector<cdouble> z_powers(const RMatrix& x, const CVector& u, const CVector& v, int jmax) {
  return z_chain(x, u, v, jmax);
}

cdouble s_statistic(const CMatrix& x, const CVector& u, const CVector& v, cdouble lambda) {
  const Index n = x.rows();
  if (u.size() != n || v.size() != n) throw ConfigError("s_statistic: vector length differs from n");
  if (std::abs(lambda) == 0.0) throw ConfigError("s_statistic: lambda must be nonzero");
  const double sn = std::sqrt(static_cast<double>(n));
  const CMatrix y = x / sn;
  const linalg::ShiftedLu lu(y, lambda);
  const CMatrix sol = lu.solve(v);
  return -lambda * sn * (u.dot(sol.col(0)) + u.dot(v) / lambda);
}

cdouble s_series(const CMatrix& x, const CVector& u, const CVector& v, cdouble lambda, int terms) {
  const auto z = z_chain(x, u, v, terms);
  cdouble sum = 0.0;
  cdouble pw = 1.0;
  for (cdouble zk : z) {
    pw /= lambda;
    sum += zk * pw;
  }
  return sum;
}

int series_cutoff(Index n) {
  const double l = std::log(static_cast<double>(n));
  return std::max(1, static_cast<int>(std::ceil(l * l)));
}

PairScalars pair_scalars(const std::vector<CVector>& u, const std::vector<CVector>& v) {
  if (u.size() != v.size() || u.empty()) throw ConfigError("pair_scalars: need matching, nonempty lists");
  const Index p = static_cast<Index>(u.size());
  CMatrix w(p, u.front().size()), vv(p, v.front().size());
  for (Index i = 0; i < p; ++i) {
    w.row(i) = u[static_cast<std::size_t>(i)].conjugate().transpose();
    vv.row(i) = v[static_cast<std::size_t>(i)].transpose();
  }
  PairScalars ps;
  for (int d1 = 0; d1 < 2; ++d1) {
    for (int d2 = 0; d2 < 2; ++d2) {
      const CMatrix w1 = d1 ? CMatrix(w.conjugate()) : w;
      const CMatrix w2 = d2 ? CMatrix(w.conjugate()) : w;
      const CMatrix v1 = d1 ? CMatrix(vv.conjugate()) : vv;
      const CMatrix v2 = d2 ? CMatrix(vv.conjugate()) : vv;
      ps.c[d1][d2] = (w1 * w2.transpose()).cwiseProduct(v1 * v2.transpose());
    }
  }
  return ps;
}

std::vector<VectorPair> make_pairs(Index n, int p, const std::string& kind,
                                   ensembles::SeededRng& rng) {
  if (p < 1) throw ConfigError("make_pairs: p must be >= 1");
  if (2 * p > n) throw ConfigError("make_pairs: n must be at least 2p");
  std::vector<VectorPair> out(static_cast<std::size_t>(p));
  if (kind == "delocalized-haar" || kind == "delocalized-haar-real") {
    const bool real = kind == "delocalized-haar-real";
    const CMatrix uf = perturbation::haar_frame(n, p, real, rng);
    const CMatrix vf = perturbation::haar_frame(n, p, real, rng);
    for (int i = 0; i < p; ++i) {
      out[static_cast<std::size_t>(i)] = {uf.col(i), vf.col(i)};
    }
  } else if (kind == "delocalized-fourier") {
    const double inv = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < p; ++i) {
      CVector u(n), v(n);
      for (Index l = 0; l < n; ++l) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(n);
        u(l) = std::polar(inv, ang * (i + 1));
        v(l) = std::polar(inv, ang * (p + i + 1));
      }
      out[static_cast<std::size_t>(i)] = {u, v};
    }
  } else if (kind == "local") {
    for (int i = 0; i < p; ++i) {
      out[static_cast<std::size_t>(i)] = {CVector::Unit(n, i), CVector::Unit(n, i)};
    }
  } else {
    throw ConfigError("make_pairs: unknown kind '" + kind + "'");
  }
  return out;
}

void ZStatConfig::validate() const {
  validate_common(n, trials, pairs, threads);
  if (max_power < 1) throw ConfigError("clt: max_power must be >= 1");
}

CMatrix sample_z(const ZStatConfig& cfg) {
  cfg.validate();
  CMatrix out(cfg.trials, static_cast<Index>(cfg.pairs.size()) * cfg.max_power);
  if (cfg.atom.is_real()) {
    z_trials<RMatrix>(cfg, out);
  } else {
    z_trials<CMatrix>(cfg, out);
  }
  return out;
}

void predicted_z_moments(const ZStatConfig& cfg, CMatrix& cov, CMatrix& pseudo) {
  std::vector<CVector> u, v;
  for (const auto& pr : cfg.pairs) {
    u.push_back(pr.u);
    v.push_back(pr.v);
  }
  const PairScalars ps = pair_scalars(u, v);
  const int p = static_cast<int>(cfg.pairs.size());
  const int jm = cfg.max_power;
  cov = CMatrix::Zero(p * jm, p * jm);
  pseudo = CMatrix::Zero(p * jm, p * jm);
  const cdouble q = atom_pair_moment(cfg.atom, 0, 0);
  for (int i1 = 0; i1 < p; ++i1) {
    for (int i2 = 0; i2 < p; ++i2) {
      for (int j = 0; j < jm; ++j) {
        const Index a = i1 * jm + j;
        const Index b = i2 * jm + j;
        cov(a, b) = ps.c[0][1](i1, i2);
        pseudo(a, b) = std::pow(q, j + 1) * ps.c[0][0](i1, i2);
      }
    }
  }
}

stats::MomentReport estimate_z_covariances(const ZStatConfig& cfg) {
  const CMatrix samples = sample_z(cfg);
  CMatrix cov, pseudo;
  predicted_z_moments(cfg, cov, pseudo);
  return stats::covariance_report(samples, cov, pseudo,
                                  labels_for(static_cast<int>(cfg.pairs.size()), cfg.max_power, "Z", "j="));
}

void SStatConfig::validate() const {
  validate_common(n, trials, pairs, threads);
  if (lambdas.empty()) throw ConfigError("clt: at least one lambda is required");
  for (cdouble l : lambdas) {
    if (!(std::abs(l) > 1.0)) throw ConfigError("clt: every lambda must satisfy |lambda| > 1");
  }
}

SSamples sample_s(const SStatConfig& cfg) {
  cfg.validate();
  const Index cols = static_cast<Index>(cfg.pairs.size() * cfg.lambdas.size());
  SSamples res;
  res.s.resize(cfg.trials, cols);
  res.s_minus_z1.resize(cfg.trials, cols);
  if (cfg.atom.is_real()) {
    s_trials<RMatrix>(cfg, res);
  } else {
    s_trials<CMatrix>(cfg, res);
  }
  return res;
}

void predicted_s_moments(const SStatConfig& cfg, CMatrix& cov, CMatrix& pseudo, CMatrix& g_cov,
                         CMatrix& g_pseudo) {
  std::vector<CVector> u, v;
  for (const auto& pr : cfg.pairs) {
    u.push_back(pr.u);
    v.push_back(pr.v);
  }
  const PairScalars ps = pair_scalars(u, v);
  const int p = static_cast<int>(cfg.pairs.size());
  const int nl = static_cast<int>(cfg.lambdas.size());
  const int dim = p * nl;
  cov = CMatrix::Zero(dim, dim);
  pseudo = CMatrix::Zero(dim, dim);
  g_cov = CMatrix::Zero(dim, dim);
  g_pseudo = CMatrix::Zero(dim, dim);
  const cdouble q0 = atom_pair_moment(cfg.atom, 0, 0);
  for (int i1 = 0; i1 < p; ++i1) {
    for (int i2 = 0; i2 < p; ++i2) {
      for (int l1 = 0; l1 < nl; ++l1) {
        for (int l2 = 0; l2 < nl; ++l2) {
          const cdouble a = cfg.lambdas[static_cast<std::size_t>(l1)];
          const cdouble b = cfg.lambdas[static_cast<std::size_t>(l2)];
          const Index r = i1 * nl + l1;
          const Index c = i2 * nl + l2;
          // Mixed conjugation: q = 1, lambdas (a, conj b).
          const cdouble ab_c = a * std::conj(b);
          const cdouble c01 = ps.c[0][1](i1, i2);
          cov(r, c) = c01 / (ab_c - 1.0);
          g_cov(r, c) = c01 / (ab_c * (ab_c - 1.0));
          const cdouble ab = a * b;
          const cdouble c00 = ps.c[0][0](i1, i2);
          pseudo(r, c) = q0 * c00 / (ab - q0);
          g_pseudo(r, c) = q0 * q0 * c00 / (ab * (ab - q0));
        }
      }
    }
  }
}

SReport estimate_s_covariances(const SStatConfig& cfg) {
  const SSamples smp = sample_s(cfg);
  CMatrix cov, pseudo, g_cov, g_pseudo;
  predicted_s_moments(cfg, cov, pseudo, g_cov, g_pseudo);
  const int p = static_cast<int>(cfg.pairs.size());
  const int nl = static_cast<int>(cfg.lambdas.size());
  SReport rep;
  rep.total = stats::covariance_report(smp.s, cov, pseudo, labels_for(p, nl, "S", "l="));
  rep.g_part = stats::covariance_report(smp.s_minus_z1, g_cov, g_pseudo, labels_for(p, nl, "G", "l="));
  rep.max_series_gap = smp.max_series_gap;
  return rep;
}

std::vector<ScanRow> bounded_moment_scan(Index n, const ensembles::AtomDistribution& atom,
                                         const CVector& u, const CVector& v, int k_max,
                                         int trials, std::uint64_t seed, int threads) {
  if (k_max == 0) k_max = series_cutoff(n);
  if (k_max < 1) throw ConfigError("bounded_moment_scan: k_max must be >= 1");
  ZStatConfig cfg;
  cfg.n = n;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.atom = atom;
  cfg.pairs = {{u, v}};
  cfg.max_power = k_max;
  cfg.threads = threads;
  const CMatrix z = sample_z(cfg);
  std::vector<ScanRow> rows;
  std::vector<cdouble> sq(static_cast<std::size_t>(trials));
  for (int k = 0; k < k_max; ++k) {
    for (int t = 0; t < trials; ++t) sq[static_cast<std::size_t>(t)] = std::norm(z(t, k));
    cdouble mean;
    double se_re = 0.0, se_im = 0.0;
    stats::batch_mean_se(sq, 20, mean, se_re, se_im);
    rows.push_back({k + 1, mean.real(), se_re});
  }
  return rows;
}

}  // namespace olab::cltverify
