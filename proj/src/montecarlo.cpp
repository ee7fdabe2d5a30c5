#include "outlierlab/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "outlierlab/errors.hpp"
#include "outlierlab/lidskii.hpp"

namespace olab::montecarlo {

const char* solver_name(OutlierSolver s) {
  switch (s) {
    case OutlierSolver::automatic: return "auto";
    case OutlierSolver::dense: return "dense";
    case OutlierSolver::secular: return "secular";
  }
  return "auto";
}

OutlierSolver solver_from_name(const std::string& name) {
  if (name == "auto") return OutlierSolver::automatic;
  if (name == "dense") return OutlierSolver::dense;
  if (name == "secular") return OutlierSolver::secular;
  throw ConfigError("unknown outlier solver '" + name + "'");
}

double ExperimentConfig::effective_margin() const {
  if (outlier_margin > 0.0) return outlier_margin;
  if (spec.empty()) return null_margin;
  double m = std::numeric_limits<double>::infinity();
  for (cdouble t : spec.thetas()) m = std::min(m, std::abs(t));
  return (m - 1.0) / 2.0;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (n < 1) throw ConfigError("n must be at least 1");
  spec.validate();
  profile.validate();
  if (n < 4 * static_cast<Index>(spec.rank())) throw ConfigError("n must be at least 4 * rank");
  if (outlier_margin < 0.0) throw ConfigError("outlier_margin must be positive");
  if (!(null_margin > 0.0)) throw ConfigError("null_margin must be positive");
  if (!(effective_margin() > 0.0)) throw ConfigError("outlier margin must be positive");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
    throw ConfigError("max_failure_rate must lie in [0, 1]");
  }
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << n << ";trials=" << trials << ";seed=" << master_seed << ";atom=" << atom.name()
     << ";profile=" << perturbation::profile_kind_name(profile.kind) << ",real=" << profile.real
     << ",C=" << profile.local_size << ",mass=" << profile.local_mass
     << ",r=" << profile.ratio << ",distinct_left=" << profile.distinct_left
     << ";margin=" << outlier_margin << ";null_margin=" << null_margin
     << ";max_failure_rate=" << max_failure_rate << ";solver=" << solver_name(solver)
     << ";jordan=";
  for (const auto& e : spec.entries) {
    os << "(" << e.theta.real() << "," << e.theta.imag() << "," << e.k << "," << e.m << ")";
  }
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double FluctuationSampleSet::failure_rate() const {
  return trials.empty() ? 0.0 : static_cast<double>(failures) / static_cast<double>(trials.size());
}

std::vector<cdouble> FluctuationSampleSet::powered(cdouble theta, int k) const {
  std::vector<cdouble> out;
  for (const auto& t : trials) {
    if (!t.ok) continue;
    for (const auto& g : t.groups) {
      if (g.theta == theta && g.k == k) out.push_back(g.powered_mean);
    }
  }
  return out;
}

std::vector<cdouble> FluctuationSampleSet::fluctuations(cdouble theta, int k) const {
  std::vector<cdouble> out;
  for (const auto& t : trials) {
    if (!t.ok) continue;
    for (const auto& o : t.outliers) {
      if (o.theta == theta && o.k == k) out.push_back(o.f);
    }
  }
  return out;
}

std::vector<double> FluctuationSampleSet::deviations(cdouble theta, int k) const {
  std::vector<double> out;
  for (const auto& t : trials) {
    if (!t.ok) continue;
    for (const auto& o : t.outliers) {
      if (o.theta == theta && o.k == k) out.push_back(std::abs(o.lambda - theta));
    }
  }
  return out;
}

ExperimentContext make_context(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentContext ctx;
  ctx.config = cfg;
  ensembles::SeededRng rng(cfg.master_seed, kPerturbationStream);
  ctx.pm = perturbation::build_perturbation(cfg.n, cfg.spec, cfg.profile, rng);
  ctx.a_dense = ctx.pm.dense();
  ctx.real_arithmetic = cfg.atom.is_real() && ctx.pm.is_real();
  return ctx;
}

std::vector<int> group_by_power(const std::vector<cdouble>& deviations, int k, int m) {
  if (k < 1 || m < 0 || deviations.size() != static_cast<std::size_t>(k * m)) {
    throw ConfigError("group_by_power: expected k * m deviations");
  }
  std::vector<cdouble> pw;
  for (cdouble d : deviations) pw.push_back(std::pow(d, k));
  std::vector<std::size_t> order(deviations.size());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(pw[a]) > std::abs(pw[b]); });
  std::vector<int> group(deviations.size(), -1);
  int next = 0;
  for (std::size_t seed : order) {
    if (group[seed] >= 0) continue;
    group[seed] = next;
    std::vector<std::size_t> rest;
    for (std::size_t a : order) {
      if (group[a] < 0) rest.push_back(a);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(pw[a] - pw[seed]) < std::abs(pw[b] - pw[seed]);
    });
    for (int c = 0; c < k - 1; ++c) group[rest[static_cast<std::size_t>(c)]] = next;
    ++next;
  }
  return group;
}

namespace {

linalg::Spectrum dense_spectrum(const ExperimentContext& ctx, const RMatrix* yr,
                                const CMatrix* yc) {
  if (yr) {
    RMatrix m = *yr;
    if (!ctx.config.spec.empty()) m += ctx.a_dense.real();
    return linalg::eigenvalues(m);
  }
  CMatrix m = *yc;
  if (!ctx.config.spec.empty()) m += ctx.a_dense;
  return linalg::eigenvalues(m);
}

void fill_records(const ExperimentContext& ctx, TrialResult& tr,
                  const std::vector<std::vector<cdouble>>& clusters) {
  const auto& cfg = ctx.config;
  const auto thetas = cfg.spec.thetas();
  const double n = static_cast<double>(cfg.n);
  tr.min_gap_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const cdouble theta = thetas[t];
    const auto blocks = cfg.spec.blocks_of(theta);
    std::vector<cdouble> dev;
    for (cdouble l : clusters[t]) dev.push_back(l - theta);
    const auto ks = lidskii::assign_block_sizes(dev, blocks);

    std::vector<int> sizes;
    for (const auto& b : blocks) {
      if (std::find(sizes.begin(), sizes.end(), b.k) == sizes.end()) sizes.push_back(b.k);
    }
    std::sort(sizes.rbegin(), sizes.rend());
    for (std::size_t c = 0; c + 1 < sizes.size(); ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t a = 0; a < dev.size(); ++a) {
        if (ks[a] == sizes[c]) lo = std::min(lo, std::abs(dev[a]));
        if (ks[a] == sizes[c + 1]) hi = std::max(hi, std::abs(dev[a]));
      }
      tr.min_gap_ratio = std::min(tr.min_gap_ratio, hi > 0.0 ? lo / hi : lo > 0.0 ? 1e300 : 1.0);
    }

    for (int k : sizes) {
      std::vector<std::size_t> idx;
      std::vector<cdouble> kdev;
      for (std::size_t a = 0; a < dev.size(); ++a) {
        if (ks[a] == k) {
          idx.push_back(a);
          kdev.push_back(dev[a]);
        }
      }
      const int m = static_cast<int>(kdev.size()) / k;
      const auto grp = group_by_power(kdev, k, m);
      const double froot = std::pow(n, 0.5 / k);
      const double sq = std::sqrt(n);
      std::vector<cdouble> sums(static_cast<std::size_t>(m), 0.0);
      std::vector<int> fill(static_cast<std::size_t>(m), 0);
      for (std::size_t a = 0; a < kdev.size(); ++a) {
        const int g = grp[a];
        OutlierRecord rec;
        rec.theta = theta;
        rec.k = k;
        rec.j = g;
        rec.i = fill[static_cast<std::size_t>(g)]++;
        rec.lambda = clusters[t][idx[a]];
        rec.f = froot * kdev[a];
        rec.powered = sq * std::pow(kdev[a], k);
        sums[static_cast<std::size_t>(g)] += rec.powered;
        tr.outliers.push_back(rec);
      }
      for (int g = 0; g < m; ++g) {
        tr.groups.push_back({theta, k, g, sums[static_cast<std::size_t>(g)] / static_cast<double>(k)});
      }
    }
  }
}

}  // namespace

TrialResult run_trial(const ExperimentContext& ctx, int trial_idx) {
  const auto& cfg = ctx.config;
  TrialResult tr;
  tr.trial = trial_idx;
  ensembles::SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(trial_idx));
  const double inv = 1.0 / std::sqrt(static_cast<double>(cfg.n));
  RMatrix yr;
  CMatrix yc;
  if (ctx.real_arithmetic) {
    yr = ensembles::sample_real_iid_matrix(cfg.n, cfg.atom, rng) * inv;
  } else {
    yc = ensembles::sample_iid_matrix(cfg.n, cfg.atom, rng) * inv;
  }
  const RMatrix* pr = ctx.real_arithmetic ? &yr : nullptr;
  const CMatrix* pc = ctx.real_arithmetic ? nullptr : &yc;

  if (cfg.spec.empty()) {
    const double edge = 1.0 + cfg.null_margin;
    for (cdouble l : dense_spectrum(ctx, pr, pc)) {
      if (std::abs(l) > edge) tr.stray.push_back(l);
    }
    tr.used_dense = true;
    tr.ok = true;
    return tr;
  }

  const auto thetas = cfg.spec.thetas();
  std::vector<int> expected;
  for (cdouble t : thetas) expected.push_back(cfg.spec.multiplicity(t));
  const double delta = cfg.effective_margin();

  std::vector<std::vector<cdouble>> clusters;
  bool have = false;
  if (cfg.solver != OutlierSolver::dense) {
    const auto& pm = ctx.pm;
    const secular::SecularResult sr =
        pr ? secular::outliers(*pr, pm.V, pm.Ustar, pm.J, thetas, expected, delta)
           : secular::outliers(*pc, pm.V, pm.Ustar, pm.J, thetas, expected, delta);
    if (sr.ok) {
      clusters = sr.roots;
      have = true;
    } else if (cfg.solver == OutlierSolver::secular) {
      tr.failure = "secular solver: " + sr.reason;
      return tr;
    }
  }
  if (!have) {
    tr.used_dense = true;
    clusters.assign(thetas.size(), {});
    for (cdouble l : dense_spectrum(ctx, pr, pc)) {
      std::size_t best = 0;
      for (std::size_t t = 1; t < thetas.size(); ++t) {
        if (std::abs(l - thetas[t]) < std::abs(l - thetas[best])) best = t;
      }
      if (std::abs(l - thetas[best]) < delta) clusters[best].push_back(l);
    }
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      if (clusters[t].size() != static_cast<std::size_t>(expected[t])) {
        std::ostringstream os;
        os << "found " << clusters[t].size() << " outliers near theta=" << thetas[t].real()
           << (thetas[t].imag() < 0 ? "" : "+") << thetas[t].imag() << "i, expected "
           << expected[t];
        tr.failure = os.str();
        return tr;
      }
    }
  }
  // Deterministic order inside each cluster before assignment.
  for (auto& c : clusters) std::sort(c.begin(), c.end(), linalg::lex_less);
  fill_records(ctx, tr, clusters);
  tr.ok = true;
  return tr;
}

linalg::Spectrum trial_spectrum(const ExperimentContext& ctx, int trial_idx) {
  const auto& cfg = ctx.config;
  ensembles::SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(trial_idx));
  const double inv = 1.0 / std::sqrt(static_cast<double>(cfg.n));
  if (ctx.real_arithmetic) {
    const RMatrix y = ensembles::sample_real_iid_matrix(cfg.n, cfg.atom, rng) * inv;
    return dense_spectrum(ctx, &y, nullptr);
  }
  const CMatrix y = ensembles::sample_iid_matrix(cfg.n, cfg.atom, rng) * inv;
  return dense_spectrum(ctx, nullptr, &y);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

FluctuationSampleSet run_experiment(const ExperimentConfig& cfg) {
  const ExperimentContext ctx = make_context(cfg);
  FluctuationSampleSet set;
  set.config = cfg;
  set.config_hash = cfg.hash();
  set.trials.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](int i) {
    set.trials[static_cast<std::size_t>(i)] = run_trial(ctx, i);
  });
  for (const auto& t : set.trials) {
    if (!t.ok) ++set.failures;
    if (t.used_dense && !cfg.spec.empty()) ++set.dense_fallbacks;
  }
  if (set.failure_rate() > cfg.max_failure_rate) {
    std::ostringstream os;
    os << "failure rate " << set.failure_rate() << " exceeds max_failure_rate "
       << cfg.max_failure_rate;
    for (const auto& t : set.trials) {
      if (!t.ok) {
        os << " (first failure, trial " << t.trial << ": " << t.failure << ")";
        break;
      }
    }
    throw NumericalError(os.str());
  }
  return set;
}

}  // namespace olab::montecarlo
