#include "outlierlab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>

#include "outlierlab/cltverify.hpp"
#include "outlierlab/config.hpp"
#include "outlierlab/csv.hpp"
#include "outlierlab/errors.hpp"
#include "outlierlab/lidskii.hpp"
#include "outlierlab/montecarlo.hpp"
#include "outlierlab/stats.hpp"
#include "outlierlab/svg.hpp"
#include "outlierlab/theory.hpp"

namespace olab::commands {

namespace {

constexpr double kSeriesGapTolerance = 1e-6;
constexpr double kScanBound = 10.0;
constexpr std::uint64_t kCompareStream = ensembles::kReservedStreamBase + 3;

config::RunConfig load(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  auto rc = config::load_run_config(opt.config, opt.seed);
  if (opt.threads) {
    if (*opt.threads < 1) throw ConfigError("--threads must be >= 1");
    rc.experiment.threads = *opt.threads;
  }
  return rc;
}

std::string pick_output(const Options& opt, const std::string& configured, const char* what) {
  const std::string path = opt.out.empty() ? configured : opt.out;
  if (path.empty()) throw ConfigError(std::string("no output path for ") + what + " (use --out)");
  return path;
}

std::string fmt_complex(cdouble z) {
  std::ostringstream os;
  os << std::setprecision(6) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

template <class T>
double mean_of(const std::vector<T>& v, double (*fn)(T)) {
  double s = 0.0;
  for (const auto& x : v) s += fn(x);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double norm2(cdouble z) { return std::norm(z); }

lidskii::EliminationConvention convention_from(const std::string& name) {
  return name == "smaller-blocks-first" ? lidskii::EliminationConvention::smaller_blocks_first
                                    : lidskii::EliminationConvention::larger_blocks_first;
}

CMatrix random_p(int rank, std::uint64_t seed, int index) {
  ensembles::SeededRng rng(seed, static_cast<std::uint64_t>(index));
  CMatrix p(rank, rank);
  const double s = std::sqrt(0.5);
  for (Index c = 0; c < rank; ++c) {
    for (Index r = 0; r < rank; ++r) p(r, c) = cdouble(s * rng.normal(), s * rng.normal());
  }
  return p;
}

}  // namespace

int simulate(const Options& opt, std::ostream& log) {
  const auto rc = load(opt);
  const std::string out = pick_output(opt, rc.outputs.samples, "simulate");
  const auto& cfg = rc.experiment;
  const std::string hash = rc.hash();
  const auto set = montecarlo::run_experiment(cfg);
  csv::write_fluctuations(out, hash, csv::rows_from_experiment(set));

  if (!rc.outputs.spectrum.empty()) {
    const auto ctx = montecarlo::make_context(cfg);
    const auto spectrum = montecarlo::trial_spectrum(ctx, 0);
    const auto thetas = cfg.spec.thetas();
    const double margin = cfg.effective_margin();
    std::vector<bool> flag;
    for (cdouble l : spectrum) {
      bool o = false;
      if (thetas.empty()) {
        o = std::abs(l) > 1.0 + cfg.null_margin;
      } else {
        for (cdouble t : thetas) o = o || std::abs(l - t) < margin;
      }
      flag.push_back(o);
    }
    csv::write_spectrum(rc.outputs.spectrum, hash, 0, cfg.n, cfg.spec, spectrum, flag);
    log << "spectrum: " << spectrum.size() << " eigenvalues, "
        << std::count(flag.begin(), flag.end(), true) << " flagged outliers -> " << rc.outputs.spectrum << "\n";
  }

  log << "config_hash " << hash << "\n";
  log << "trials " << cfg.trials << ", failures " << set.failures << " (rate " << set.failure_rate()
      << "), dense fallbacks " << set.dense_fallbacks << "\n";
  if (cfg.spec.empty()) {
    int with_stray = 0;
    for (const auto& t : set.trials) with_stray += t.stray.empty() ? 0 : 1;
    log << "trials with eigenvalues beyond 1 + " << cfg.null_margin << ": " << with_stray << "\n";
  }
  for (cdouble t : cfg.spec.thetas()) {
    for (const auto& b : cfg.spec.blocks_of(t)) {
      if (b.j != 0) continue;
      const auto f = set.fluctuations(t, b.k);
      const auto pw = set.powered(t, b.k);
      log << "theta " << fmt_complex(t) << " k=" << b.k << ": " << f.size() << " fluctuations, E|f|^2 "
          << mean_of(f, norm2) << ", E|powered mean|^2 " << mean_of(pw, norm2) << "\n";
    }
  }
  log << "samples -> " << out << "\n";
  return kExitOk;
}

int predict(const Options& opt, std::ostream& log) {
  const auto rc = load(opt);
  const std::string out = pick_output(opt, rc.outputs.theory, "predict");
  const auto& cfg = rc.experiment;
  if (cfg.spec.empty()) throw ConfigError("predict: the jordan list must not be empty");
  const auto ctx = montecarlo::make_context(cfg);
  theory::LimitLawOptions lo;
  lo.use_analytic_limits = rc.predict.use_analytic_limits;
  lo.support_exponent = rc.predict.support_exponent;
  const auto law = theory::build_limit_law(ctx.pm, cfg.atom, lo);
  const int count = rc.predict.samples > 0 ? rc.predict.samples : cfg.trials;
  const auto samples = theory::sample_many(law, count, cfg.master_seed, cfg.threads);
  const auto rows = csv::rows_from_theory(samples);
  const std::string hash = rc.hash();
  csv::write_fluctuations(out, hash, rows);

  int resamples = 0;
  for (const auto& s : samples) resamples += s.resamples;
  log << "config_hash " << hash << "\n";
  log << "G realization: " << theory::g_kind_name(law.g_kind) << ", " << count << " draws, "
      << resamples << " singular-pivot redraws\n";
  for (const auto& gp : csv::group_powers(rows)) {
    std::vector<cdouble> f;
    for (const auto& r : rows) {
      if (r.theta == gp.theta && r.k == gp.k) f.push_back(r.f);
    }
    log << "theta " << fmt_complex(gp.theta) << " k=" << gp.k << ": E|f|^2 " << mean_of(f, norm2)
        << ", E|fk|^2 " << mean_of(gp.values, norm2) << "\n";
  }
  log << "theory samples -> " << out << "\n";
  return kExitOk;
}

int compare(const Options& opt, std::ostream& log) {
  if (opt.input.empty() || opt.theory.empty()) throw ConfigError("compare needs a Monte Carlo CSV and a theory CSV");
  config::CompareSection sec;
  std::uint64_t seed = opt.seed.value_or(1);
  if (!opt.config.empty()) {
    const auto rc = load(opt);
    sec = rc.compare;
    seed = rc.experiment.master_seed;
  }
  std::string hash_mc, hash_th;
  const auto mc = csv::group_powers(csv::read_fluctuations(opt.input, &hash_mc));
  const auto th = csv::group_powers(csv::read_fluctuations(opt.theory, &hash_th));
  if (mc.empty()) throw ConfigError("compare: '" + opt.input + "' has no samples");
  const std::string hash = config::fnv1a_hex(hash_mc + ":" + hash_th);

  csv::Table table;
  table.config_hash = hash;
  table.comments = {"mc_hash=" + hash_mc, "theory_hash=" + hash_th};
  table.header = {"theta_re", "theta_im", "k", "n_mc", "n_theory", "energy", "p_value",
                  "ks_abs_p", "ks_arg_p", "ks_re_p", "ks_im_p", "pass"};
  bool all_pass = true;
  ensembles::SeededRng rng(seed, kCompareStream);
  for (const auto& a : mc) {
    const auto it = std::find_if(th.begin(), th.end(), [&](const csv::GroupedPowers& b) {
      return b.k == a.k && std::abs(b.theta - a.theta) <= 1e-12 * std::max(1.0, std::abs(a.theta));
    });
    if (it == th.end()) {
      throw ConfigError("compare: theory CSV has no samples for theta " + fmt_complex(a.theta) +
                        " k=" + std::to_string(a.k));
    }
    const auto res = stats::energy_distance_test(a.values, it->values, sec.permutations, rng);
    const bool pass = res.p_value >= sec.alpha;
    all_pass = all_pass && pass;
    table.rows.push_back({csv::format_double(a.theta.real()), csv::format_double(a.theta.imag()),
                          std::to_string(a.k), std::to_string(a.values.size()),
                          std::to_string(it->values.size()), csv::format_double(res.statistic),
                          csv::format_double(res.p_value), csv::format_double(res.ks_abs.p_value),
                          csv::format_double(res.ks_arg.p_value), csv::format_double(res.ks_re.p_value),
                          csv::format_double(res.ks_im.p_value), pass ? "1" : "0"});
    log << "theta " << fmt_complex(a.theta) << " k=" << a.k << ": energy " << res.statistic << ", p "
        << res.p_value << " (alpha " << sec.alpha << ") " << (pass ? "PASS" : "FAIL") << "\n";
  }
  if (!opt.out.empty()) {
    csv::write_table(opt.out, table);
    log << "report -> " << opt.out << "\n";
  }
  return all_pass ? kExitOk : kExitGate;
}

int lidskii(const Options& opt, std::ostream& log) {
  const auto rc = load(opt);
  const std::string out = pick_output(opt, rc.outputs.theory, "lidskii");
  const auto& spec = rc.experiment.spec;
  if (spec.empty()) throw ConfigError("lidskii: the jordan list must not be empty");
  const auto& sec = rc.lidskii;
  const int r = spec.rank();
  const auto conv = convention_from(sec.convention);
  std::vector<CMatrix> ps;
  if (sec.p) {
    if (sec.p->rows() != r || sec.p->cols() != r) {
      throw ConfigError("lidskii.p must be " + std::to_string(r) + " x " + std::to_string(r));
    }
    ps.push_back(*sec.p);
  } else {
    for (int i = 0; i < sec.p_count; ++i) ps.push_back(random_p(r, sec.p_seed, i));
  }

  const std::string hash = rc.hash();
  csv::Table pred;
  pred.config_hash = hash;
  pred.header = {"p_index", "theta_re", "theta_im", "k", "j", "i", "xi_re", "xi_im", "f_re", "f_im"};
  csv::Table sweep;
  sweep.config_hash = hash;
  sweep.header = {"p_index", "theta_re", "theta_im", "k", "slope", "expected_slope", "slope_ok",
                  "match_error", "match_tolerance", "match_ok", "ambiguous"};
  bool all_ok = true;
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    const auto prediction = lidskii::lidskii_predict(spec, ps[pi], conv);
    for (const auto& rec : prediction.records) {
      pred.rows.push_back({std::to_string(pi), csv::format_double(rec.theta.real()),
                           csv::format_double(rec.theta.imag()), std::to_string(rec.k), std::to_string(rec.j),
                           std::to_string(rec.i), csv::format_double(rec.xi.real()),
                           csv::format_double(rec.xi.imag()), csv::format_double(rec.fluctuation.real()),
                           csv::format_double(rec.fluctuation.imag())});
    }
    if (sec.eps.empty()) continue;
    const auto rep = lidskii::verify_slope(spec, ps[pi], sec.eps, conv);
    all_ok = all_ok && rep.all_ok();
    for (const auto& g : rep.groups) {
      sweep.rows.push_back({std::to_string(pi), csv::format_double(g.theta.real()),
                            csv::format_double(g.theta.imag()), std::to_string(g.k),
                            csv::format_double(g.slope), csv::format_double(g.expected_slope),
                            g.slope_ok ? "1" : "0", csv::format_double(g.match_error),
                            csv::format_double(g.match_tolerance), g.match_ok ? "1" : "0",
                            rep.ambiguous ? "1" : "0"});
      log << "P" << pi << " theta " << fmt_complex(g.theta) << " k=" << g.k << ": slope " << g.slope
          << " (expected " << g.expected_slope << "), match error " << g.match_error << " (tol "
          << g.match_tolerance << ")" << (g.slope_ok && g.match_ok ? " ok" : " FAIL") << "\n";
    }
  }
  csv::write_table(out, pred);
  log << "config_hash " << hash << "\n" << "convention " << lidskii::convention_name(conv) << ", "
      << ps.size() << " perturbation(s), predictions -> " << out << "\n";
  if (!sec.eps.empty()) {
    std::string sweep_path = rc.outputs.report;
    if (sweep_path.empty()) {
      const std::filesystem::path p(out);
      sweep_path = (p.parent_path() / (p.stem().string() + "_sweep.csv")).string();
    }
    csv::write_table(sweep_path, sweep);
    log << "eps sweep -> " << sweep_path << (all_ok ? " (all groups ok)" : " (failures)") << "\n";
  }
  return all_ok ? kExitOk : kExitGate;
}

int clt(const Options& opt, std::ostream& log) {
  const auto rc = load(opt);
  const std::string out = pick_output(opt, rc.outputs.report, "clt");
  const auto& cfg = rc.experiment;
  const auto& sec = rc.clt;
  const std::string hash = rc.hash();
  ensembles::SeededRng pair_rng(cfg.master_seed, cltverify::kPairStream);
  const auto pairs = cltverify::make_pairs(cfg.n, sec.pairs, sec.pair_kind, pair_rng);

  if (sec.statistic == "z") {
    cltverify::ZStatConfig zc;
    zc.n = cfg.n;
    zc.trials = cfg.trials;
    zc.seed = cfg.master_seed;
    zc.atom = cfg.atom;
    zc.pairs = pairs;
    zc.max_power = sec.max_power;
    zc.threads = cfg.threads;
    const auto rep = cltverify::estimate_z_covariances(zc);
    csv::write_table(out, csv::moment_report_table(hash, rep, "z"));
    log << "config_hash " << hash << "\nZ moments: " << rep.rows.size() << " checks, max |z| "
        << rep.max_abs_z() << (rep.all_pass() ? ", all within " : ", FAIL beyond ") << rep.threshold
        << " SE\nreport -> " << out << "\n";
    return rep.all_pass() ? kExitOk : kExitGate;
  }
  if (sec.statistic == "s") {
    cltverify::SStatConfig sc;
    sc.n = cfg.n;
    sc.trials = cfg.trials;
    sc.seed = cfg.master_seed;
    sc.atom = cfg.atom;
    sc.pairs = pairs;
    sc.lambdas = sec.lambdas;
    sc.threads = cfg.threads;
    const auto rep = cltverify::estimate_s_covariances(sc);
    auto table = csv::moment_report_table(hash, rep.total, "s");
    csv::append_moment_report(table, rep.g_part, "g");
    table.comments.push_back("max_series_gap=" + csv::format_double(rep.max_series_gap));
    csv::write_table(out, table);
    const bool gap_ok = rep.max_series_gap <= kSeriesGapTolerance;
    const bool ok = rep.total.all_pass() && rep.g_part.all_pass() && gap_ok;
    log << "config_hash " << hash << "\nS moments: max |z| " << rep.total.max_abs_z() << ", g part max |z| "
        << rep.g_part.max_abs_z() << ", series gap " << rep.max_series_gap << (ok ? " PASS" : " FAIL")
        << "\nreport -> " << out << "\n";
    return ok ? kExitOk : kExitGate;
  }
  // Bounded-moment scan on the first pair.
  const auto rows = cltverify::bounded_moment_scan(cfg.n, cfg.atom, pairs.front().u, pairs.front().v,
                                                   sec.max_power, cfg.trials, cfg.master_seed, cfg.threads);
  csv::Table table;
  table.config_hash = hash;
  table.header = {"k", "mean_abs2", "se", "pass"};
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : rows) {
    const bool pass = r.mean <= kScanBound;
    ok = ok && pass;
    worst = std::max(worst, r.mean);
    table.rows.push_back({std::to_string(r.k), csv::format_double(r.mean), csv::format_double(r.se),
                          pass ? "1" : "0"});
  }
  csv::write_table(out, table);
  log << "config_hash " << hash << "\nscan k=1.." << rows.size() << ": max E|Z_k|^2 " << worst << " (bound "
      << kScanBound << ")" << (ok ? " PASS" : " FAIL") << "\nreport -> " << out << "\n";
  return ok ? kExitOk : kExitGate;
}

int plot(const Options& opt, std::ostream& log) {
  if (opt.input.empty()) throw ConfigError("plot needs an input CSV");
  std::string out = opt.out;
  if (out.empty() && !opt.config.empty()) out = load(opt).outputs.plot;
  if (out.empty()) throw ConfigError("no output path for plot (use --out)");
  const csv::Table t = csv::read_table(opt.input);
  if (t.rows.empty()) throw ConfigError("plot: '" + opt.input + "' has no rows");
  svg::ScatterPlot plot;
  plot.config_hash = t.config_hash;
  if (t.has_column("re") && t.has_column("im")) {
    const auto g = csv::spectrum_guides(t);
    const std::size_t re = t.column("re"), im = t.column("im");
    const bool flagged = t.has_column("outlier");
    svg::Series bulk{"eigenvalues", "#4a6fa5", 1.4, {}};
    svg::Series outl{"outliers", "#d62728", 3.0, {}};
    for (const auto& r : t.rows) {
      const cdouble z(csv::parse_double(r[re]), csv::parse_double(r[im]));
      (flagged && r[t.column("outlier")] == "1" ? outl : bulk).points.push_back(z);
    }
    plot.title = "spectrum, n = " + std::to_string(g.n > 0 ? g.n : static_cast<Index>(t.rows.size()));
    plot.series = {bulk, outl};
    plot.circles.push_back({0.0, 1.0, "#333", false});
    if (g.n > 0) {
      for (const auto& [theta, k] : g.thetas) {
        plot.circles.push_back({theta, std::pow(static_cast<double>(g.n), -0.5 / k), "#2ca02c", true});
      }
    }
  } else {
    const auto rows = csv::read_fluctuations(opt.input);
    std::map<std::pair<std::pair<double, double>, int>, svg::Series> groups;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (const auto& r : rows) {
      auto& s = groups[{{r.theta.real(), r.theta.imag()}, r.k}];
      if (s.label.empty()) {
        s.label = "theta " + fmt_complex(r.theta) + ", k=" + std::to_string(r.k);
        s.color = palette[(groups.size() - 1) % 6];
        s.radius = 1.8;
      }
      s.points.push_back(r.f);
    }
    plot.title = "normalized fluctuations";
    for (auto& [key, s] : groups) plot.series.push_back(std::move(s));
  }
  plot.write(out);
  log << "plot -> " << out << "\n";
  return kExitOk;
}

int run_guarded(int (*fn)(const Options&, std::ostream&), const Options& opt, std::ostream& log,
                std::ostream& err) {
  try {
    return fn(opt, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace olab::commands
