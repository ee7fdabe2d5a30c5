#include "outlierlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>

#include "outlierlab/errors.hpp"

namespace olab::config {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

int get_int(const json& j, const std::string& where) {
  const auto v = get_integer(j, where);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(where + ": integer out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t get_seed(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = get_integer(j, where);
  if (v < 0) throw ConfigError(where + ": seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

// A complex number is [re, im] or a bare real number.
cdouble get_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [re, im]");
  return {get_number(j[0], where + "[0]"), get_number(j[1], where + "[1]")};
}

CMatrix get_complex_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ConfigError(where + ": rows must be non-empty arrays");
  const Index cols = static_cast<Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ConfigError(where + ": ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = get_complex(row[static_cast<std::size_t>(c)],
                            where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

ensembles::AtomDistribution atom_from_json(const json& j) {
  reject_unknown(j, "atom", {"kind", "params"});
  if (!j.contains("kind")) throw ConfigError("atom: missing 'kind'");
  const std::string kind = get_string(j["kind"], "atom.kind");
  double half_width = 0.0;
  if (j.contains("params")) {
    const json& p = j["params"];
    reject_unknown(p, "atom.params", {"half_width"});
    if (p.contains("half_width")) half_width = get_number(p["half_width"], "atom.params.half_width");
  }
  return ensembles::AtomDistribution::from_name(kind, half_width);
}

void parse_margins(const json& j, montecarlo::ExperimentConfig& cfg) {
  reject_unknown(j, "margins", {"outlier", "null", "max_failure_rate"});
  if (j.contains("outlier")) cfg.outlier_margin = get_number(j["outlier"], "margins.outlier");
  if (j.contains("null")) cfg.null_margin = get_number(j["null"], "margins.null");
  if (j.contains("max_failure_rate")) {
    cfg.max_failure_rate = get_number(j["max_failure_rate"], "margins.max_failure_rate");
  }
  if (cfg.outlier_margin < 0.0) throw ConfigError("margins.outlier must be >= 0 (0 selects the default)");
  if (!(cfg.max_failure_rate >= 0.0 && cfg.max_failure_rate <= 1.0)) {
    throw ConfigError("margins.max_failure_rate must lie in [0, 1]");
  }
}

OutputPaths parse_outputs(const json& j) {
  reject_unknown(j, "outputs", {"samples", "spectrum", "theory", "report", "plot"});
  OutputPaths o;
  auto take = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = get_string(j[key], std::string("outputs.") + key);
  };
  take("samples", o.samples);
  take("spectrum", o.spectrum);
  take("theory", o.theory);
  take("report", o.report);
  take("plot", o.plot);
  return o;
}

PredictSection parse_predict(const json& j) {
  reject_unknown(j, "predict", {"samples", "use_analytic_limits", "support_exponent"});
  PredictSection s;
  if (j.contains("samples")) s.samples = get_int(j["samples"], "predict.samples");
  if (j.contains("use_analytic_limits")) {
    s.use_analytic_limits = get_bool(j["use_analytic_limits"], "predict.use_analytic_limits");
  }
  if (j.contains("support_exponent")) {
    s.support_exponent = get_number(j["support_exponent"], "predict.support_exponent");
  }
  if (s.samples < 0) throw ConfigError("predict.samples must be >= 0");
  if (!(s.support_exponent > 0.0 && s.support_exponent < 0.5)) {
    throw ConfigError("predict.support_exponent must lie in (0, 0.5)");
  }
  return s;
}

LidskiiSection parse_lidskii(const json& j) {
  reject_unknown(j, "lidskii", {"p", "p_seed", "p_count", "eps", "convention"});
  LidskiiSection s;
  if (j.contains("p")) s.p = get_complex_matrix(j["p"], "lidskii.p");
  if (j.contains("p_seed")) s.p_seed = get_seed(j["p_seed"], "lidskii.p_seed");
  if (j.contains("p_count")) s.p_count = get_int(j["p_count"], "lidskii.p_count");
  if (j.contains("eps")) {
    if (!j["eps"].is_array()) throw ConfigError("lidskii.eps: expected an array");
    for (const auto& e : j["eps"]) s.eps.push_back(get_number(e, "lidskii.eps"));
  }
  if (j.contains("convention")) s.convention = get_string(j["convention"], "lidskii.convention");
  if (s.p_count < 1) throw ConfigError("lidskii.p_count must be >= 1");
  if (s.convention != "larger-blocks-first" && s.convention != "smaller-blocks-first") {
    throw ConfigError("lidskii.convention must be 'larger-blocks-first' or 'smaller-blocks-first'");
  }
  if (!s.eps.empty()) {
    if (s.eps.size() < 2) throw ConfigError("lidskii.eps needs at least two values");
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
      if (!(s.eps[i] > 0.0)) throw ConfigError("lidskii.eps values must be positive");
      if (i > 0 && !(s.eps[i] < s.eps[i - 1])) throw ConfigError("lidskii.eps must be strictly decreasing");
    }
  }
  return s;
}

CltSection parse_clt(const json& j) {
  reject_unknown(j, "clt", {"statistic", "pair_kind", "pairs", "max_power", "lambdas"});
  CltSection s;
  if (j.contains("statistic")) s.statistic = get_string(j["statistic"], "clt.statistic");
  if (j.contains("pair_kind")) s.pair_kind = get_string(j["pair_kind"], "clt.pair_kind");
  if (j.contains("pairs")) s.pairs = get_int(j["pairs"], "clt.pairs");
  if (j.contains("max_power")) s.max_power = get_int(j["max_power"], "clt.max_power");
  if (j.contains("lambdas")) {
    if (!j["lambdas"].is_array() || j["lambdas"].empty()) {
      throw ConfigError("clt.lambdas: expected a non-empty array");
    }
    s.lambdas.clear();
    for (const auto& l : j["lambdas"]) s.lambdas.push_back(get_complex(l, "clt.lambdas"));
  }
  if (s.statistic != "z" && s.statistic != "s" && s.statistic != "scan") {
    throw ConfigError("clt.statistic must be 'z', 's' or 'scan'");
  }
  if (s.pairs < 1) throw ConfigError("clt.pairs must be >= 1");
  if (s.statistic == "z" && (s.max_power < 1 || s.max_power > 8)) {
    throw ConfigError("clt.max_power must lie in [1, 8]");
  }
  if (s.statistic == "scan" && s.max_power < 0) throw ConfigError("clt.max_power must be >= 0 for a scan");
  return s;
}

CompareSection parse_compare(const json& j) {
  reject_unknown(j, "compare", {"alpha", "permutations"});
  CompareSection s;
  if (j.contains("alpha")) s.alpha = get_number(j["alpha"], "compare.alpha");
  if (j.contains("permutations")) s.permutations = get_int(j["permutations"], "compare.permutations");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ConfigError("compare.alpha must lie in (0, 1)");
  if (s.permutations < 1) throw ConfigError("compare.permutations must be >= 1");
  return s;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical.dump()); }

perturbation::JordanSpec jordan_from_json(const json& j, int rank_cap) {
  if (!j.is_array()) throw ConfigError("jordan: expected an array of blocks");
  perturbation::JordanSpec spec;
  spec.rank_cap = rank_cap;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "jordan[" + std::to_string(i) + "]";
    reject_unknown(j[i], where, {"theta", "k", "m"});
    if (!j[i].contains("theta")) throw ConfigError(where + ": missing 'theta'");
    perturbation::JordanEntry e;
    e.theta = get_complex(j[i]["theta"], where + ".theta");
    if (j[i].contains("k")) e.k = get_int(j[i]["k"], where + ".k");
    if (j[i].contains("m")) e.m = get_int(j[i]["m"], where + ".m");
    spec.entries.push_back(e);
  }
  spec.validate();
  return spec;
}

perturbation::EigenvectorProfile profile_from_json(const json& j) {
  reject_unknown(j, "profile", {"kind", "params"});
  if (!j.contains("kind")) throw ConfigError("profile: missing 'kind'");
  perturbation::EigenvectorProfile p;
  p.kind = perturbation::profile_kind_from_name(get_string(j["kind"], "profile.kind"));
  if (j.contains("params")) {
    const json& q = j["params"];
    reject_unknown(q, "profile.params", {"real", "local_size", "local_mass", "ratio", "distinct_left"});
    if (q.contains("real")) p.real = get_bool(q["real"], "profile.params.real");
    if (q.contains("local_size")) p.local_size = get_int(q["local_size"], "profile.params.local_size");
    if (q.contains("local_mass")) p.local_mass = get_number(q["local_mass"], "profile.params.local_mass");
    if (q.contains("ratio")) p.ratio = get_number(q["ratio"], "profile.params.ratio");
    if (q.contains("distinct_left")) {
      p.distinct_left = get_bool(q["distinct_left"], "profile.params.distinct_left");
    }
  }
  p.validate();
  return p;
}

json jordan_to_json(const perturbation::JordanSpec& spec) {
  json out = json::array();
  for (const auto& e : spec.entries) {
    out.push_back({{"theta", {e.theta.real(), e.theta.imag()}}, {"k", e.k}, {"m", e.m}});
  }
  return out;
}

json profile_to_json(const perturbation::EigenvectorProfile& p) {
  return {{"kind", std::string(perturbation::profile_kind_name(p.kind))},
          {"params",
           {{"real", p.real},
            {"local_size", p.local_size},
            {"local_mass", p.local_mass},
            {"ratio", p.ratio},
            {"distinct_left", p.distinct_left}}}};
}

RunConfig parse_run_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  reject_unknown(doc, "config",
                 {"n", "trials", "seed", "atom", "jordan", "rank_cap", "profile", "margins", "solver",
                  "threads", "outputs", "predict", "lidskii", "clt", "compare"});
  RunConfig rc;
  auto& e = rc.experiment;
  if (doc.contains("n")) {
    const auto n = get_integer(doc["n"], "n");
    if (n < 1) throw ConfigError("n must be >= 1");
    e.n = static_cast<Index>(n);
  }
  if (doc.contains("trials")) {
    e.trials = get_int(doc["trials"], "trials");
    if (e.trials < 1) throw ConfigError("trials must be >= 1");
  }
  if (doc.contains("seed")) e.master_seed = get_seed(doc["seed"], "seed");
  if (seed_override) e.master_seed = *seed_override;
  if (doc.contains("atom")) e.atom = atom_from_json(doc["atom"]);
  int rank_cap = 16;
  if (doc.contains("rank_cap")) rank_cap = get_int(doc["rank_cap"], "rank_cap");
  if (doc.contains("jordan")) e.spec = jordan_from_json(doc["jordan"], rank_cap);
  e.spec.rank_cap = rank_cap;
  if (doc.contains("profile")) e.profile = profile_from_json(doc["profile"]);
  if (doc.contains("margins")) parse_margins(doc["margins"], e);
  if (doc.contains("solver")) e.solver = montecarlo::solver_from_name(get_string(doc["solver"], "solver"));
  if (doc.contains("threads")) {
    e.threads = get_int(doc["threads"], "threads");
    if (e.threads < 1) throw ConfigError("threads must be >= 1");
  }
  if (doc.contains("outputs")) rc.outputs = parse_outputs(doc["outputs"]);
  if (doc.contains("predict")) rc.predict = parse_predict(doc["predict"]);
  if (doc.contains("lidskii")) rc.lidskii = parse_lidskii(doc["lidskii"]);
  if (doc.contains("clt")) rc.clt = parse_clt(doc["clt"]);
  if (doc.contains("compare")) rc.compare = parse_compare(doc["compare"]);
  e.validate();

  rc.canonical = doc;
  rc.canonical.erase("outputs");
  rc.canonical.erase("threads");
  rc.canonical["seed"] = e.master_seed;
  return rc;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + err.what());
  }
  return parse_run_config(doc, seed_override);
}

}  // namespace olab::config
