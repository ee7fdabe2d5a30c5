#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "outlierlab/commands.hpp"
#include "outlierlab/config.hpp"
#include "outlierlab/csv.hpp"
#include "outlierlab/errors.hpp"
#include "outlierlab/svg.hpp"

using namespace olab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_doc() {
  return json::parse(R"({
    "n": 100, "trials": 6, "seed": 7,
    "atom": {"kind": "complex-gaussian"},
    "jordan": [{"theta": 3, "k": 1, "m": 1}, {"theta": [0, 4], "k": 2, "m": 1}],
    "profile": {"kind": "delocalized-haar"}
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "outlierlab_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto rc = config::parse_run_config(base_doc());
  CHECK(rc.experiment.n == 100);
  CHECK(rc.experiment.spec.rank() == 3);
  CHECK(rc.experiment.spec.entries[1].theta == cdouble(0, 4.0));
  CHECK(rc.hash().size() == 16);
  CHECK(config::parse_run_config(base_doc(), 8).hash() != rc.hash());

  auto with_out = base_doc();
  with_out["outputs"] = {{"samples", "x.csv"}};
  with_out["threads"] = 4;
  CHECK(config::parse_run_config(with_out).hash() == rc.hash());
}

TEST_CASE("config rejects unknown keys and invalid values") {
  auto d = base_doc();
  d["sead"] = 1;
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  d = base_doc();
  d["atom"]["shape"] = "x";
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  d = base_doc();
  d["trials"] = 0;
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  d = base_doc();
  d["jordan"][0]["theta"] = 0.5;
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  d = base_doc();
  d["clt"] = {{"statistic", "w"}};
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  d = base_doc();
  d["lidskii"] = {{"eps", {1e-3, 1e-2}}};
  CHECK_THROWS_AS(config::parse_run_config(d), ConfigError);
  CHECK_THROWS_AS(config::load_run_config(scratch("missing.json").string()), ConfigError);
}

TEST_CASE("Jordan and profile JSON round-trip") {
  const auto rc = config::parse_run_config(base_doc());
  const auto spec = config::jordan_from_json(config::jordan_to_json(rc.experiment.spec));
  REQUIRE(spec.entries.size() == 2);
  CHECK(spec.entries[1].theta == cdouble(0, 4.0));
  CHECK(spec.entries[1].k == 2);
  const auto prof = config::profile_from_json(config::profile_to_json(rc.experiment.profile));
  CHECK(prof.kind == perturbation::ProfileKind::delocalized_haar);
}

TEST_CASE("fluctuation CSV round-trip is exact") {
  std::vector<csv::FluctuationRow> rows;
  rows.push_back({0, cdouble(1.5, 1.0), 2, 0, 1, cdouble(0.1, -1.0 / 3.0), cdouble(1e-300, 2.5e17)});
  rows.push_back({1, 2.0, 1, 0, 0, cdouble(-0.7, 0.0), cdouble(-0.7, 0.0)});
  const auto path = scratch("round.csv").string();
  csv::write_fluctuations(path, "abc", rows);
  std::string hash;
  const auto back = csv::read_fluctuations(path, &hash);
  CHECK(hash == "abc");
  REQUIRE(back.size() == 2);
  CHECK(back[0].f == rows[0].f);
  CHECK(back[0].fk == rows[0].fk);
  CHECK(back[0].theta == rows[0].theta);
  CHECK(back[1].k == 1);
  const auto groups = csv::group_powers(back);
  CHECK(groups.size() == 2);
}

TEST_CASE("reading a malformed CSV fails") {
  const auto path = scratch("bad.csv");
  std::ofstream(path) << "sample,theta_re\n0,1\n";
  CHECK_THROWS_AS(csv::read_fluctuations(path.string()), ConfigError);
}

TEST_CASE("empty plot input fails") {
  svg::ScatterPlot p;
  CHECK_THROWS_AS(p.render(), ConfigError);
  const auto path = scratch("empty.csv");
  csv::write_fluctuations(path.string(), "h", {});
  commands::Options opt;
  opt.input = path.string();
  opt.out = scratch("empty.svg").string();
  std::ostringstream log, err;
  CHECK(commands::run_guarded(&commands::plot, opt, log, err) == commands::kExitConfig);
}

TEST_CASE("simulate output is byte-identical across reruns and thread counts") {
  const auto cfg_path = scratch("sim.json");
  std::ofstream(cfg_path) << base_doc().dump(2);
  commands::Options opt;
  opt.config = cfg_path.string();
  std::ostringstream log, err;
  opt.out = scratch("sim_a.csv").string();
  REQUIRE(commands::run_guarded(&commands::simulate, opt, log, err) == commands::kExitOk);
  opt.out = scratch("sim_b.csv").string();
  opt.threads = 3;
  REQUIRE(commands::run_guarded(&commands::simulate, opt, log, err) == commands::kExitOk);
  const auto a = slurp(scratch("sim_a.csv"));
  CHECK(!a.empty());
  CHECK(a == slurp(scratch("sim_b.csv")));
  CHECK(a.rfind("# config_hash=" + config::load_run_config(cfg_path.string()).hash(), 0) == 0);
}

TEST_CASE("command exit codes") {
  commands::Options opt;
  opt.config = scratch("nope.json").string();
  std::ostringstream log, err;
  CHECK(commands::run_guarded(&commands::simulate, opt, log, err) == commands::kExitConfig);
  const auto cfg_path = scratch("unknown.json");
  auto d = base_doc();
  d["extra"] = true;
  std::ofstream(cfg_path) << d.dump();
  opt.config = cfg_path.string();
  CHECK(commands::run_guarded(&commands::predict, opt, log, err) == commands::kExitConfig);
}
