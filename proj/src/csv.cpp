#include "outlierlab/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "outlierlab/errors.hpp"

namespace olab::csv {

namespace {

constexpr const char* kHashPrefix = "# config_hash=";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("csv: '" + s + "' is not an integer");
  }
  return v;
}

}  // namespace

const std::vector<std::string> kFluctuationHeader{"sample", "theta_re", "theta_im", "k",  "j",
                                                  "i",      "f_re",     "f_im",     "fk_re", "fk_im"};

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("csv: '" + s + "' is not a number");
  }
  return v;
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << kHashPrefix << table.config_hash << '\n';
  for (const auto& c : table.comments) out << "# " << c << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind(kHashPrefix, 0) == 0) {
        t.config_hash = line.substr(std::string(kHashPrefix).size());
      } else {
        t.comments.push_back(line.substr(std::min<std::size_t>(2, line.size())));
      }
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ConfigError("csv '" + path + "': row with " + std::to_string(cells.size()) +
                        " cells under a header of " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ConfigError("csv '" + path + "' is empty");
  return t;
}

std::vector<FluctuationRow> rows_from_experiment(const montecarlo::FluctuationSampleSet& set) {
  std::vector<FluctuationRow> rows;
  for (const auto& tr : set.trials) {
    if (!tr.ok) continue;
    for (const auto& o : tr.outliers) rows.push_back({tr.trial, o.theta, o.k, o.j, o.i, o.f, o.powered});
  }
  return rows;
}

std::vector<FluctuationRow> rows_from_theory(const std::vector<theory::TheoreticalSample>& samples) {
  std::vector<FluctuationRow> rows;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (const auto& r : samples[s].records) {
      rows.push_back({static_cast<int>(s), r.theta, r.k, r.j, r.i, r.f, r.fk});
    }
  }
  return rows;
}

void write_fluctuations(const std::string& path, const std::string& config_hash,
                        const std::vector<FluctuationRow>& rows) {
  Table t;
  t.config_hash = config_hash;
  t.header = kFluctuationHeader;
  t.rows.reserve(rows.size());
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.sample), format_double(r.theta.real()),
                      format_double(r.theta.imag()), std::to_string(r.k), std::to_string(r.j),
                      std::to_string(r.i), format_double(r.f.real()), format_double(r.f.imag()),
                      format_double(r.fk.real()), format_double(r.fk.imag())});
  }
  write_table(path, t);
}

std::vector<FluctuationRow> read_fluctuations(const std::string& path, std::string* config_hash) {
  const Table t = read_table(path);
  std::vector<std::size_t> col;
  for (const auto& name : kFluctuationHeader) col.push_back(t.column(name));
  std::vector<FluctuationRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    FluctuationRow fr;
    fr.sample = parse_int(r[col[0]]);
    fr.theta = {parse_double(r[col[1]]), parse_double(r[col[2]])};
    fr.k = parse_int(r[col[3]]);
    fr.j = parse_int(r[col[4]]);
    fr.i = parse_int(r[col[5]]);
    fr.f = {parse_double(r[col[6]]), parse_double(r[col[7]])};
    fr.fk = {parse_double(r[col[8]]), parse_double(r[col[9]])};
    if (fr.k < 1) throw ConfigError("csv '" + path + "': k must be >= 1");
    rows.push_back(fr);
  }
  if (config_hash) *config_hash = t.config_hash;
  return rows;
}

std::vector<GroupedPowers> group_powers(const std::vector<FluctuationRow>& rows) {
  using Key = std::tuple<double, double, int>;
  using GroupKey = std::tuple<int, int>;
  std::map<Key, std::map<GroupKey, std::pair<cdouble, int>>> acc;
  std::vector<Key> order;
  for (const auto& r : rows) {
    const Key key{r.theta.real(), r.theta.imag(), r.k};
    if (!acc.count(key)) order.push_back(key);
    auto& g = acc[key][{r.sample, r.j}];
    g.first += r.fk;
    g.second += 1;
  }
  std::vector<GroupedPowers> out;
  for (const auto& key : order) {
    GroupedPowers gp;
    gp.theta = {std::get<0>(key), std::get<1>(key)};
    gp.k = std::get<2>(key);
    for (const auto& [gk, sum] : acc[key]) gp.values.push_back(sum.first / static_cast<double>(sum.second));
    out.push_back(std::move(gp));
  }
  return out;
}

void write_spectrum(const std::string& path, const std::string& config_hash, int sample, Index n,
                    const perturbation::JordanSpec& spec, const std::vector<cdouble>& eigenvalues,
                    const std::vector<bool>& outlier) {
  if (eigenvalues.size() != outlier.size()) throw ConfigError("write_spectrum: flag count differs");
  Table t;
  t.config_hash = config_hash;
  t.comments.push_back("n=" + std::to_string(n));
  for (const auto& e : spec.entries) {
    t.comments.push_back("theta=" + format_double(e.theta.real()) + ";" + format_double(e.theta.imag()) +
                         ";" + std::to_string(e.k));
  }
  t.header = {"sample", "re", "im", "outlier"};
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    t.rows.push_back({std::to_string(sample), format_double(eigenvalues[i].real()),
                      format_double(eigenvalues[i].imag()), outlier[i] ? "1" : "0"});
  }
  write_table(path, t);
}

SpectrumGuides spectrum_guides(const Table& table) {
  SpectrumGuides g;
  for (const auto& c : table.comments) {
    if (c.rfind("n=", 0) == 0) {
      g.n = parse_int(c.substr(2));
    } else if (c.rfind("theta=", 0) == 0) {
      std::vector<std::string> parts;
      std::string cell;
      std::istringstream is(c.substr(6));
      while (std::getline(is, cell, ';')) parts.push_back(cell);
      if (parts.size() != 3) throw ConfigError("csv: malformed theta comment '" + c + "'");
      g.thetas.push_back({{parse_double(parts[0]), parse_double(parts[1])}, parse_int(parts[2])});
    }
  }
  return g;
}

void append_moment_report(Table& table, const stats::MomentReport& report, const std::string& section) {
  for (const auto& r : report.rows) {
    table.rows.push_back({section, r.label, format_double(r.empirical.real()),
                          format_double(r.empirical.imag()), format_double(r.predicted.real()),
                          format_double(r.predicted.imag()), format_double(r.se_re),
                          format_double(r.se_im), format_double(r.z_re), format_double(r.z_im),
                          r.pass ? "1" : "0"});
  }
}

Table moment_report_table(const std::string& config_hash, const stats::MomentReport& report,
                          const std::string& section) {
  Table t;
  t.config_hash = config_hash;
  t.header = {"section", "label", "empirical_re", "empirical_im", "predicted_re", "predicted_im",
              "se_re", "se_im", "z_re", "z_im", "pass"};
  append_moment_report(t, report, section);
  return t;
}

}  // namespace olab::csv
