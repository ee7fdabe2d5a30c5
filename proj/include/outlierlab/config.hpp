#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "outlierlab/linalg.hpp"
#include "outlierlab/montecarlo.hpp"

namespace olab::config {

struct PredictSection {
  int samples = 0;                  // 0 selects the trial count
  bool use_analytic_limits = true;
  double support_exponent = 0.25;
};

struct LidskiiSection {
  std::optional<CMatrix> p;         // explicit rank x rank perturbation
  std::uint64_t p_seed = 1;         // otherwise: complex Gaussian P from this seed
  int p_count = 1;                  // number of random P to evaluate
  std::vector<double> eps;          // strictly decreasing; empty skips the sweep
  std::string convention = "larger-blocks-first";
};

struct CltSection {
  std::string statistic = "z";      // "z", "s" or "scan"
  std::string pair_kind = "delocalized-haar";
  int pairs = 2;
  int max_power = 3;                // z: powers 1..max_power; scan: 0 selects ceil(log^2 n)
  std::vector<cdouble> lambdas{2.0, 3.0};
};

struct CompareSection {
  double alpha = 0.01;
  int permutations = 500;
};

struct OutputPaths {
  std::string samples;   // simulate: fluctuation CSV
  std::string spectrum;  // simulate: eigenvalues of trial 0
  std::string theory;    // predict: theoretical CSV
  std::string report;    // clt, lidskii, compare
  std::string plot;      // plot: SVG
};

/// Parsed run configuration. Every object level rejects unknown keys.
struct RunConfig {
  montecarlo::ExperimentConfig experiment;
  PredictSection predict;
  LidskiiSection lidskii;
  CltSection clt;
  CompareSection compare;
  OutputPaths outputs;
  /// Input document with the seed override applied; outputs and threads are
  /// excluded because they do not change results.
  nlohmann::json canonical;

  /// 16 hex digits of FNV-1a over the canonical dump.
  std::string hash() const;
};

/// Throws ConfigError on any schema violation.
RunConfig parse_run_config(const nlohmann::json& doc,
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::string& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

std::string fnv1a_hex(const std::string& text);

/// Serializes the Jordan structure and profile in the config layout.
nlohmann::json jordan_to_json(const perturbation::JordanSpec& spec);
nlohmann::json profile_to_json(const perturbation::EigenvectorProfile& profile);
perturbation::JordanSpec jordan_from_json(const nlohmann::json& j, int rank_cap = 16);
perturbation::EigenvectorProfile profile_from_json(const nlohmann::json& j);

}  // namespace olab::config
