#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "outlierlab/blas_check.hpp"
#include "outlierlab/commands.hpp"

int main(int argc, char** argv) {
  using namespace olab::commands;
  try {
    olab::blas_check::ensure_reliable_blas(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  CLI::App app{"outlierlab: outlier eigenvalues of perturbed iid random matrices"};
  app.require_subcommand(1);

  Options opt;
  int threads = 0;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "JSON run configuration");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "output path (overrides the config)");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
  };

  auto* sim = app.add_subcommand("simulate", "Monte Carlo outlier fluctuations to CSV");
  common(sim, true);
  auto* pre = app.add_subcommand("predict", "draws from the limiting law to CSV");
  common(pre, true);
  auto* cmp = app.add_subcommand("compare", "energy-distance gate between two fluctuation CSVs");
  common(cmp, false);
  cmp->add_option("mc", opt.input, "Monte Carlo CSV")->required();
  cmp->add_option("theory", opt.theory, "theoretical CSV")->required();
  auto* lid = app.add_subcommand("lidskii", "perturbation-theory predictions for a (spec, P) pair");
  common(lid, true);
  auto* cl = app.add_subcommand("clt", "moment report for the Z or S statistics");
  common(cl, true);
  auto* plt = app.add_subcommand("plot", "SVG scatter plot of a spectrum or fluctuation CSV");
  common(plt, false);
  plt->add_option("csv", opt.input, "input CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--threads")) opt.threads = threads;
    if (sub->count("--seed")) opt.seed = seed;
  }
  int (*fn)(const Options&, std::ostream&) = nullptr;
  if (sim->parsed()) fn = simulate;
  if (pre->parsed()) fn = predict;
  if (cmp->parsed()) fn = compare;
  if (lid->parsed()) fn = lidskii;
  if (cl->parsed()) fn = clt;
  if (plt->parsed()) fn = plot;
  return run_guarded(fn, opt, std::cout, std::cerr);
}
