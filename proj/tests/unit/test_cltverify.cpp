#include <doctest.h>

#include <cmath>

#include "outlierlab/cltverify.hpp"
#include "outlierlab/errors.hpp"

using namespace olab;
using namespace olab::cltverify;
using ensembles::AtomDistribution;
using ensembles::AtomKind;

TEST_CASE("Z statistics from one chain match direct powers") {
  ensembles::SeededRng rng(3, 0);
  const Index n = 50;
  const CMatrix x = ensembles::sample_iid_matrix(n, AtomDistribution::make(AtomKind::complex_gaussian), rng);
  const auto pr = make_pairs(n, 1, "delocalized-haar", rng);
  const auto z = z_powers(x, pr[0].u, pr[0].v, 4);
  const CMatrix y = x / std::sqrt(double(n));
  CMatrix yj = CMatrix::Identity(n, n);
  for (int j = 1; j <= 4; ++j) {
    yj = yj * y;
    const cdouble ref = std::sqrt(double(n)) * pr[0].u.dot(yj * pr[0].v);
    CHECK(std::abs(z[static_cast<std::size_t>(j - 1)] - ref) < 1e-10);
    CHECK(std::abs(z_statistic(x, pr[0].u, pr[0].v, j) - ref) < 1e-10);
  }
  const RMatrix xr = x.real();
  const auto zr = z_powers(xr, pr[0].u, pr[0].v, 3);
  const auto zc = z_powers(CMatrix(xr.cast<cdouble>()), pr[0].u, pr[0].v, 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(zr[j] - zc[j]) < 1e-12);
}

TEST_CASE("S by direct solve equals the truncated series") {
  ensembles::SeededRng rng(4, 0);
  const Index n = 200;
  const CMatrix x = ensembles::sample_iid_matrix(n, AtomDistribution::make(AtomKind::complex_gaussian), rng);
  const auto pr = make_pairs(n, 1, "delocalized-fourier", rng);
  CHECK(series_cutoff(200) == static_cast<int>(std::ceil(std::pow(std::log(200.0), 2))));
  for (cdouble lambda : {cdouble(2.0), cdouble(0, 3.0), cdouble(-2.5, 1.0)}) {
    const cdouble s = s_statistic(x, pr[0].u, pr[0].v, lambda);
    const cdouble ser = s_series(x, pr[0].u, pr[0].v, lambda, series_cutoff(n));
    CHECK(std::abs(s - ser) < 1e-6);
  }
}

TEST_CASE("pair scalars and pair kinds") {
  ensembles::SeededRng rng(5, 0);
  for (const char* kind : {"delocalized-haar", "delocalized-haar-real", "delocalized-fourier", "local"}) {
    CAPTURE(kind);
    const auto pr = make_pairs(40, 3, kind, rng);
    REQUIRE(pr.size() == 3);
    std::vector<CVector> u, v;
    for (const auto& p : pr) {
      CHECK(std::abs(p.u.norm() - 1.0) < 1e-12);
      CHECK(std::abs(p.v.norm() - 1.0) < 1e-12);
      u.push_back(p.u);
      v.push_back(p.v);
    }
    const auto c = pair_scalars(u, v);
    // Orthonormal frames: C01 is the identity.
    CHECK((c.c[0][1] - CMatrix::Identity(3, 3)).norm() < 1e-10);
    CHECK((c.c[1][0] - CMatrix::Identity(3, 3)).norm() < 1e-10);
  }
  CHECK_THROWS_AS(make_pairs(10, 6, "local", rng), ConfigError);
  CHECK_THROWS_AS(make_pairs(10, 2, "sparse", rng), ConfigError);
}

TEST_CASE("predicted Z moments") {
  ZStatConfig cfg;
  cfg.n = 40;
  cfg.atom = AtomDistribution::make(AtomKind::real_gaussian);
  ensembles::SeededRng rng(6, 0);
  cfg.pairs = make_pairs(cfg.n, 2, "local", rng);
  cfg.max_power = 3;
  CMatrix cov, pseudo;
  predicted_z_moments(cfg, cov, pseudo);
  REQUIRE(cov.rows() == 6);
  CHECK(std::abs(cov(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(cov(0, 1)) < 1e-14);   // different powers
  CHECK(std::abs(cov(0, 3)) < 1e-14);   // different local pairs
  CHECK(std::abs(pseudo(2, 2) - 1.0) < 1e-14);
}

TEST_CASE("predicted S moments") {
  SStatConfig cfg;
  cfg.n = 40;
  cfg.atom = AtomDistribution::make(AtomKind::real_gaussian);
  ensembles::SeededRng rng(6, 0);
  cfg.pairs = make_pairs(cfg.n, 1, "local", rng);
  cfg.lambdas = {2.0, 3.0};
  CMatrix cov, pseudo, gc, gp;
  predicted_s_moments(cfg, cov, pseudo, gc, gp);
  CHECK(std::abs(cov(0, 0) - 1.0 / 3.0) < 1e-14);
  CHECK(std::abs(cov(0, 1) - 1.0 / 5.0) < 1e-14);
  CHECK(std::abs(gc(0, 0) - 1.0 / 12.0) < 1e-14);
  CHECK(std::abs(gp(1, 1) - 1.0 / 72.0) < 1e-14);
}

TEST_CASE("Z moments at small scale agree with predictions") {
  ZStatConfig cfg;
  cfg.n = 100;
  cfg.trials = 1500;
  cfg.seed = 9;
  ensembles::SeededRng rng(cfg.seed, kPairStream);
  cfg.pairs = make_pairs(cfg.n, 2, "delocalized-haar", rng);
  cfg.max_power = 2;
  const auto rep = estimate_z_covariances(cfg);
  CHECK(rep.rows.size() > 0);
  CHECK(rep.max_abs_z() < 4.5);
}

TEST_CASE("invalid Z configurations") {
  ZStatConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no pairs
  ensembles::SeededRng rng(6, 0);
  cfg.pairs = make_pairs(cfg.n, 1, "local", rng);
  cfg.max_power = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
