#include <doctest.h>

#include <cmath>

#include "outlierlab/perturbation.hpp"
#include "outlierlab/secular.hpp"

using namespace olab;
using perturbation::JordanSpec;

namespace {

void check_against_dense(bool real_y, perturbation::ProfileKind kind) {
  const Index n = 200;
  JordanSpec s;
  s.entries = {{2.0, 2, 1}, {cdouble(0, -1.7), 1, 1}, {cdouble(-1.4, -1.4), 1, 2}};
  perturbation::EigenvectorProfile prof;
  prof.kind = kind;
  ensembles::SeededRng prng(4, 0);
  const auto pm = perturbation::build_perturbation(n, s, prof, prng);
  const auto atom = ensembles::AtomDistribution::make(real_y ? ensembles::AtomKind::real_gaussian
                                                             : ensembles::AtomKind::complex_gaussian);
  const auto thetas = s.thetas();
  std::vector<int> expected;
  for (cdouble th : thetas) expected.push_back(s.multiplicity(th));
  const double delta = 0.45;
  for (std::uint64_t t = 0; t < 3; ++t) {
    ensembles::SeededRng rng(10, t);
    secular::SecularResult res;
    CMatrix y;
    if (real_y) {
      const RMatrix yr = ensembles::sample_real_iid_matrix(n, atom, rng) / std::sqrt(double(n));
      res = secular::outliers(yr, pm.V, pm.Ustar, pm.J, thetas, expected, delta);
      y = yr.cast<cdouble>();
    } else {
      y = ensembles::sample_iid_matrix(n, atom, rng) / std::sqrt(double(n));
      res = secular::outliers(y, pm.V, pm.Ustar, pm.J, thetas, expected, delta);
    }
    REQUIRE_MESSAGE(res.ok, res.reason);
    const auto dense = linalg::eigenvalues(CMatrix(y + pm.dense()));
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      std::vector<cdouble> near;
      for (cdouble z : dense) {
        if (std::abs(z - thetas[i]) < delta) near.push_back(z);
      }
      CAPTURE(thetas[i]);
      CHECK(res.roots[i].size() == static_cast<std::size_t>(expected[i]));
      CHECK(linalg::match_multisets(res.roots[i], near, 1e-8).matched);
    }
  }
}

}  // namespace

TEST_CASE("secular outliers match dense eigenvalues, complex entries") {
  check_against_dense(false, perturbation::ProfileKind::delocalized_haar);
}

TEST_CASE("secular outliers match dense eigenvalues, real entries") {
  check_against_dense(true, perturbation::ProfileKind::local);
}

TEST_CASE("secular solver reports a wrong expected count") {
  const Index n = 100;
  JordanSpec s;
  s.entries = {{2.0, 1, 1}};
  ensembles::SeededRng prng(4, 0);
  const auto pm = perturbation::build_perturbation(n, s, {}, prng);
  ensembles::SeededRng rng(1, 0);
  const CMatrix y = ensembles::sample_iid_matrix(
                        n, ensembles::AtomDistribution::make(ensembles::AtomKind::complex_gaussian), rng) /
                    std::sqrt(double(n));
  CHECK(secular::outliers(y, pm.V, pm.Ustar, pm.J, {2.0}, {1}, 0.5).ok);
  CHECK_FALSE(secular::outliers(y, pm.V, pm.Ustar, pm.J, {2.0}, {2}, 0.5).ok);
}
