#include <doctest.h>

#include <cmath>

#include "outlierlab/errors.hpp"
#include "outlierlab/perturbation.hpp"

using namespace olab;
using namespace olab::perturbation;

namespace {

JordanSpec mixed_spec() {
  JordanSpec s;
  s.entries = {{2.0, 1, 2}, {cdouble(1.5, 1), 2, 1}};
  return s;
}

EigenvectorProfile profile_of(ProfileKind kind) {
  EigenvectorProfile p;
  p.kind = kind;
  return p;
}

}  // namespace

TEST_CASE("jordan spec bookkeeping") {
  const auto s = mixed_spec();
  CHECK(s.rank() == 4);
  CHECK(s.thetas().size() == 2);
  CHECK(s.multiplicity(2.0) == 2);
  CHECK(s.multiplicity(cdouble(1.5, 1)) == 2);
  const auto b = s.blocks();
  REQUIRE(b.size() == 3);
  CHECK(b[0].offset == 0);
  CHECK(b[1].offset == 1);
  CHECK(b[1].j == 1);
  CHECK(b[2].offset == 2);
  CHECK(b[2].k == 2);
  const CMatrix j = s.jordan_matrix();
  CHECK(j(2, 3) == 1.0);
  CHECK(j(1, 2) == 0.0);
  CHECK(j(3, 3) == cdouble(1.5, 1));
}

TEST_CASE("jordan spec validation") {
  JordanSpec s;
  s.entries = {{0.9, 1, 1}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.entries = {{2.0, 1, 1}, {2.0, 1, 2}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.entries = {{2.0, 1, 1}, {2.0, 2, 1}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.entries = {{2.0, 0, 1}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.entries = {{2.0, 5, 4}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.rank_cap = 20;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("every profile yields a biorthogonal factorization with the right spectrum") {
  const auto spec = mixed_spec();
  for (auto kind : {ProfileKind::local, ProfileKind::delocalized_haar, ProfileKind::delocalized_fourier,
                    ProfileKind::mixed, ProfileKind::geometric}) {
    CAPTURE(profile_kind_name(kind));
    ensembles::SeededRng rng(3, 0);
    const auto pm = build_perturbation(64, spec, profile_of(kind), rng);
    CHECK(pm.biorthogonality_error() < 1e-12);
    CHECK((pm.V.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
    // Nonzero eigenvalues of V J Ustar are those of J Ustar V = J.
    const auto ev = linalg::eigenvalues(CMatrix(pm.Ustar * pm.dense() * pm.V));
    const auto ref = linalg::eigenvalues(pm.J);
    CHECK(linalg::match_multisets(ev, ref, 1e-6).matched);
  }
}

TEST_CASE("distinct left frames stay biorthogonal") {
  EigenvectorProfile p = profile_of(ProfileKind::delocalized_haar);
  p.distinct_left = true;
  ensembles::SeededRng rng(4, 0);
  const auto pm = build_perturbation(200, mixed_spec(), p, rng);
  CHECK(pm.biorthogonality_error() < 1e-10);
  CHECK((pm.Ustar - CMatrix(pm.V.adjoint())).norm() > 1e-3);
}

TEST_CASE("profile validation") {
  EigenvectorProfile p = profile_of(ProfileKind::local);
  p.distinct_left = true;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = profile_of(ProfileKind::geometric);
  p.ratio = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = profile_of(ProfileKind::mixed);
  p.local_mass = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  ensembles::SeededRng rng(1, 0);
  CHECK_THROWS_AS(build_perturbation(10, mixed_spec(), profile_of(ProfileKind::local), rng), ConfigError);
  CHECK_THROWS_AS(profile_kind_from_name("sparse"), ConfigError);
}

TEST_CASE("moment hypothesis constants") {
  CHECK(profile_of(ProfileKind::delocalized_haar).c_constant() == 1.0);
  CHECK(profile_of(ProfileKind::delocalized_haar).implied_moment() == 4.0);
  CHECK(profile_of(ProfileKind::local).c_constant() == 0.0);
  CHECK(profile_of(ProfileKind::local).implied_moment() == 8.0);
}

TEST_CASE("geometric normalizer gives unit columns") {
  // 1 / ||(r, r^2, ..., r^10)|| for r = 1/2.
  CHECK(geometric_normalizer(0.5, 10) == doctest::Approx(1.7320516334756528).epsilon(1e-14));
}

TEST_CASE("limit scalars of orthonormal frames") {
  JordanSpec s;
  s.entries = {{2.0, 1, 2}};
  SUBCASE("complex Haar: same-conjugation pairings vanish in the limit") {
    ensembles::SeededRng rng(8, 0);
    const auto pm = build_perturbation(2000, s, profile_of(ProfileKind::delocalized_haar), rng);
    const auto ls = compute_limit_scalars(pm);
    CHECK(ls.has_analytic_limit);
    CHECK((ls.U[0][1] - CMatrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(ls.U[0][0].norm() < 0.1);
    CHECK(ls.U_limit[0][0].norm() == 0.0);
    CHECK((ls.V_limit[1][0] - CMatrix::Identity(2, 2)).norm() == 0.0);
  }
  SUBCASE("Fourier frequencies 1..r have exactly vanishing same-conjugation pairings") {
    ensembles::SeededRng rng(8, 0);
    const auto pm = build_perturbation(50, s, profile_of(ProfileKind::delocalized_fourier), rng);
    const auto ls = compute_limit_scalars(pm);
    CHECK(ls.U[0][0].norm() < 1e-12);
    CHECK(ls.V[1][1].norm() < 1e-12);
  }
  SUBCASE("local vectors") {
    ensembles::SeededRng rng(8, 0);
    const auto pm = build_perturbation(50, s, profile_of(ProfileKind::local), rng);
    const auto ls = compute_limit_scalars(pm);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) CHECK((ls.U[a][b] - CMatrix::Identity(2, 2)).norm() < 1e-15);
    }
  }
}

TEST_CASE("haar frames are orthonormal and deterministic") {
  ensembles::SeededRng a(2, 7), b(2, 7);
  const CMatrix q1 = haar_frame(30, 3, false, a);
  const CMatrix q2 = haar_frame(30, 3, false, b);
  CHECK((q1 - q2).norm() == 0.0);
  CHECK((q1.adjoint() * q1 - CMatrix::Identity(3, 3)).norm() < 1e-13);
  ensembles::SeededRng c(2, 8);
  CHECK(haar_frame(30, 2, true, c).imag().norm() == 0.0);
}
