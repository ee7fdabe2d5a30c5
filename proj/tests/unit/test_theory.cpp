#include <doctest.h>

#include <cmath>
#include <map>

#include "outlierlab/errors.hpp"
#include "outlierlab/lidskii.hpp"
#include "outlierlab/theory.hpp"

using namespace olab;
using namespace olab::theory;
using ensembles::AtomDistribution;
using ensembles::AtomKind;
using perturbation::EigenvectorProfile;
using perturbation::JordanSpec;
using perturbation::ProfileKind;

namespace {

LimitLawSpec law_for(const JordanSpec& spec, ProfileKind kind, AtomKind atom, Index n = 64) {
  EigenvectorProfile prof;
  prof.kind = kind;
  ensembles::SeededRng rng(99, 0);
  const auto pm = perturbation::build_perturbation(n, spec, prof, rng);
  return build_limit_law(pm, AtomDistribution::make(atom));
}

struct Moments {
  cdouble mean_abs2;
  cdouble mean_sq;
};

// Mean |F_0|^2 and F_0^2 over `count` flat draws.
Moments flat_moments(const LimitLawSpec& law, int count) {
  ensembles::SeededRng rng(5, 1);
  double a2 = 0.0;
  cdouble sq = 0.0;
  for (int s = 0; s < count; ++s) {
    const CVector f = sample_F(law, rng);
    a2 += std::norm(f(0));
    sq += f(0) * f(0);
  }
  return {a2 / count, sq / static_cast<double>(count)};
}

}  // namespace

TEST_CASE("g moment formula") {
  CHECK(std::abs(g_moment(1.0, 2.0, 2.0, 1.0) - 1.0 / 3.0) < 1e-15);
  CHECK(g_moment(0.0, 2.0, 2.0, 1.0) == cdouble(0.0));
  const cdouble th(1.5, 1.0);
  CHECK(std::abs(g_moment(1.0, th, std::conj(th), 1.0) - 1.0 / (std::norm(th) - 1.0)) < 1e-14);
  CHECK(std::abs(g_moment(1.0, 1e6, 1e6, 1.0)) < 1e-11);
  const cdouble q(0.3, -0.2), a(2.0, 0.5), b(-1.2, 1.1), uv(0.4, 0.7);
  CHECK(std::abs(g_moment(q, a, b, uv) - q * q / (a * b - q) * uv) < 1e-15);
}

TEST_CASE("closed-form marginals") {
  MarginalParams prm;
  const auto i = closed_form_marginal("i", prm);
  CHECK(i.includes_atom);
  CHECK(i.variance == doctest::Approx(4.0 / 3.0));
  CHECK(i.g_variance == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(i.pseudo_variance) < 1e-15);

  prm.atom = AtomDistribution::make(AtomKind::real_gaussian);
  const auto ir = closed_form_marginal("i", prm);
  CHECK(std::abs(ir.g_pseudo_variance - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(ir.pseudo_variance - 4.0 / 3.0) < 1e-15);

  prm.atom = AtomDistribution::make(AtomKind::complex_gaussian);
  const auto ii = closed_form_marginal("ii", prm);
  CHECK(ii.variance == doctest::Approx(4.0 / 3.0));
  CHECK_FALSE(ii.includes_atom);

  prm.m = 3;
  const auto c = closed_form_marginal("iii-c", prm);
  CHECK(c.root_order == 3);
  CHECK(c.radius == doctest::Approx(std::pow(4.0 / 3.0, 1.0 / 6.0)));
  const auto b = closed_form_marginal("iii-b", prm);
  CHECK(b.radius_unscaled == doctest::Approx(2.0));

  CHECK_THROWS_AS(closed_form_marginal("iv", prm), ConfigError);
  prm.atom = AtomDistribution::make(AtomKind::real_gaussian);
  CHECK_THROWS_AS(closed_form_marginal("iii-b", prm), ConfigError);
  prm.theta = cdouble(0.6, 0.6);
  CHECK_THROWS_AS(closed_form_marginal("i", prm), ConfigError);
}

TEST_CASE("local rank one with a complex Gaussian atom: x + g has E|F|^2 = 4/3") {
  JordanSpec s;
  s.entries = {{2.0, 1, 1}};
  const auto law = law_for(s, ProfileKind::local, AtomKind::complex_gaussian);
  CHECK(law.g_kind == GKind::atom_combination);
  CHECK(std::abs(law.g_cov(0, 0) - 1.0 / 3.0) < 1e-12);
  const auto m = flat_moments(law, 100000);
  CHECK(std::abs(m.mean_abs2.real() - 4.0 / 3.0) < 0.02);
  CHECK(std::abs(m.mean_sq) < 0.02);
}

TEST_CASE("local rank one with a real Gaussian atom: E F^2 = 1 + 1/3") {
  JordanSpec s;
  s.entries = {{2.0, 1, 1}};
  const auto law = law_for(s, ProfileKind::local, AtomKind::real_gaussian);
  CHECK(std::abs(law.g_pseudo(0, 0) - 1.0 / 3.0) < 1e-12);
  const auto m = flat_moments(law, 100000);
  CHECK(std::abs(m.mean_sq - 4.0 / 3.0) < 0.03);
  CHECK(std::abs(m.mean_abs2.real() - 4.0 / 3.0) < 0.03);
}

TEST_CASE("Haar profile: F is circular Gaussian with variance |theta|^2/(|theta|^2-1)") {
  JordanSpec s;
  s.entries = {{cdouble(1.5, 1.0), 1, 1}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian, 200);
  CHECK(law.g_kind == GKind::gaussian);
  const double t2 = std::norm(cdouble(1.5, 1.0));
  const auto m = flat_moments(law, 100000);
  CHECK(std::abs(m.mean_abs2.real() - t2 / (t2 - 1.0)) < 0.03);
  CHECK(std::abs(m.mean_sq) < 0.02);
}

TEST_CASE("g covariance is PSD in its real embedding") {
  JordanSpec s;
  s.entries = {{2.0, 2, 1}, {2.0, 1, 1}, {cdouble(-1.2, 1.4), 1, 2}};
  for (auto atom : {AtomKind::complex_gaussian, AtomKind::real_gaussian, AtomKind::rademacher}) {
    const auto law = law_for(s, ProfileKind::delocalized_haar, atom);
    CHECK(law.g_sampler.min_eigenvalue() > -1e-10);
    CHECK(law.G_sampler.min_eigenvalue() > -1e-10);
  }
}

TEST_CASE("sampled roots raised to the k-th power recover the reduced eigenvalues") {
  JordanSpec s;
  s.entries = {{2.0, 3, 1}, {2.0, 1, 2}, {cdouble(0, -1.7), 2, 1}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian);
  ensembles::SeededRng rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto smp = sample_limit(law, rng);
    std::map<std::pair<int, int>, int> count;  // (theta index, k)
    for (const auto& r : smp.records) {
      CHECK(std::abs(std::pow(r.f, r.k) - r.fk) < 1e-10 * std::max(1.0, std::abs(r.fk)));
      ++count[{r.theta == cdouble(2.0) ? 0 : 1, r.k}];
    }
    CHECK(count[{0, 3}] == 3);
    CHECK(count[{0, 1}] == 2);
    CHECK(count[{1, 2}] == 2);
  }
}

TEST_CASE("Schur step agrees with the deterministic perturbation procedure") {
  JordanSpec s;
  s.entries = {{2.0, 3, 1}, {2.0, 2, 1}, {2.0, 1, 2}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian);
  const auto blocks = s.blocks();
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    ensembles::SeededRng r1(8, stream), r2(8, stream);
    const CVector f = sample_F(law, r1);
    const auto smp = sample_limit(law, r2);
    REQUIRE(smp.resamples == 0);
    const CMatrix ft = theta_matrix(law, 0, f);
    // Embed F^theta into a rank x rank P at the lower-left corners of the blocks.
    CMatrix p = CMatrix::Zero(s.rank(), s.rank());
    for (std::size_t a = 0; a < blocks.size(); ++a) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        p(blocks[a].offset + blocks[a].k - 1, blocks[b].offset) =
            ft(static_cast<Index>(a), static_cast<Index>(b));
      }
    }
    const auto pred = lidskii::lidskii_predict(s, p);
    for (int k : {1, 2, 3}) {
      std::vector<cdouble> th, li;
      for (const auto& r : smp.records) {
        if (r.k == k) th.push_back(r.fk);
      }
      for (const auto& r : pred.records) {
        if (r.k == k) li.push_back(r.xi);
      }
      CAPTURE(k);
      CHECK(linalg::match_multisets(th, li, 1e-10).matched);
    }
  }
}

TEST_CASE("single block size: reduced matrix is F^theta itself") {
  JordanSpec s;
  s.entries = {{2.0, 1, 3}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian);
  ensembles::SeededRng r1(1, 4), r2(1, 4);
  const CMatrix ft = theta_matrix(law, 0, sample_F(law, r1));
  const auto smp = sample_limit(law, r2);
  std::vector<cdouble> fk;
  for (const auto& r : smp.records) fk.push_back(r.fk);
  CHECK(linalg::match_multisets(fk, linalg::eigenvalues(ft), 1e-10).matched);
}

TEST_CASE("single Jordan block: roots share one modulus") {
  JordanSpec s;
  s.entries = {{cdouble(1.5, 1.0), 3, 1}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian);
  ensembles::SeededRng rng(2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto smp = sample_limit(law, rng);
    REQUIRE(smp.records.size() == 3);
    const double r0 = std::abs(smp.records[0].f);
    for (const auto& r : smp.records) CHECK(std::abs(std::abs(r.f) - r0) < 1e-12);
  }
}

TEST_CASE("sample_many does not depend on the thread count") {
  JordanSpec s;
  s.entries = {{2.0, 2, 1}};
  const auto law = law_for(s, ProfileKind::delocalized_haar, AtomKind::complex_gaussian);
  const auto a = sample_many(law, 40, 17, 1);
  const auto b = sample_many(law, 40, 17, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].records.size() == b[i].records.size());
    for (std::size_t r = 0; r < a[i].records.size(); ++r) CHECK(a[i].records[r].f == b[i].records[r].f);
  }
}
