#include "outlierlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "outlierlab/errors.hpp"
#include "outlierlab/lidskii.hpp"
#include "outlierlab/montecarlo.hpp"

namespace olab::theory {

using perturbation::ProfileKind;

namespace {

constexpr int kMaxResamples = 100;

GKind g_kind_for(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::local: return GKind::atom_combination;
    case ProfileKind::delocalized_haar:
    case ProfileKind::delocalized_fourier: return GKind::gaussian;
    case ProfileKind::mixed: return GKind::mixed;
    case ProfileKind::geometric: return GKind::geometric_combination;
  }
  return GKind::gaussian;
}

}  // namespace

std::string_view g_kind_name(GKind kind) {
  switch (kind) {
    case GKind::gaussian: return "gaussian";
    case GKind::atom_combination: return "atom-combination";
    case GKind::mixed: return "mixed";
    case GKind::geometric_combination: return "geometric-combination";
  }
  return "unknown";
}

cdouble g_moment(cdouble q, cdouble a, cdouble b, cdouble uv) {
  if (q == cdouble(0.0)) return 0.0;
  return q * q / (a * b - q) * uv;
}

LimitLawSpec build_limit_law(const perturbation::PerturbationMatrix& pm,
                             const ensembles::AtomDistribution& atom,
                             const LimitLawOptions& options) {
  LimitLawSpec law;
  law.spec = pm.spec;
  law.atom = atom;
  law.g_kind = g_kind_for(pm.profile.kind);

  const auto scalars = perturbation::compute_limit_scalars(pm);
  const bool analytic = options.use_analytic_limits && scalars.has_analytic_limit;
  const auto& U = analytic ? scalars.U_limit : scalars.U;
  const auto& V = analytic ? scalars.V_limit : scalars.V;

  // Global block position of each block, to address U and V.
  const auto all_blocks = pm.spec.blocks();
  auto global_pos = [&](const perturbation::BlockRef& b) {
    for (std::size_t a = 0; a < all_blocks.size(); ++a) {
      if (all_blocks[a].offset == b.offset) return static_cast<Index>(a);
    }
    throw ConfigError("build_limit_law: unknown block");
  };

  std::vector<Index> s_glob, t_glob;
  std::vector<cdouble> theta_of;
  for (cdouble theta : pm.spec.thetas()) {
    ThetaLayout lay;
    lay.theta = theta;
    lay.blocks = pm.spec.blocks_of(theta);
    for (const auto& b : lay.blocks) {
      lay.sizes.push_back(b.k);
      if (std::find(lay.distinct_sizes.begin(), lay.distinct_sizes.end(), b.k) ==
          lay.distinct_sizes.end()) {
        lay.distinct_sizes.push_back(b.k);
      }
    }
    std::sort(lay.distinct_sizes.rbegin(), lay.distinct_sizes.rend());
    lay.r_begin = static_cast<Index>(law.r_index.size());
    const Index nb = static_cast<Index>(lay.blocks.size());
    for (Index s = 0; s < nb; ++s) {
      for (Index t = 0; t < nb; ++t) {
        law.r_index.push_back({law.layouts.size(), s, t});
        s_glob.push_back(global_pos(lay.blocks[static_cast<std::size_t>(s)]));
        t_glob.push_back(global_pos(lay.blocks[static_cast<std::size_t>(t)]));
        theta_of.push_back(theta);
      }
    }
    law.layouts.push_back(std::move(lay));
  }

  const Index p = law.size();
  const cdouble ex2 = atom.ex2;
  law.g_cov = CMatrix::Zero(p, p);
  law.g_pseudo = CMatrix::Zero(p, p);
  CMatrix c01(p, p), c00(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      c01(a, b) = U[0][1](s_glob[a], s_glob[b]) * V[0][1](t_glob[a], t_glob[b]);
      c00(a, b) = U[0][0](s_glob[a], s_glob[b]) * V[0][0](t_glob[a], t_glob[b]);
      const cdouble ta = theta_of[static_cast<std::size_t>(a)];
      const cdouble tb = theta_of[static_cast<std::size_t>(b)];
      law.g_cov(a, b) = g_moment(1.0, ta, std::conj(tb), c01(a, b));
      law.g_pseudo(a, b) = g_moment(ex2, ta, tb, c00(a, b));
    }
  }

  // Atom support of G: pairs (i, j) with |w_i v_j| >= n^{-a} for some r.
  std::vector<CVector> w(static_cast<std::size_t>(p)), v(static_cast<std::size_t>(p));
  std::set<std::pair<Index, Index>> support;
  const double tau = std::pow(static_cast<double>(pm.n), -options.support_exponent);
  for (Index a = 0; a < p; ++a) {
    const auto& bs = all_blocks[static_cast<std::size_t>(s_glob[a])];
    const auto& bt = all_blocks[static_cast<std::size_t>(t_glob[a])];
    w[a] = pm.left_covector(bs);
    v[a] = pm.right_eigenvector(bt);
    const double wmax = w[a].cwiseAbs().maxCoeff();
    const double vmax = v[a].cwiseAbs().maxCoeff();
    std::vector<Index> rows, cols;
    for (Index i = 0; i < pm.n; ++i) {
      if (std::abs(w[a](i)) * vmax >= tau) rows.push_back(i);
      if (std::abs(v[a](i)) * wmax >= tau) cols.push_back(i);
    }
    for (Index i : rows) {
      for (Index j : cols) {
        if (std::abs(w[a](i) * v[a](j)) >= tau) support.insert({i, j});
      }
    }
  }
  law.atom_support.assign(support.begin(), support.end());
  const Index nl = static_cast<Index>(law.atom_support.size());
  law.atom_coeff = CMatrix::Zero(p, nl);
  for (Index a = 0; a < p; ++a) {
    for (Index l = 0; l < nl; ++l) {
      const auto [i, j] = law.atom_support[static_cast<std::size_t>(l)];
      law.atom_coeff(a, l) = w[a](i) * v[a](j);
    }
  }
  law.G_cov = c01 - law.atom_coeff * law.atom_coeff.adjoint();
  law.G_pseudo = ex2 * (c00 - law.atom_coeff * law.atom_coeff.transpose());

  law.g_sampler = ComplexGaussianSampler(law.g_cov, law.g_pseudo);
  law.G_sampler = ComplexGaussianSampler(law.G_cov, law.G_pseudo);
  return law;
}

CVector sample_F(const LimitLawSpec& law, ensembles::SeededRng& rng) {
  const Index nl = static_cast<Index>(law.atom_support.size());
  CVector x(nl);
  for (Index l = 0; l < nl; ++l) x(l) = ensembles::sample_atom(law.atom, rng);
  CVector f = law.atom_coeff * x;
  f += law.G_sampler.sample(rng);
  f += law.g_sampler.sample(rng);
  return f;
}

CMatrix theta_matrix(const LimitLawSpec& law, std::size_t t, const CVector& f) {
  const auto& lay = law.layouts.at(t);
  const Index nb = static_cast<Index>(lay.blocks.size());
  CMatrix m(nb, nb);
  for (Index s = 0; s < nb; ++s) {
    for (Index c = 0; c < nb; ++c) m(s, c) = f(lay.r_begin + s * nb + c);
  }
  return m;
}

TheoreticalSample sample_limit(const LimitLawSpec& law, ensembles::SeededRng& rng) {
  TheoreticalSample out;
  for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
    const CVector f = sample_F(law, rng);
    std::vector<TheoreticalRecord> recs;
    try {
      for (std::size_t t = 0; t < law.layouts.size(); ++t) {
        const auto& lay = law.layouts[t];
        const CMatrix ft = theta_matrix(law, t, f);
        for (int k : lay.distinct_sizes) {
          const CMatrix fk = lidskii::reduce_for_size(
              ft, lay.sizes, k, lidskii::EliminationConvention::larger_blocks_first);
          linalg::Spectrum lam = linalg::eigenvalues(fk);
          std::sort(lam.begin(), lam.end(), linalg::lex_less);
          for (std::size_t j = 0; j < lam.size(); ++j) {
            const auto roots = lidskii::kth_roots(lam[j], k);
            for (int i = 0; i < k; ++i) {
              recs.push_back({lay.theta, k, static_cast<int>(j), i,
                              roots[static_cast<std::size_t>(i)], lam[j]});
            }
          }
        }
      }
    } catch (const NumericalError&) {
      ++out.resamples;
      continue;
    }
    out.records = std::move(recs);
    return out;
  }
  throw NumericalError("sample_limit: Schur pivot singular in 100 consecutive draws");
}

std::vector<TheoreticalSample> sample_many(const LimitLawSpec& law, int count, std::uint64_t seed,
                                           int threads) {
  if (count < 1) throw ConfigError("sample_many: count must be >= 1");
  std::vector<TheoreticalSample> out(static_cast<std::size_t>(count));
  montecarlo::parallel_for(count, threads, [&](int s) {
    ensembles::SeededRng rng(seed, kTheoryStreamBase + static_cast<std::uint64_t>(s));
    out[static_cast<std::size_t>(s)] = sample_limit(law, rng);
  });
  return out;
}

MarginalDescriptor closed_form_marginal(std::string_view case_id, const MarginalParams& prm) {
  const cdouble th = prm.theta;
  const double t2 = std::norm(th);
  if (!(t2 > 1.0)) throw ConfigError("closed_form_marginal: |theta| must exceed 1");
  const cdouble ex2 = prm.atom.ex2;
  const double sigma2 = t2 / (t2 - 1.0);
  MarginalDescriptor d;
  d.case_id = std::string(case_id);
  d.g_variance = 1.0 / (t2 - 1.0);
  if (case_id == "i") {
    d.description = "x + g: atom plus independent complex Gaussian";
    d.includes_atom = true;
    d.g_pseudo_variance = g_moment(ex2, th, th, 1.0);
    d.variance = 1.0 + d.g_variance;
    d.pseudo_variance = ex2 + d.g_pseudo_variance;
    return d;
  }
  if (case_id == "ii" || case_id == "iii-a") {
    const double s = case_id == "ii" ? prm.uv_pseudo_overlap : 1.0;
    d.description = case_id == "ii" ? "centred complex Gaussian"
                                    : "independent centred Gaussian entries of F^theta";
    d.g_pseudo_variance = g_moment(ex2, th, th, s);
    d.variance = sigma2;
    d.pseudo_variance = ex2 * s + d.g_pseudo_variance;
    return d;
  }
  if (case_id == "iii-b" || case_id == "iii-c") {
    if (ex2 != cdouble(0.0)) throw ConfigError("closed_form_marginal: case " + d.case_id +
                                                " requires E x^2 = 0");
    if (prm.m < 1) throw ConfigError("closed_form_marginal: m must be positive");
    d.variance = sigma2;
    d.pseudo_variance = 0.0;
    d.g_pseudo_variance = 0.0;
    if (case_id == "iii-b") {
      d.description = "eigenvalues of a scaled complex Ginibre matrix";
      d.radius = std::sqrt(sigma2);
      d.radius_unscaled = std::sqrt(sigma2 * prm.m);
    } else {
      d.description = "m-th roots of a circular complex Gaussian, uniform in angle";
      d.root_order = prm.m;
      d.radius = std::pow(sigma2, 0.5 / prm.m);
    }
    return d;
  }
  throw ConfigError("closed_form_marginal: unknown case '" + std::string(case_id) + "'");
}

}  // namespace olab::theory
