#include "outlierlab/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "outlierlab/errors.hpp"

namespace olab::perturbation {

namespace {

constexpr int kMaxBiorthAttempts = 10;
constexpr double kBiorthConditionCap = 1e6;

bool same_theta(cdouble a, cdouble b) { return a == b; }

}  // namespace

CMatrix haar_frame(Index n, Index r, bool real, ensembles::SeededRng& rng) {
  CMatrix g(n, r);
  for (Index c = 0; c < r; ++c) {
    for (Index i = 0; i < n; ++i) {
      const double re = rng.normal();
      g(i, c) = real ? cdouble(re, 0.0) : cdouble(re, rng.normal());
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, r);
  // Fix column phases so the frame is a deterministic function of g.
  const CMatrix rmat = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Index c = 0; c < r; ++c) {
    const cdouble d = rmat(c, c);
    if (std::abs(d) > 0.0) q.col(c) *= d / std::abs(d);
  }
  return q;
}

namespace {

CMatrix orthonormalize(const CMatrix& m) {
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(m.rows(), m.cols());
}

void check_delocalized(const CMatrix& v, const char* what) {
  const double n = static_cast<double>(v.rows());
  const double cap = 4.0 * std::sqrt(std::max(1.0, std::log(n)) / n);
  const double sup = v.cwiseAbs().maxCoeff();
  if (sup > cap) {
    throw NumericalError(std::string(what) + ": sup-norm " + std::to_string(sup) +
                         " exceeds the delocalization cap " + std::to_string(cap));
  }
}

CMatrix bilinear(const CMatrix& a, const CMatrix& b, int da, int db) {
  // Rows of a and b are the vectors; entry (p, q) = sum_i a_p^{(da)} b_q^{(db)}.
  const CMatrix aa = da ? CMatrix(a.conjugate()) : a;
  const CMatrix bb = db ? CMatrix(b.conjugate()) : b;
  return aa * bb.transpose();
}

}  // namespace

void JordanSpec::validate() const {
  if (rank_cap < 1) throw ConfigError("jordan: rank cap must be positive");
  for (std::size_t a = 0; a < entries.size(); ++a) {
    const auto& e = entries[a];
    if (!std::isfinite(e.theta.real()) || !std::isfinite(e.theta.imag())) {
      throw ConfigError("jordan: theta must be finite");
    }
    if (!(std::abs(e.theta) > 1.0)) {
      throw ConfigError("jordan: every theta must satisfy |theta| > 1");
    }
    if (e.k < 1 || e.m < 1) throw ConfigError("jordan: block size k and multiplicity m must be >= 1");
    for (std::size_t b = 0; b < a; ++b) {
      if (!same_theta(entries[b].theta, e.theta)) continue;
      if (entries[b].k == e.k) throw ConfigError("jordan: repeated (theta, k); use m instead");
      if (entries[b].k < e.k) {
        throw ConfigError("jordan: blocks of one theta must be listed in nonincreasing k");
      }
    }
  }
  if (rank() > rank_cap) {
    throw ConfigError("jordan: rank " + std::to_string(rank()) + " exceeds the cap " +
                      std::to_string(rank_cap));
  }
}

int JordanSpec::rank() const {
  int r = 0;
  for (const auto& e : entries) r += e.k * e.m;
  return r;
}

std::vector<cdouble> JordanSpec::thetas() const {
  std::vector<cdouble> out;
  for (const auto& e : entries) {
    if (std::none_of(out.begin(), out.end(), [&](cdouble t) { return same_theta(t, e.theta); })) {
      out.push_back(e.theta);
    }
  }
  return out;
}

std::vector<BlockRef> JordanSpec::blocks() const {
  std::vector<BlockRef> out;
  Index offset = 0;
  for (const auto& e : entries) {
    for (int j = 0; j < e.m; ++j) {
      out.push_back({e.theta, e.k, j, offset});
      offset += e.k;
    }
  }
  return out;
}

std::vector<BlockRef> JordanSpec::blocks_of(cdouble theta) const {
  std::vector<BlockRef> out;
  for (const auto& b : blocks()) {
    if (same_theta(b.theta, theta)) out.push_back(b);
  }
  return out;
}

int JordanSpec::multiplicity(cdouble theta) const {
  int total = 0;
  for (const auto& e : entries) {
    if (same_theta(e.theta, theta)) total += e.k * e.m;
  }
  return total;
}

CMatrix JordanSpec::jordan_matrix() const {
  const int r = rank();
  CMatrix j = CMatrix::Zero(r, r);
  for (const auto& b : blocks()) j.block(b.offset, b.offset, b.k, b.k) = linalg::jordan_block(b.theta, b.k);
  return j;
}

std::string_view profile_kind_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::local: return "local";
    case ProfileKind::delocalized_haar: return "delocalized-haar";
    case ProfileKind::delocalized_fourier: return "delocalized-fourier";
    case ProfileKind::mixed: return "mixed";
    case ProfileKind::geometric: return "geometric";
  }
  return "unknown";
}

ProfileKind profile_kind_from_name(std::string_view name) {
  for (auto k : {ProfileKind::local, ProfileKind::delocalized_haar,
                 ProfileKind::delocalized_fourier, ProfileKind::mixed, ProfileKind::geometric}) {
    if (profile_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown eigenvector profile '" + std::string(name) + "'");
}

double EigenvectorProfile::c_constant() const {
  switch (kind) {
    case ProfileKind::delocalized_haar:
    case ProfileKind::delocalized_fourier:
      return 1.0;
    default:
      return 0.0;
  }
}

double EigenvectorProfile::implied_moment() const {
  const double c = c_constant();
  const double two_over_c = c > 0.0 ? 2.0 / c : std::numeric_limits<double>::infinity();
  return std::min(std::max(two_over_c, 4.0), 8.0);
}

void EigenvectorProfile::validate() const {
  if (kind == ProfileKind::mixed) {
    if (local_size < 1) throw ConfigError("mixed profile: local_size must be >= 1");
    if (!(local_mass > 0.0 && local_mass < 1.0)) {
      throw ConfigError("mixed profile: local_mass must lie in (0, 1)");
    }
  }
  if (kind == ProfileKind::geometric && !(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("geometric profile: ratio must lie in (0, 1)");
  }
  if (distinct_left && kind != ProfileKind::delocalized_haar &&
      kind != ProfileKind::delocalized_fourier) {
    throw ConfigError("distinct_left is only available for delocalized profiles");
  }
  if (real && kind != ProfileKind::delocalized_haar && kind != ProfileKind::mixed) {
    throw ConfigError("the real option applies to delocalized-haar and mixed profiles");
  }
}

double geometric_normalizer(double r, Index len) {
  const double r2 = r * r;
  return std::sqrt((1.0 - r2) / (r2 * (1.0 - std::pow(r2, static_cast<double>(len)))));
}

CMatrix PerturbationMatrix::dense() const { return V * J * Ustar; }

bool PerturbationMatrix::is_real() const {
  return V.imag().isZero(0.0) && Ustar.imag().isZero(0.0) && J.imag().isZero(0.0);
}

CVector PerturbationMatrix::right_eigenvector(const BlockRef& b) const { return V.col(b.offset); }

CVector PerturbationMatrix::left_covector(const BlockRef& b) const {
  return Ustar.row(b.offset + b.k - 1).transpose();
}

double PerturbationMatrix::biorthogonality_error() const {
  const Index r = V.cols();
  if (r == 0) return 0.0;
  return linalg::operator_norm(Ustar * V - CMatrix::Identity(r, r));
}

PerturbationMatrix build_perturbation(Index n, const JordanSpec& spec,
                                      const EigenvectorProfile& profile,
                                      ensembles::SeededRng& rng) {
  spec.validate();
  profile.validate();
  const Index r = spec.rank();
  if (n < 1) throw ConfigError("build_perturbation: n must be positive");
  if (n < 4 * r) throw ConfigError("build_perturbation: n must be at least 4 * rank");

  PerturbationMatrix pm;
  pm.n = n;
  pm.spec = spec;
  pm.profile = profile;
  pm.J = spec.jordan_matrix();
  pm.V = CMatrix::Zero(n, r);

  switch (profile.kind) {
    case ProfileKind::local:
      for (Index c = 0; c < r; ++c) pm.V(c, c) = 1.0;
      break;
    case ProfileKind::delocalized_haar:
      if (r > 0) {
        pm.V = haar_frame(n, r, profile.real, rng);
        check_delocalized(pm.V, "delocalized-haar");
      }
      break;
    case ProfileKind::delocalized_fourier: {
      // Frequencies 1..r keep every column orthogonal to every conjugate column.
      if (n <= 2 * r) throw ConfigError("delocalized-fourier: n must exceed 2 * rank");
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));
      for (Index c = 0; c < r; ++c) {
        for (Index t = 0; t < n; ++t) {
          const double ang = 2.0 * std::numbers::pi * static_cast<double>((c + 1) * t % n) /
                             static_cast<double>(n);
          pm.V(t, c) = std::polar(scale, ang);
        }
      }
      break;
    }
    case ProfileKind::mixed: {
      const Index cl = profile.local_size;
      if (r > cl) throw ConfigError("mixed profile: rank exceeds local_size");
      if (n - cl < 4 * r) throw ConfigError("mixed profile: n too small for the delocalized tail");
      const CMatrix tail = haar_frame(n - cl, r, profile.real, rng);
      check_delocalized(tail, "mixed tail");
      const double a = std::sqrt(profile.local_mass);
      const double b = std::sqrt(1.0 - profile.local_mass);
      for (Index c = 0; c < r; ++c) pm.V(c, c) = a;
      pm.V.bottomRows(n - cl) = b * tail;
      break;
    }
    case ProfileKind::geometric: {
      // Column c lives on coordinates c, c + r, c + 2r, ...
      const double q = profile.ratio;
      for (Index c = 0; c < r; ++c) {
        const Index len = (n - c + r - 1) / r;
        const double cn = geometric_normalizer(q, len);
        double val = q * cn;
        for (Index t = 0; t < len; ++t) {
          pm.V(c + t * r, c) = val;
          val *= q;
        }
      }
      break;
    }
  }

  pm.Ustar = pm.V.adjoint();
  if (profile.distinct_left && r > 0) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxBiorthAttempts && !ok; ++attempt) {
      const CMatrix w = orthonormalize(pm.V + haar_frame(n, r, profile.real, rng));
      const CMatrix wv = w.adjoint() * pm.V;
      if (linalg::condition_number(wv) > kBiorthConditionCap) continue;
      pm.Ustar = wv.partialPivLu().solve(CMatrix(w.adjoint()));
      ok = true;
    }
    if (!ok) throw NumericalError("build_perturbation: biorthogonalization failed 10 times");
  }
  if (pm.biorthogonality_error() > 1e-10) {
    throw NumericalError("build_perturbation: Ustar V deviates from the identity");
  }
  return pm;
}

LimitScalars compute_limit_scalars(const PerturbationMatrix& pm) {
  LimitScalars out;
  out.blocks = pm.spec.blocks();
  const Index p = static_cast<Index>(out.blocks.size());
  CMatrix w(p, pm.n), v(p, pm.n);
  for (Index a = 0; a < p; ++a) {
    w.row(a) = pm.left_covector(out.blocks[static_cast<std::size_t>(a)]).transpose();
    v.row(a) = pm.right_eigenvector(out.blocks[static_cast<std::size_t>(a)]).transpose();
  }
  for (int d1 = 0; d1 < 2; ++d1) {
    for (int d2 = 0; d2 < 2; ++d2) {
      out.U[d1][d2] = bilinear(w, w, d1, d2);
      out.V[d1][d2] = bilinear(v, v, d1, d2);
      out.U_limit[d1][d2] = out.U[d1][d2];
      out.V_limit[d1][d2] = out.V[d1][d2];
    }
  }

  // Orthonormal frames with U = V have Kronecker-delta limits; same-conjugation
  // pairings vanish for complex frames.
  const auto& prof = pm.profile;
  if (prof.distinct_left || p == 0) return out;
  const CMatrix id = CMatrix::Identity(p, p);
  double same_conj = 0.0;
  switch (prof.kind) {
    case ProfileKind::local:
    case ProfileKind::geometric:
      same_conj = 1.0;
      break;
    case ProfileKind::delocalized_haar:
      same_conj = prof.real ? 1.0 : 0.0;
      break;
    case ProfileKind::delocalized_fourier:
      same_conj = 0.0;
      break;
    case ProfileKind::mixed:
      same_conj = prof.local_mass + (prof.real ? 1.0 - prof.local_mass : 0.0);
      break;
  }
  for (int d1 = 0; d1 < 2; ++d1) {
    for (int d2 = 0; d2 < 2; ++d2) {
      const double s = d1 == d2 ? same_conj : 1.0;
      out.U_limit[d1][d2] = s * id;
      out.V_limit[d1][d2] = s * id;
    }
  }
  out.has_analytic_limit = true;
  return out;
}

}  // namespace olab::perturbation
