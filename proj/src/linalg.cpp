#include "outlierlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lapack.hpp"
#include "outlierlab/errors.hpp"

namespace olab::linalg {

namespace {

void require_square(Index rows, Index cols, const char* what) {
  if (rows != cols || rows < 1) {
    throw ConfigError(std::string(what) + ": expected a non-empty square matrix, got " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

void require_finite(const CMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw ConfigError(std::string(what) + ": matrix has non-finite entries");
  }
}

bool lex_less(cdouble a, cdouble b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

Spectrum eigenvalues(const CMatrix& m) {
  require_square(m.rows(), m.cols(), "eigenvalues");
  require_finite(m, "eigenvalues");
  const auto n = static_cast<lapack_int>(m.rows());
  CMatrix work = m;
  Spectrum w(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, w.data(), nullptr, 1,
                    nullptr, 1);
  if (info > 0) {
    throw NumericalError("eigenvalues: QR iteration failed to converge (zgeev info=" +
                         std::to_string(info) + ")");
  }
  if (info < 0) throw NumericalError("eigenvalues: zgeev rejected argument " + std::to_string(-info));
  return w;
}

Spectrum eigenvalues(const RMatrix& m) {
  require_square(m.rows(), m.cols(), "eigenvalues");
  if (!m.allFinite()) throw ConfigError("eigenvalues: matrix has non-finite entries");
  const auto n = static_cast<lapack_int>(m.rows());
  RMatrix work = m;
  std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n,
                                        wr.data(), wi.data(), nullptr, 1, nullptr, 1);
  if (info > 0) {
    throw NumericalError("eigenvalues: QR iteration failed to converge (dgeev info=" +
                         std::to_string(info) + ")");
  }
  if (info < 0) throw NumericalError("eigenvalues: dgeev rejected argument " + std::to_string(-info));
  Spectrum w(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = {wr[i], wi[i]};
  return w;
}

CMatrix schur_complement(const CMatrix& m, std::span<const Index> eliminate) {
  require_square(m.rows(), m.cols(), "schur_complement");
  const Index n = m.rows();
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  for (Index e : eliminate) {
    if (e < 0 || e >= n) throw ConfigError("schur_complement: index out of range");
    if (drop[static_cast<std::size_t>(e)]) throw ConfigError("schur_complement: repeated index");
    drop[static_cast<std::size_t>(e)] = true;
  }
  std::vector<Index> elim(eliminate.begin(), eliminate.end());
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  if (keep.empty()) throw ConfigError("schur_complement: nothing left after elimination");
  if (elim.empty()) return m;

  const CMatrix a = m(elim, elim);
  const CMatrix b = m(elim, keep);
  const CMatrix c = m(keep, elim);
  const CMatrix d = m(keep, keep);
  const double cond = condition_number(a);
  if (!(cond < kTolerances.pivot_condition_cap)) {
    throw NumericalError("schur_complement: eliminated block is singular or ill-conditioned "
                         "(cond=" + std::to_string(cond) + ")");
  }
  return d - c * a.partialPivLu().solve(b);
}

CMatrix jordan_block(cdouble theta, int k) {
  if (k < 1) throw ConfigError("jordan_block: size must be at least 1");
  CMatrix j = CMatrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    j(i, i) = theta;
    if (i + 1 < k) j(i, i + 1) = 1.0;
  }
  return j;
}

double spectral_radius(const CMatrix& m) {
  const Spectrum s = eigenvalues(m);
  double r = 0.0;
  for (cdouble z : s) r = std::max(r, std::abs(z));
  return r;
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double min_singular_value(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

ShiftedLu::ShiftedLu(const CMatrix& m, cdouble lambda) : n_(m.rows()) {
  require_square(m.rows(), m.cols(), "ShiftedLu");
  ComplexFactor f;
  f.lu = m;
  f.lu.diagonal().array() -= lambda;
  const auto n = static_cast<lapack_int>(n_);
  const double anorm = LAPACKE_zlange(LAPACK_COL_MAJOR, '1', n, n, f.lu.data(), n);
  f.piv.resize(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, f.lu.data(), n, f.piv.data());
  if (info > 0) throw NumericalError("ShiftedLu: exactly singular system");
  LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', n, f.lu.data(), n, anorm, &rcond_);
  if (rcond_ < kTolerances.singular_rcond) {
    throw NumericalError("ShiftedLu: shift is too close to the spectrum (rcond=" +
                         std::to_string(rcond_) + ")");
  }
  factor_ = std::move(f);
}

ShiftedLu::ShiftedLu(const RMatrix& m, cdouble lambda) : n_(m.rows()) {
  require_square(m.rows(), m.cols(), "ShiftedLu");
  if (lambda.imag() != 0.0) {
    *this = ShiftedLu(CMatrix(m.cast<cdouble>()), lambda);
    return;
  }
  RealFactor f;
  f.lu = m;
  f.lu.diagonal().array() -= lambda.real();
  const auto n = static_cast<lapack_int>(n_);
  const double anorm = LAPACKE_dlange(LAPACK_COL_MAJOR, '1', n, n, f.lu.data(), n);
  f.piv.resize(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dgetrf(LAPACK_COL_MAJOR, n, n, f.lu.data(), n, f.piv.data());
  if (info > 0) throw NumericalError("ShiftedLu: exactly singular system");
  LAPACKE_dgecon(LAPACK_COL_MAJOR, '1', n, f.lu.data(), n, anorm, &rcond_);
  if (rcond_ < kTolerances.singular_rcond) {
    throw NumericalError("ShiftedLu: shift is too close to the spectrum (rcond=" +
                         std::to_string(rcond_) + ")");
  }
  factor_ = std::move(f);
}

CMatrix ShiftedLu::solve(const CMatrix& rhs) const {
  if (rhs.rows() != n_) throw ConfigError("ShiftedLu::solve: dimension mismatch");
  const auto n = static_cast<lapack_int>(n_);
  if (const auto* cf = std::get_if<ComplexFactor>(&factor_)) {
    CMatrix x = rhs;
    const auto nrhs = static_cast<lapack_int>(x.cols());
    LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, nrhs, cf->lu.data(), n, cf->piv.data(), x.data(), n);
    return x;
  }
  const auto& rf = std::get<RealFactor>(factor_);
  // Real factor: solve for the real and imaginary parts as separate columns.
  const Index k = rhs.cols();
  RMatrix parts(n_, 2 * k);
  parts.leftCols(k) = rhs.real();
  parts.rightCols(k) = rhs.imag();
  LAPACKE_dgetrs(LAPACK_COL_MAJOR, 'N', n, static_cast<lapack_int>(2 * k), rf.lu.data(), n,
                 rf.piv.data(), parts.data(), n);
  CMatrix x(n_, k);
  x.real() = parts.leftCols(k);
  x.imag() = parts.rightCols(k);
  return x;
}

CVector resolvent_apply(const CMatrix& m, cdouble lambda, const CVector& v) {
  if (v.size() != m.rows()) throw ConfigError("resolvent_apply: dimension mismatch");
  ShiftedLu lu(m, lambda);
  return lu.solve(v);
}

MultisetMatch match_multisets(std::span<const cdouble> a, std::span<const cdouble> b,
                              double tol) {
  MultisetMatch out;
  struct Candidate {
    double dist;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> cands;
  cands.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) cands.push_back({std::abs(a[i] - b[j]), i, j});
  }
  std::sort(cands.begin(), cands.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.dist != y.dist) return x.dist < y.dist;
    if (a[x.i] != a[y.i]) return lex_less(a[x.i], a[y.i]);
    return lex_less(b[x.j], b[y.j]);
  });
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    out.pairs.emplace_back(c.i, c.j);
    out.max_distance = std::max(out.max_distance, c.dist);
  }
  out.matched = a.size() == b.size() && out.max_distance <= tol;
  return out;
}

}  // namespace olab::linalg
