#include "outlierlab/secular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "outlierlab/errors.hpp"

namespace olab::secular {

namespace {

// Truncated moment sequence MJ_k = (Ustar Y^k V) J, k = 0..K.
struct MomentSeries {
  std::vector<CMatrix> mj;
  bool converged = false;
};

template <class NextFn>
MomentSeries build_series(NextFn&& next, const CMatrix& j, double rho,
                          const SecularOptions& opt) {
  MomentSeries out;
  double peak = 0.0;
  int quiet = 0;
  double scale = 1.0;
  for (int k = 0; k <= opt.max_terms; ++k) {
    const CMatrix mk = next(k);
    out.mj.push_back(mk * j);
    const double term = out.mj.back().norm() * scale;
    peak = std::max(peak, term);
    scale /= rho;
    quiet = term <= opt.series_tol * std::max(1.0, peak) ? quiet + 1 : 0;
    if (quiet >= 3) {
      out.converged = true;
      return out;
    }
    if (!std::isfinite(term)) return out;
  }
  return out;
}

struct Evaluator {
  const std::vector<CMatrix>& mj;
  Index r;

  // T(lambda) and T'(lambda) by Horner in mu = 1 / lambda.
  void eval(cdouble lambda, CMatrix& t, CMatrix& dt) const {
    const cdouble mu = 1.0 / lambda;
    const int kk = static_cast<int>(mj.size()) - 1;
    CMatrix s = mj[static_cast<std::size_t>(kk)];
    CMatrix ds = static_cast<double>(kk) * mj[static_cast<std::size_t>(kk)];
    for (int k = kk - 1; k >= 0; --k) {
      s = s * mu + mj[static_cast<std::size_t>(k)];
      ds = ds * mu + static_cast<double>(k) * mj[static_cast<std::size_t>(k)];
    }
    // sum_k k MJ_k mu^k = ds evaluated above; T' = I + mu * that.
    t = lambda * CMatrix::Identity(r, r) - s;
    dt = CMatrix::Identity(r, r) + mu * ds;
  }

  cdouble det(cdouble lambda) const {
    CMatrix t, dt;
    eval(lambda, t, dt);
    return t.partialPivLu().determinant();
  }

  // d/dlambda log det T = tr(T^{-1} T').
  bool log_derivative(cdouble lambda, cdouble& out) const {
    CMatrix t, dt;
    eval(lambda, t, dt);
    Eigen::PartialPivLU<CMatrix> lu(t);
    const cdouble d = lu.determinant();
    if (!(std::abs(d) > 0.0) || !std::isfinite(std::abs(d))) return false;
    out = lu.solve(dt).trace();
    return std::isfinite(out.real()) && std::isfinite(out.imag());
  }
};

// Number of zeros of det T inside |lambda - c| < radius.
bool winding_number(const Evaluator& ev, cdouble c, double radius, int max_points, int& count) {
  for (int npts = 128; npts <= max_points; npts *= 2) {
    double total = 0.0;
    bool fine = true;
    cdouble prev = ev.det(c + radius);
    if (!(std::abs(prev) > 0.0)) return false;
    for (int q = 1; q <= npts; ++q) {
      const double ang = 2.0 * std::numbers::pi * q / npts;
      const cdouble cur = ev.det(c + std::polar(radius, ang));
      if (!(std::abs(cur) > 0.0) || !std::isfinite(std::abs(cur))) return false;
      const double step = std::arg(cur / prev);
      if (std::abs(step) > std::numbers::pi / 4.0) {
        fine = false;
        break;
      }
      total += step;
      prev = cur;
    }
    if (fine) {
      count = static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
      return true;
    }
  }
  return false;
}

SecularResult solve(const std::vector<CMatrix>& mj, Index r, const std::vector<cdouble>& thetas,
                    const std::vector<int>& expected, double delta, const SecularOptions& opt) {
  SecularResult res;
  res.terms = static_cast<int>(mj.size());
  res.roots.assign(thetas.size(), {});
  const Evaluator ev{mj, r};
  std::vector<cdouble> found;

  // Initial guesses: eigenvalues of sum_k MJ_k theta^{-k}.
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const cdouble th = thetas[t];
    CMatrix c = CMatrix::Zero(r, r);
    cdouble pw = 1.0;
    for (const auto& m : mj) {
      c += m * pw;
      pw /= th;
    }
    linalg::Spectrum guess = linalg::eigenvalues(c);
    std::sort(guess.begin(), guess.end(),
              [&](cdouble a, cdouble b) { return std::abs(a - th) < std::abs(b - th); });
    std::vector<cdouble> starts;
    for (cdouble g : guess) {
      if (std::abs(g - th) < delta && static_cast<int>(starts.size()) < expected[t]) starts.push_back(g);
    }
    for (int extra = static_cast<int>(starts.size()); extra < expected[t]; ++extra) {
      starts.push_back(th + std::polar(0.5 * delta, 2.0 * std::numbers::pi * (extra + 0.25) /
                                                        std::max(1, expected[t])));
    }

    for (cdouble z : starts) {
      bool converged = false;
      for (int it = 0; it < opt.newton_max_iter; ++it) {
        cdouble ld;
        if (!ev.log_derivative(z, ld)) {
          // An exactly singular T(z) means z is a root.
          converged = ev.det(z) == 0.0;
          break;
        }
        for (cdouble f : found) ld -= 1.0 / (z - f);
        if (!(std::abs(ld) > 0.0)) break;
        const cdouble step = 1.0 / ld;
        z -= step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
        if (std::abs(step) <= opt.newton_tol * std::max(1.0, std::abs(z))) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        res.reason = "Newton iteration did not converge";
        return res;
      }
      if (!(std::abs(z - th) < delta)) {
        res.reason = "Newton iterate left the outlier disk";
        return res;
      }
      for (cdouble f : found) {
        if (std::abs(z - f) <= 1e-9 * std::max(1.0, std::abs(z))) {
          res.reason = "Newton converged to an already deflated root";
          return res;
        }
      }
      found.push_back(z);
      res.roots[t].push_back(z);
    }
  }

  for (std::size_t t = 0; t < thetas.size(); ++t) {
    int count = -1;
    if (!winding_number(ev, thetas[t], delta, opt.winding_max_points, count)) {
      res.reason = "winding number could not be resolved";
      return res;
    }
    if (count != expected[t]) {
      res.reason = "winding number " + std::to_string(count) + " differs from the expected " +
                   std::to_string(expected[t]);
      return res;
    }
  }
  res.ok = true;
  return res;
}

bool disks_disjoint(const std::vector<cdouble>& thetas, double delta) {
  for (std::size_t a = 0; a < thetas.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (std::abs(thetas[a] - thetas[b]) <= 2.0 * delta) return false;
    }
  }
  return true;
}

double series_radius(const std::vector<cdouble>& thetas, double delta) {
  double m = std::numeric_limits<double>::infinity();
  for (cdouble t : thetas) m = std::min(m, std::abs(t));
  return m - delta;
}

void check_inputs(Index n, const CMatrix& v, const CMatrix& ustar, const CMatrix& j,
                  const std::vector<cdouble>& thetas, const std::vector<int>& expected) {
  const Index r = j.rows();
  if (v.rows() != n || v.cols() != r || ustar.rows() != r || ustar.cols() != n || j.cols() != r) {
    throw ConfigError("secular::outliers: factor shapes disagree");
  }
  if (thetas.size() != expected.size()) throw ConfigError("secular::outliers: expected counts");
}

}  // namespace

SecularResult outliers(const CMatrix& y, const CMatrix& v, const CMatrix& ustar,
                       const CMatrix& j, const std::vector<cdouble>& thetas,
                       const std::vector<int>& expected, double delta,
                       const SecularOptions& options) {
  check_inputs(y.rows(), v, ustar, j, thetas, expected);
  SecularResult res;
  if (!disks_disjoint(thetas, delta)) {
    res.reason = "outlier disks overlap";
    return res;
  }
  const double rho = series_radius(thetas, delta);
  if (!(rho > 1.0)) {
    res.reason = "series radius does not clear the unit disk";
    return res;
  }
  CMatrix b = v;
  auto next = [&](int k) -> CMatrix {
    if (k > 0) b = y * b;
    return ustar * b;
  };
  const MomentSeries ms = build_series(next, j, rho, options);
  if (!ms.converged) {
    res.reason = "moment series did not converge";
    return res;
  }
  return solve(ms.mj, j.rows(), thetas, expected, delta, options);
}

SecularResult outliers(const RMatrix& y, const CMatrix& v, const CMatrix& ustar,
                       const CMatrix& j, const std::vector<cdouble>& thetas,
                       const std::vector<int>& expected, double delta,
                       const SecularOptions& options) {
  check_inputs(y.rows(), v, ustar, j, thetas, expected);
  SecularResult res;
  if (!disks_disjoint(thetas, delta)) {
    res.reason = "outlier disks overlap";
    return res;
  }
  const double rho = series_radius(thetas, delta);
  if (!(rho > 1.0)) {
    res.reason = "series radius does not clear the unit disk";
    return res;
  }
  const Index r = v.cols();
  const bool real_v = v.imag().isZero(0.0);
  // Real arithmetic on [Re V, Im V] (or Re V alone).
  RMatrix b(v.rows(), real_v ? r : 2 * r);
  b.leftCols(r) = v.real();
  if (!real_v) b.rightCols(r) = v.imag();
  auto next = [&](int k) -> CMatrix {
    if (k > 0) b = y * b;
    CMatrix bc(b.rows(), r);
    if (real_v) {
      bc = b.cast<cdouble>();
    } else {
      bc.real() = b.leftCols(r);
      bc.imag() = b.rightCols(r);
    }
    return ustar * bc;
  };
  const MomentSeries ms = build_series(next, j, rho, options);
  if (!ms.converged) {
    res.reason = "moment series did not converge";
    return res;
  }
  return solve(ms.mj, j.rows(), thetas, expected, delta, options);
}

}  // namespace olab::secular
