#include "outlierlab/ensembles.hpp"

#include <cmath>
#include <limits>

#include "outlierlab/errors.hpp"

namespace olab::ensembles {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct KindInfo {
  AtomKind kind;
  std::string_view name;
};

constexpr KindInfo kKinds[] = {
    {AtomKind::complex_gaussian, "complex-gaussian"},
    {AtomKind::real_gaussian, "real-gaussian"},
    {AtomKind::uniform_square, "uniform-square"},
    {AtomKind::rademacher, "rademacher"},
    {AtomKind::bernoulli_symmetric_complex, "bernoulli-symmetric-complex"},
};

// Welford accumulator for a real scalar.
struct Running {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  void push(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace

double uniform_square_half_width() { return std::sqrt(1.5); }

std::string_view atom_kind_name(AtomKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

AtomDistribution AtomDistribution::make(AtomKind kind, double half_width) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  AtomDistribution d;
  d.kind = kind;
  d.eabs2 = 1.0;
  d.moment_bound_order = inf;
  switch (kind) {
    case AtomKind::complex_gaussian:
      d.ex2 = 0.0;
      d.eabs4 = 2.0;
      break;
    case AtomKind::real_gaussian:
      d.ex2 = 1.0;
      d.eabs4 = 3.0;
      break;
    case AtomKind::uniform_square: {
      const double l = uniform_square_half_width();
      if (half_width != 0.0 && std::abs(half_width - l) > 1e-12) {
        throw ConfigError("uniform-square atom requires l = sqrt(3/2) so that E|x|^2 = 1");
      }
      d.half_width = l;
      d.ex2 = 0.0;
      d.eabs4 = 1.4;
      break;
    }
    case AtomKind::rademacher:
      d.ex2 = 1.0;
      d.eabs4 = 1.0;
      break;
    case AtomKind::bernoulli_symmetric_complex:
      d.ex2 = 0.0;
      d.eabs4 = 1.0;
      break;
  }
  if (kind != AtomKind::uniform_square && half_width != 0.0) {
    throw ConfigError("atom kind '" + std::string(atom_kind_name(kind)) +
                      "' takes no half-width parameter");
  }
  return d;
}

AtomDistribution AtomDistribution::from_name(std::string_view name, double half_width) {
  for (const auto& k : kKinds) {
    if (k.name == name) return make(k.kind, half_width);
  }
  throw ConfigError("unknown atom kind '" + std::string(name) + "'");
}

std::string AtomDistribution::name() const { return std::string(atom_kind_name(kind)); }

bool AtomDistribution::is_real() const {
  return kind == AtomKind::real_gaussian || kind == AtomKind::rademacher;
}

SeededRng::SeededRng(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_(master_seed), stream_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x9E3779B9U};
  engine_.seed(seq);
}

cdouble sample_atom(const AtomDistribution& dist, SeededRng& rng) {
  switch (dist.kind) {
    case AtomKind::complex_gaussian: {
      const double re = rng.normal();
      const double im = rng.normal();
      return {re * kInvSqrt2, im * kInvSqrt2};
    }
    case AtomKind::real_gaussian:
      return rng.normal();
    case AtomKind::uniform_square: {
      const double l = dist.half_width;
      const double re = rng.uniform(-l, l);
      const double im = rng.uniform(-l, l);
      return {re, im};
    }
    case AtomKind::rademacher:
      return (rng.bits() >> 63) ? 1.0 : -1.0;
    case AtomKind::bernoulli_symmetric_complex: {
      const std::uint64_t b = rng.bits();
      return {((b >> 63) ? kInvSqrt2 : -kInvSqrt2), ((b >> 62) & 1U) ? kInvSqrt2 : -kInvSqrt2};
    }
  }
  return 0.0;
}

CMatrix sample_iid_matrix(Index n, const AtomDistribution& dist, SeededRng& rng) {
  if (n < 1) throw ConfigError("sample_iid_matrix: n must be at least 1");
  CMatrix x(n, n);
  cdouble* p = x.data();
  const Index total = n * n;
  for (Index i = 0; i < total; ++i) p[i] = sample_atom(dist, rng);
  return x;
}

RMatrix sample_real_iid_matrix(Index n, const AtomDistribution& dist, SeededRng& rng) {
  if (n < 1) throw ConfigError("sample_real_iid_matrix: n must be at least 1");
  if (!dist.is_real()) {
    throw ConfigError("sample_real_iid_matrix: atom '" + dist.name() + "' is not real");
  }
  RMatrix x(n, n);
  double* p = x.data();
  const Index total = n * n;
  for (Index i = 0; i < total; ++i) p[i] = sample_atom(dist, rng).real();
  return x;
}

MomentEstimate estimate_moments(const AtomDistribution& dist, std::size_t draws,
                                SeededRng& rng) {
  if (draws < 10000) throw ConfigError("estimate_moments: at least 10^4 draws required");
  Running mre, mim, x2re, x2im, a2, a4;
  for (std::size_t i = 0; i < draws; ++i) {
    const cdouble x = sample_atom(dist, rng);
    const cdouble x2 = x * x;
    const double ab2 = std::norm(x);
    mre.push(x.real());
    mim.push(x.imag());
    x2re.push(x2.real());
    x2im.push(x2.imag());
    a2.push(ab2);
    a4.push(ab2 * ab2);
  }
  MomentEstimate out;
  out.mean = {mre.mean, mim.mean};
  out.ex2 = {x2re.mean, x2im.mean};
  out.eabs2 = a2.mean;
  out.eabs4 = a4.mean;
  out.se_mean = std::hypot(mre.se(), mim.se());
  out.se_ex2 = std::hypot(x2re.se(), x2im.se());
  out.se_eabs2 = a2.se();
  out.se_eabs4 = a4.se();
  return out;
}

}  // namespace olab::ensembles
