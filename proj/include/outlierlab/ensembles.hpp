#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "outlierlab/linalg.hpp"

namespace olab::ensembles {

enum class AtomKind {
  complex_gaussian,
  real_gaussian,
  uniform_square,
  rademacher,
  bernoulli_symmetric_complex,
};

/// Law of a single iid entry. Every kind is centred with E|x|^2 = 1.
struct AtomDistribution {
  AtomKind kind = AtomKind::complex_gaussian;
  cdouble ex2 = 0.0;                 // E x^2
  double eabs2 = 1.0;                // E |x|^2
  double eabs4 = 2.0;                // E |x|^4
  double moment_bound_order = 0.0;   // highest finite absolute moment (+inf if all)
  double half_width = 0.0;           // uniform-square only: support [-l, l]^2

  /// Throws ConfigError for uniform-square with l != sqrt(3/2).
  static AtomDistribution make(AtomKind kind, double half_width = 0.0);
  /// Parses the stable CLI name, e.g. "complex-gaussian".
  static AtomDistribution from_name(std::string_view name, double half_width = 0.0);

  std::string name() const;
  /// Real-valued kinds draw real entries, so X can be held in real storage.
  bool is_real() const;
};

std::string_view atom_kind_name(AtomKind kind);

/// The only admissible uniform-square half width.
double uniform_square_half_width();

/// Deterministic generator for one (master_seed, stream_id) pair. Streams with
/// different ids are statistically independent; the same pair always yields
/// the same sequence.
class SeededRng {
 public:
  SeededRng(std::uint64_t master_seed, std::uint64_t stream_id);

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform on [0, 1).
  double uniform01() { return unit_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Stream ids at or above this value are reserved for non-trial draws.
inline constexpr std::uint64_t kReservedStreamBase = 0xFFFF'FFFF'0000'0000ULL;

cdouble sample_atom(const AtomDistribution& dist, SeededRng& rng);

/// n x n matrix of independent atom draws, filled column by column.
CMatrix sample_iid_matrix(Index n, const AtomDistribution& dist, SeededRng& rng);

/// Same draws as sample_iid_matrix for a real kind, held in real storage.
/// Throws ConfigError for complex kinds.
RMatrix sample_real_iid_matrix(Index n, const AtomDistribution& dist, SeededRng& rng);

struct MomentEstimate {
  cdouble mean;
  cdouble ex2;
  double eabs2 = 0.0;
  double eabs4 = 0.0;
  // Standard errors; complex quantities report the modulus of the
  // per-component errors.
  double se_mean = 0.0;
  double se_ex2 = 0.0;
  double se_eabs2 = 0.0;
  double se_eabs4 = 0.0;
};

/// Monte Carlo moments from `draws` samples (draws >= 10^4).
MomentEstimate estimate_moments(const AtomDistribution& dist, std::size_t draws,
                                SeededRng& rng);

}  // namespace olab::ensembles
