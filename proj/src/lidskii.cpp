#include "outlierlab/lidskii.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "outlierlab/errors.hpp"

namespace olab::lidskii {

using perturbation::BlockRef;
using perturbation::JordanSpec;

const char* convention_name(EliminationConvention c) {
  return c == EliminationConvention::larger_blocks_first ? "larger-blocks-first"
                                                         : "smaller-blocks-first";
}

CMatrix reduce_for_size(const CMatrix& r, const std::vector<int>& sizes, int k,
                        EliminationConvention convention) {
  if (r.rows() != r.cols() || static_cast<std::size_t>(r.rows()) != sizes.size()) {
    throw ConfigError("reduce_for_size: matrix and block sizes disagree");
  }
  std::vector<Index> active;
  std::vector<Index> eliminate;  // positions within `active`
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const bool take = convention == EliminationConvention::larger_blocks_first ? sizes[b] >= k
                                                                               : sizes[b] <= k;
    if (!take) continue;
    if (sizes[b] != k) eliminate.push_back(static_cast<Index>(active.size()));
    active.push_back(static_cast<Index>(b));
  }
  if (active.size() == eliminate.size()) {
    throw ConfigError("reduce_for_size: no block of size " + std::to_string(k));
  }
  const CMatrix sub = r(active, active);
  return linalg::schur_complement(sub, eliminate);
}

std::vector<cdouble> kth_roots(cdouble xi, int k) {
  if (k < 1) throw ConfigError("kth_roots: k must be positive");
  std::vector<cdouble> out;
  out.reserve(static_cast<std::size_t>(k));
  const cdouble base = k == 1 ? xi : std::pow(xi, 1.0 / static_cast<double>(k));
  for (int i = 0; i < k; ++i) {
    out.push_back(base * std::polar(1.0, 2.0 * std::numbers::pi * i / static_cast<double>(k)));
  }
  return out;
}

std::vector<cdouble> LidskiiPrediction::fluctuations(cdouble theta, int k) const {
  std::vector<cdouble> out;
  for (const auto& rec : records) {
    if (rec.theta == theta && rec.k == k) out.push_back(rec.fluctuation);
  }
  return out;
}

CMatrix lower_left_matrix(const std::vector<BlockRef>& blocks, const CMatrix& p) {
  const Index c = static_cast<Index>(blocks.size());
  CMatrix r(c, c);
  for (Index a = 0; a < c; ++a) {
    const auto& ba = blocks[static_cast<std::size_t>(a)];
    for (Index b = 0; b < c; ++b) {
      r(a, b) = p(ba.offset + ba.k - 1, blocks[static_cast<std::size_t>(b)].offset);
    }
  }
  return r;
}

namespace {

std::vector<int> distinct_sizes_desc(const std::vector<BlockRef>& blocks) {
  std::vector<int> ks;
  for (const auto& b : blocks) {
    if (std::find(ks.begin(), ks.end(), b.k) == ks.end()) ks.push_back(b.k);
  }
  std::sort(ks.rbegin(), ks.rend());
  return ks;
}

}  // namespace

LidskiiPrediction lidskii_predict(const JordanSpec& spec, const CMatrix& p,
                                  EliminationConvention convention) {
  spec.validate();
  const Index d = spec.rank();
  if (p.rows() != d || p.cols() != d) {
    throw ConfigError("lidskii_predict: P must be " + std::to_string(d) + "x" +
                      std::to_string(d));
  }
  linalg::require_finite(p, "lidskii_predict");
  LidskiiPrediction out;
  for (cdouble theta : spec.thetas()) {
    const auto blocks = spec.blocks_of(theta);
    const CMatrix r = lower_left_matrix(blocks, p);
    std::vector<int> sizes;
    for (const auto& b : blocks) sizes.push_back(b.k);
    for (int k : distinct_sizes_desc(blocks)) {
      const CMatrix f = reduce_for_size(r, sizes, k, convention);
      linalg::Spectrum xi = linalg::eigenvalues(f);
      std::sort(xi.begin(), xi.end(), linalg::lex_less);
      for (std::size_t j = 0; j < xi.size(); ++j) {
        const auto roots = kth_roots(xi[j], k);
        for (int i = 0; i < k; ++i) {
          out.records.push_back({theta, k, static_cast<int>(j), i, xi[j],
                                 roots[static_cast<std::size_t>(i)]});
        }
      }
    }
  }
  return out;
}

std::vector<int> assign_block_sizes(const std::vector<cdouble>& deviations,
                                    const std::vector<BlockRef>& blocks) {
  std::vector<int> slots;
  for (const auto& b : blocks) slots.insert(slots.end(), static_cast<std::size_t>(b.k), b.k);
  if (slots.size() != deviations.size()) {
    throw ConfigError("assign_block_sizes: cluster size does not match the Jordan structure");
  }
  std::sort(slots.rbegin(), slots.rend());
  std::vector<std::size_t> order(deviations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(deviations[a]) > std::abs(deviations[b]);
  });
  std::vector<int> out(deviations.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = slots[r];
  return out;
}

bool SlopeReport::all_ok() const {
  if (zero_perturbation) return true;
  return !groups.empty() && std::all_of(groups.begin(), groups.end(), [](const SlopeGroup& g) {
    return g.slope_ok && g.match_ok;
  });
}

SlopeReport verify_slope(const JordanSpec& spec, const CMatrix& p,
                         const std::vector<double>& eps_list, EliminationConvention convention,
                         double eps_check) {
  spec.validate();
  if (spec.empty()) throw ConfigError("verify_slope: empty Jordan structure");
  if (eps_list.size() < 2) throw ConfigError("verify_slope: need at least two eps values");
  for (std::size_t a = 0; a < eps_list.size(); ++a) {
    if (!(eps_list[a] > 0.0)) throw ConfigError("verify_slope: eps must be positive");
    if (a > 0 && !(eps_list[a] < eps_list[a - 1])) {
      throw ConfigError("verify_slope: eps list must be strictly decreasing");
    }
  }
  SlopeReport rep;
  rep.convention = convention;
  rep.eps = eps_list;
  rep.eps_check = eps_check > 0.0 ? eps_check : eps_list.back();

  const CMatrix m = spec.jordan_matrix();
  const auto thetas = spec.thetas();
  if (p.isZero(0.0)) {
    rep.zero_perturbation = true;
    return rep;
  }
  const LidskiiPrediction pred = lidskii_predict(spec, p, convention);

  // Per (theta, k): shifts at each eps, in assignment order.
  using Key = std::pair<std::size_t, int>;
  auto cluster_shifts = [&](double eps) {
    const linalg::Spectrum lam = linalg::eigenvalues(CMatrix(m + eps * p));
    std::vector<std::vector<cdouble>> by_theta(thetas.size());
    for (cdouble l : lam) {
      std::size_t best = 0;
      for (std::size_t t = 1; t < thetas.size(); ++t) {
        if (std::abs(l - thetas[t]) < std::abs(l - thetas[best])) best = t;
      }
      by_theta[best].push_back(l - thetas[best]);
    }
    std::map<Key, std::vector<cdouble>> out;
    bool overlap = false;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const auto blocks = spec.blocks_of(thetas[t]);
      if (by_theta[t].size() != static_cast<std::size_t>(spec.multiplicity(thetas[t]))) {
        overlap = true;
        continue;
      }
      const auto ks = assign_block_sizes(by_theta[t], blocks);
      for (std::size_t a = 0; a < ks.size(); ++a) out[{t, ks[a]}].push_back(by_theta[t][a]);
    }
    return std::make_pair(out, overlap);
  };

  std::map<Key, std::vector<double>> logdev;
  for (double eps : eps_list) {
    auto [groups, overlap] = cluster_shifts(eps);
    rep.ambiguous = rep.ambiguous || overlap;
    for (auto& [key, shifts] : groups) {
      double acc = 0.0;
      for (cdouble s : shifts) acc += std::log(std::max(std::abs(s), 1e-300));
      logdev[key].push_back(acc / static_cast<double>(shifts.size()));
    }
  }
  auto [check_groups, check_overlap] = cluster_shifts(rep.eps_check);
  rep.ambiguous = rep.ambiguous || check_overlap;

  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (int k : distinct_sizes_desc(spec.blocks_of(thetas[t]))) {
      SlopeGroup g;
      g.theta = thetas[t];
      g.k = k;
      g.expected_slope = 1.0 / k;
      const Key key{t, k};
      const auto& ys = logdev[key];
      if (ys.size() == eps_list.size()) {
        // Least-squares slope of mean log deviation against log eps.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double nn = static_cast<double>(ys.size());
        for (std::size_t a = 0; a < ys.size(); ++a) {
          const double x = std::log(eps_list[a]);
          sx += x;
          sy += ys[a];
          sxx += x * x;
          sxy += x * ys[a];
        }
        g.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        g.slope_ok = std::abs(g.slope - g.expected_slope) <= 0.05 * g.expected_slope;
      }
      const auto predicted = pred.fluctuations(thetas[t], k);
      std::vector<cdouble> observed;
      const double scale_eps = std::pow(rep.eps_check, 1.0 / k);
      for (cdouble s : check_groups[key]) observed.push_back(s / scale_eps);
      g.count = static_cast<int>(observed.size());
      double scale = 0.0;
      for (cdouble z : predicted) scale = std::max(scale, std::abs(z));
      g.match_tolerance = 10.0 * std::pow(rep.eps_check, 1.0 / (k * (k + 1.0)));
      if (scale > 0.0 && observed.size() == predicted.size()) {
        const auto mm = linalg::match_multisets(observed, predicted, g.match_tolerance * scale);
        g.match_error = mm.max_distance / scale;
        g.match_ok = mm.matched;
      }
      rep.groups.push_back(g);
    }
  }
  return rep;
}

}  // namespace olab::lidskii
