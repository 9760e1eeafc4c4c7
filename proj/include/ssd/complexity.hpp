#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssd/decoder.hpp"
#include "ssd/model.hpp"
#include "ssd/numerics.hpp"
#include "ssd/parallel.hpp"

namespace ssd {

// ---------------------------------------------------------------------------
// Binary overlap counts
// ---------------------------------------------------------------------------

/// Number of binary x_a of length k with ||x_a||_0 = k2 at squared distance
/// eta from a fixed x_t with ||x_t||_0 = k1. Zero off the admissible lattice
/// eta in {|k1-k2|, |k1-k2|+2, ..., min(k1+k2, k)}.
inline Count count_binary(int k1, int k2, int k, int eta) {
  if (k < 0 || k1 < 0 || k2 < 0 || k1 > k || k2 > k) return 0;
  const int lo = std::abs(k1 - k2);
  const int hi = std::min(k1 + k2, k);
  if (eta < lo || eta > hi || (eta - lo) % 2 != 0) return 0;
  long long p = 0;
  long long q = 0;
  if (k1 < k2) {
    p = (eta - (k2 - k1)) / 2;  // ones of x_t cleared in x_a
    q = k - k2 - p;             // zeros of x_t kept zero
  } else {
    q = (eta - (k1 - k2)) / 2;  // zeros of x_t set in x_a
    p = k2 - q;                 // ones of x_t kept
  }
  return checked_mul(binomial(k1, p), binomial(k - k1, q));
}

// ---------------------------------------------------------------------------
// Ternary overlap counts
// ---------------------------------------------------------------------------

/// Alignment counts p[i+1][j+1] = #positions where x_t = i and x_a = j.
/// Rows for x_t = 0 are aggregated: the closed forms count both signs of
/// each nonzero placed on a zero of x_t, so only p[1][0] + p[1][2] matters.
struct TernaryOverlap {
  std::array<std::array<int, 3>, 3> p{};
  int eta = 0;
  Count g = 0;

  int at(int i, int j) const { return p[i + 1][j + 1]; }
};

inline int ternary_eta(const std::array<std::array<int, 3>, 3>& p) {
  int eta = 0;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) eta += p[i + 1][j + 1] * (i - j) * (i - j);
  return eta;
}

/// Closed-form count for one alignment pattern: g1 when k1 <= k2, g2 when
/// k1 > k2. Zero if the pattern violates the row sums.
inline Count count_ternary(int k1, int k2, int k, int a, const std::array<std::array<int, 3>, 3>& p) {
  if (k < 0 || k1 < 0 || k1 > k || k2 < 0 || k2 > k || a < 0 || a > k1) return 0;
  for (const auto& row : p)
    for (int v : row)
      if (v < 0) return 0;
  auto row = [&](int i) { return p[i + 1][0] + p[i + 1][1] + p[i + 1][2]; };
  if (row(1) != a || row(-1) != k1 - a || row(0) != k - k1) return 0;
  const int nonzeros = k - (p[0][1] + p[1][1] + p[2][1]);
  if (nonzeros != k2) return 0;

  const int p10 = p[2][1], p1m1 = p[2][0], p11 = p[2][2];
  const int pm10 = p[0][1], pm11 = p[0][2];
  const int zero_nz = p[1][0] + p[1][2];

  if (k1 <= k2) {
    const long long placed = k2 - (k1 - pm10 - p10);
    Count g = checked_mul(binomial(a, p10), binomial(a - p10, p1m1));
    g = checked_mul(g, binomial(k1 - a, pm10));
    g = checked_mul(g, binomial(k1 - a - pm10, pm11));
    g = checked_mul(g, binomial(k - k1, placed));
    return placed < 0 ? 0 : checked_mul(g, pow2(placed));
  }
  const long long rest = k2 - (zero_nz + p1m1 + p11 + pm11);
  Count g = checked_mul(binomial(k - k1, zero_nz), binomial(a, p1m1));
  g = checked_mul(g, binomial(a - p1m1, p11));
  g = checked_mul(g, binomial(k1 - a, pm11));
  g = checked_mul(g, binomial(k1 - a - pm11, rest));
  return checked_mul(g, pow2(zero_nz));
}

/// Enumerates the free alignment entries over their admissible ranges and
/// reports each pattern with its eta and count. The dependent entries
/// follow from the row sums.
inline void for_each_ternary_overlap(int k1, int k2, int k, int a, const std::function<void(const TernaryOverlap&)>& visit) {
  if (k < 0 || k1 < 0 || k1 > k || k2 < 0 || k2 > k || a < 0 || a > k1) return;
  TernaryOverlap o;
  auto emit = [&] {
    o.eta = ternary_eta(o.p);
    o.g = count_ternary(k1, k2, k, a, o.p);
    if (o.g != 0) visit(o);
  };
  auto& p = o.p;
  if (k1 <= k2) {
    for (int p10 = 0; p10 <= std::min(a, k - k2); ++p10) {
      for (int p1m1 = 0; p1m1 <= a - p10; ++p1m1) {
        for (int pm10 = 0; pm10 <= std::min(k1 - a, k - k2 - p10); ++pm10) {
          for (int pm11 = 0; pm11 <= k1 - a - pm10; ++pm11) {
            const int placed = k2 - (k1 - pm10 - p10);
            p = {};
            p[2] = {p1m1, p10, a - p10 - p1m1};
            p[0] = {k1 - a - pm10 - pm11, pm10, pm11};
            p[1] = {0, k - k1 - placed, placed};
            emit();
          }
        }
      }
    }
    return;
  }
  for (int zero_nz = 0; zero_nz <= std::min(k2, k - k1); ++zero_nz) {
    for (int p1m1 = 0; p1m1 <= std::min(a, k2 - zero_nz); ++p1m1) {
      const int lo = std::max(0, k2 - (k1 - a) - (zero_nz + p1m1));
      const int hi = std::min(a - p1m1, k2 - (zero_nz + p1m1));
      for (int p11 = lo; p11 <= hi; ++p11) {
        for (int pm11 = 0; pm11 <= std::min(k2 - zero_nz - p1m1 - p11, k1 - a); ++pm11) {
          const int pm1m1 = k2 - (zero_nz + p1m1 + p11 + pm11);
          p = {};
          p[2] = {p1m1, a - p1m1 - p11, p11};
          p[0] = {pm1m1, k1 - a - pm11 - pm1m1, pm11};
          p[1] = {0, k - k1 - zero_nz, zero_nz};
          emit();
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Expected node counts
// ---------------------------------------------------------------------------

namespace detail {

/// Probability that a lattice point at squared distance eta from x_t falls
/// inside the level-k sphere.
inline double sphere_prob(int n, int m, int k, double sigma2, double d2, double eta) {
  if (!(d2 > 0.0)) return 0.0;
  const double scale = sigma2 + eta;
  const double x = scale > 0.0 ? d2 / (2.0 * scale) : std::numeric_limits<double>::infinity();
  return regularized_gamma(0.5 * (n - m + k), x);
}

inline void check_levels(int m, int n, int k, int l_prior, int l_dec, double sigma2, double d2) {
  if (m < 1 || n < m) throw InvalidArgument("expected nodes: requires 1 <= m <= n");
  if (k < 1 || k > m) throw InvalidArgument("expected nodes: requires 1 <= k <= m");
  if (l_prior < 0 || l_prior > m || l_dec < 0 || l_dec > m) throw InvalidArgument("expected nodes: requires 0 <= l <= m");
  if (!(sigma2 >= 0.0)) throw InvalidArgument("expected nodes: sigma2 must be nonnegative");
  if (!(d2 >= 0.0)) throw InvalidArgument("expected nodes: d2 must be nonnegative");
}

/// E[N_k] for binary x_t uniform over the l_prior-sparse set, decoded with
/// sparsity budget l_dec.
inline double expected_nodes_binary(int m, int n, int k, int l_prior, int l_dec, double sigma2, double d2) {
  check_levels(m, n, k, l_prior, l_dec, sigma2, d2);
  std::vector<double> prob(k + 1);
  for (int eta = 0; eta <= k; ++eta) prob[eta] = sphere_prob(n, m, k, sigma2, d2, eta);

  Count total = 0;
  double acc = 0.0;
  for (int k3 = 0; k3 <= l_prior; ++k3) {
    for (int k1 = std::max(0, k3 - (m - k)); k1 <= std::min(k, k3); ++k1) {
      const Count w = prefix_prior_binary(m, k, k1, k3);
      if (w == 0) continue;
      total = checked_add(total, w);
      double inner = 0.0;
      for (int k2 = 0; k2 <= std::min(k, l_dec); ++k2)
        for (int eta = std::abs(k1 - k2); eta <= std::min(k1 + k2, k); eta += 2)
          inner += prob[eta] * to_double(count_binary(k1, k2, k, eta));
      acc += to_double(w) * inner;
    }
  }
  return acc / to_double(total);
}

inline double expected_nodes_ternary(int m, int n, int k, int l_prior, int l_dec, double sigma2, double d2) {
  check_levels(m, n, k, l_prior, l_dec, sigma2, d2);
  std::vector<double> prob(4 * k + 1);
  for (int eta = 0; eta <= 4 * k; ++eta) prob[eta] = sphere_prob(n, m, k, sigma2, d2, eta);

  Count total = 0;
  double acc = 0.0;
  for (int k1 = 0; k1 <= std::min(k, l_prior); ++k1) {
    for (int a = 0; a <= k1; ++a) {
      Count w = 0;
      for (int k3 = k1; k3 <= l_prior; ++k3) {
        if (k3 - k1 > m - k) break;
        w = checked_add(w, prefix_prior_ternary(m, k, k1, k3, a));
      }
      if (w == 0) continue;
      total = checked_add(total, w);
      double inner = 0.0;
      for (int k2 = 0; k2 <= std::min(k, l_dec); ++k2)
        for_each_ternary_overlap(k1, k2, k, a, [&](const TernaryOverlap& o) { inner += prob[o.eta] * to_double(o.g); });
      acc += to_double(w) * inner;
    }
  }
  return acc / to_double(total);
}

inline bool is_binary(const Alphabet& alphabet) { return alphabet.symbols() == std::vector<int>{0, 1}; }
inline bool is_ternary(const Alphabet& alphabet) { return alphabet.symbols() == std::vector<int>{-1, 0, 1}; }

}  // namespace detail

/// Expected number of visited k-dimensional suffixes at fixed radius d2
/// for the binary alphabet.
inline double expected_nodes_binary(int m, int n, int k, int l, double sigma2, double d2) {
  return detail::expected_nodes_binary(m, n, k, l, l, sigma2, d2);
}

inline double expected_nodes_ternary(int m, int n, int k, int l, double sigma2, double d2) {
  return detail::expected_nodes_ternary(m, n, k, l, l, sigma2, d2);
}

/// Sparsity-unaware decoder on an l_true-sparse binary signal.
inline double expected_nodes_unaware(int m, int n, int k, int l_true, double sigma2, double d2) {
  return detail::expected_nodes_binary(m, n, k, l_true, m, sigma2, d2);
}

/// Per-level E[N_k], k = 1..m, for binary or ternary alphabets.
inline std::vector<double> expected_nodes_profile(int m, int n, int l, const Alphabet& alphabet, double sigma2,
                                                  double d2, bool sparsity_aware = true) {
  const int l_dec = sparsity_aware ? l : m;
  std::vector<double> out(m);
  for (int k = 1; k <= m; ++k) {
    if (detail::is_binary(alphabet)) {
      out[k - 1] = detail::expected_nodes_binary(m, n, k, l, l_dec, sigma2, d2);
    } else if (detail::is_ternary(alphabet)) {
      out[k - 1] = detail::expected_nodes_ternary(m, n, k, l, l_dec, sigma2, d2);
    } else {
      throw InvalidArgument("expected nodes: closed forms exist only for binary01 and ternary");
    }
  }
  return out;
}

/// |sparse suffixes of length k| reachable with budget l: sum_{j<=min(k,l)} C(k,j)(L-1)^j.
inline double infinite_radius_nodes(int k, int l, const Alphabet& alphabet) {
  return to_double(sparse_set_size(k, std::min(k, l), alphabet));
}

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

struct TotalCost {
  double cost = 0.0;
  double exponent = 0.0;  ///< log(cost) / log(m); -inf when cost is zero
};

inline TotalCost total_cost(const std::vector<double>& e_nk, const CostModel& f = {}) {
  TotalCost out;
  for (std::size_t k = 1; k <= e_nk.size(); ++k) out.cost += static_cast<double>(f(static_cast<int>(k))) * e_nk[k - 1];
  const double m = static_cast<double>(e_nk.size());
  if (out.cost <= 0.0) {
    out.exponent = -std::numeric_limits<double>::infinity();
  } else if (m <= 1.0) {
    out.exponent = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.exponent = std::log(out.cost) / std::log(m);
  }
  return out;
}

struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;  ///< jackknife
  double mean_cost = 0.0;
  double mean_cost_se = 0.0;
  std::optional<double> analytic_mean;
  std::uint64_t trials = 0;
};

struct ComplexityReport {
  std::vector<double> e_nk;
  double total_cost = 0.0;
  double exponent = 0.0;
  double d2 = 0.0;
  std::string alphabet;
  std::optional<VarianceEstimate> variance_mc;
};

inline ComplexityReport analyze(int m, int n, int l, const Alphabet& alphabet, double sigma2, double d2,
                                const CostModel& f = {}, bool sparsity_aware = true) {
  ComplexityReport rep;
  rep.e_nk = expected_nodes_profile(m, n, l, alphabet, sigma2, d2, sparsity_aware);
  const TotalCost tc = total_cost(rep.e_nk, f);
  rep.total_cost = tc.cost;
  rep.exponent = tc.exponent;
  rep.d2 = d2;
  rep.alphabet = alphabet.label();
  return rep;
}

// ---------------------------------------------------------------------------
// Pair counts for the second moment (binary alphabet)
// ---------------------------------------------------------------------------

/// Pairs (x_b, x_c) of difference vectors, x_b of length k and x_c of
/// length l, with ||x_b||^2 = beta, ||x_c||^2 = eta, ||x_c^k||^2 = gamma,
/// x_b . x_c^k = u + v, where a counts the +1 entries of x_c^k, u the
/// aligned (+1,+1) and v the aligned (-1,-1) positions. For k > l the
/// roles of the two vectors are exchanged.
inline Count pair_count(int k, int l, int l_prime, int beta, int eta, int gamma, int a, int u, int v) {
  if (k > l) std::swap(k, l);
  if (k < 0 || l_prime < 0) return 0;
  if (beta < 0 || beta > std::min(k, 2 * l_prime)) return 0;
  if (eta < 0 || eta > std::min(l, 2 * l_prime)) return 0;
  if (gamma < std::max(0, eta - (l - k)) || gamma > std::min(eta, k)) return 0;
  if (a < 0 || a > gamma) return 0;
  if (u < std::max(0, beta - (k - a)) || u > std::min(beta, a)) return 0;
  if (v < std::max(0, beta - (u + k - gamma)) || v > std::min(gamma - a, beta - u)) return 0;
  const int delta = u + v;
  Count g = checked_mul(binomial(l - k, eta - gamma), binomial(k, gamma));
  g = checked_mul(g, binomial(gamma, a));
  g = checked_mul(g, binomial(a, u));
  g = checked_mul(g, binomial(gamma - a, v));
  g = checked_mul(g, binomial(k - gamma, beta - delta));
  return checked_mul(g, pow2(eta - gamma + beta - delta));
}

struct PairTuple {
  int beta = 0, eta = 0, gamma = 0, a = 0, u = 0, v = 0;
  int delta() const { return u + v; }
};

/// Visits every admissible (beta, eta, gamma, a, u, v) with its count.
inline void for_each_pair_tuple(int k, int l, int l_prime, const std::function<void(const PairTuple&, Count)>& visit) {
  const int lo_dim = std::min(k, l);
  const int hi_dim = std::max(k, l);
  for (int beta = 0; beta <= std::min(lo_dim, 2 * l_prime); ++beta)
    for (int eta = 0; eta <= std::min(hi_dim, 2 * l_prime); ++eta)
      for (int gamma = std::max(0, eta - (hi_dim - lo_dim)); gamma <= std::min(eta, lo_dim); ++gamma)
        for (int a = 0; a <= gamma; ++a)
          for (int u = std::max(0, beta - (lo_dim - a)); u <= std::min(beta, a); ++u)
            for (int v = std::max(0, beta - (u + lo_dim - gamma)); v <= std::min(gamma - a, beta - u); ++v) {
              const Count g = pair_count(k, l, l_prime, beta, eta, gamma, a, u, v);
              if (g != 0) visit(PairTuple{beta, eta, gamma, a, u, v}, g);
            }
}

/// Joint in-sphere probability of a pair whose short difference equals the
/// tail of the long one.
inline double joint_prob_equal(double d2, double sigma2, double x_c_norm2, int l) {
  if (l < 1) throw InvalidArgument("joint_prob_equal: l must be >= 1");
  if (!(sigma2 >= 0.0) || !(x_c_norm2 >= 0.0)) throw InvalidArgument("joint_prob_equal: negative variance");
  if (!(d2 > 0.0)) return 0.0;
  const double scale = sigma2 + x_c_norm2;
  const double x = scale > 0.0 ? d2 / (2.0 * scale) : std::numeric_limits<double>::infinity();
  return regularized_gamma(0.5 * l, x);
}

// ---------------------------------------------------------------------------
// Monte Carlo variance
// ---------------------------------------------------------------------------

struct VarianceOptions {
  double one_minus_eps = 0.99;
  std::optional<double> d2;  ///< overrides the radius derived from one_minus_eps
  std::uint64_t first_trial = 0;
  CostModel cost{};
  unsigned workers = 0;
};

/// Sample variance of the cost sum_k f(k) N_k of decode_sparse_fp at fixed
/// radius over seeded trials mix_seed(spec.seed, first_trial + t), with a
/// leave-one-out jackknife standard error.
inline VarianceEstimate variance_mc(const GenSpec& spec, std::uint64_t trials, const VarianceOptions& opt = {}) {
  spec.validate();
  if (trials < 3) throw InvalidArgument("variance_mc: needs at least 3 trials");
  const double sigma2 = sigma2_from_snr(spec.snr_db, spec.m, spec.l, spec.alphabet);
  double d2 = 0.0;
  if (opt.d2) {
    d2 = *opt.d2;
  } else {
    if (!(sigma2 > 0.0)) throw InvalidArgument("variance_mc: radius from statistics needs sigma2 > 0");
    d2 = choose_radius(spec.n, sigma2, opt.one_minus_eps);
  }

  std::vector<double> cost(trials);
  parallel_for(trials, opt.workers, [&](std::size_t t) {
    GenSpec s = spec;
    s.seed = mix_seed(spec.seed, opt.first_trial + t);
    const GeneratedInstance gen = generate_instance(s);
    SearchOptions so;
    so.cost = opt.cost;
    const FixedRadiusOutcome out = search_fixed(gen.instance, d2, so);
    double c = 0.0;
    for (std::size_t k = 1; k <= out.stats.nodes_per_level.size(); ++k)
      c += static_cast<double>(opt.cost(static_cast<int>(k))) * static_cast<double>(out.stats.nodes_per_level[k - 1]);
    cost[t] = c;
  });

  const double T = static_cast<double>(trials);
  double mean = 0.0;
  for (double c : cost) mean += c;
  mean /= T;
  double ss = 0.0;
  for (double c : cost) ss += (c - mean) * (c - mean);

  VarianceEstimate out;
  out.trials = trials;
  out.mean_cost = mean;
  out.variance = ss / (T - 1.0);
  out.mean_cost_se = std::sqrt(out.variance / T);

  // Leave-one-out variances from centred sums: removing d_i shifts the
  // mean by -d_i/(T-1), so ss_(i) = ss - d_i^2 - d_i^2/(T-1).
  std::vector<double> loo(trials);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double d = cost[i] - mean;
    loo[i] = (ss - d * d - d * d / (T - 1.0)) / (T - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= T;
  double jack = 0.0;
  for (double v : loo) jack += (v - loo_mean) * (v - loo_mean);
  out.standard_error = std::sqrt((T - 1.0) / T * jack);

  if (detail::is_binary(spec.alphabet) || detail::is_ternary(spec.alphabet)) {
    const auto e_nk = expected_nodes_profile(spec.m, spec.n, spec.l, spec.alphabet, sigma2, d2);
    out.analytic_mean = total_cost(e_nk, opt.cost).cost;
  }
  return out;
}

}  // namespace ssd
