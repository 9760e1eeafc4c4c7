#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "ssd/numerics.hpp"

namespace ssd {

// ---------------------------------------------------------------------------
// Alphabet
// ---------------------------------------------------------------------------

/// Finite integer symbol set. Always sorted, distinct and containing 0.
class Alphabet {
 public:
  static Alphabet binary01() { return Alphabet({0, 1}, "binary01"); }
  static Alphabet ternary() { return Alphabet({-1, 0, 1}, "ternary"); }
  static Alphabet custom(std::vector<int> symbols) { return Alphabet(std::move(symbols), "custom"); }

  /// Parses "binary01", "ternary" or "custom:s1,s2,...".
  static Alphabet parse(const std::string& label) {
    if (label == "binary01") return binary01();
    if (label == "ternary") return ternary();
    const std::string prefix = "custom:";
    if (label.rfind(prefix, 0) == 0) {
      std::vector<int> symbols;
      std::string rest = label.substr(prefix.size());
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
          std::size_t used = 0;
          symbols.push_back(std::stoi(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ParseError("alphabet: bad symbol '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return custom(std::move(symbols));
    }
    throw ParseError("alphabet: unknown label '" + label + "'");
  }

  const std::vector<int>& symbols() const { return symbols_; }
  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(symbols_.size()); }
  bool nonnegative() const { return symbols_.front() >= 0; }

  /// Label that round-trips through parse().
  std::string label() const {
    if (name_ != "custom") return name_;
    std::string out = "custom:";
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(symbols_[i]);
    }
    return out;
  }

  /// Alphabet symbol closest to v; ties go to the smaller symbol.
  int nearest(double v) const {
    int best = symbols_.front();
    double best_dist = std::abs(v - best);
    for (int s : symbols_) {
      const double dist = std::abs(v - s);
      if (dist < best_dist) {
        best = s;
        best_dist = dist;
      }
    }
    return best;
  }

  /// Sum of squares of the nonzero symbols.
  double nonzero_energy() const {
    double e = 0.0;
    for (int s : symbols_) e += static_cast<double>(s) * s;
    return e;
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

 private:
  Alphabet(std::vector<int> symbols, std::string name) : symbols_(std::move(symbols)), name_(std::move(name)) {
    std::sort(symbols_.begin(), symbols_.end());
    if (std::adjacent_find(symbols_.begin(), symbols_.end()) != symbols_.end())
      throw InvalidArgument("alphabet: symbols must be distinct");
    if (!std::binary_search(symbols_.begin(), symbols_.end(), 0))
      throw InvalidArgument("alphabet: must contain 0");
    if (symbols_.size() < 2) throw InvalidArgument("alphabet: needs at least one nonzero symbol");
  }

  std::vector<int> symbols_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Problem instance
// ---------------------------------------------------------------------------

/// min ||y - H x||^2 over x in alphabet^m with ||x||_0 <= l.
struct IlsInstance {
  Matrix h;
  Vector y;
  Alphabet alphabet = Alphabet::binary01();
  int l = 0;
  double sigma2 = 0.0;

  int m() const { return static_cast<int>(h.cols()); }
  int n() const { return static_cast<int>(h.rows()); }

  void validate() const {
    if (h.rows() < h.cols()) throw InvalidArgument("instance: requires n >= m");
    if (y.size() != h.rows()) throw InvalidArgument("instance: y length must equal n");
    if (l < 0 || l > m()) throw InvalidArgument("instance: sparsity bound must lie in [0, m]");
    if (!(sigma2 >= 0.0)) throw InvalidArgument("instance: sigma2 must be nonnegative");
    if (!h.allFinite() || !y.allFinite()) throw InvalidArgument("instance: non-finite data");
  }
};

inline double squared_residual(const Matrix& h, const Vector& y, const IntVector& x) {
  return (y - h * x.cast<double>()).squaredNorm();
}

inline int l0_norm(const IntVector& x) { return static_cast<int>((x.array() != 0).count()); }

/// Lexicographic order on symbol vectors, index 0 most significant.
inline bool lex_less(const IntVector& a, const IntVector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// ---------------------------------------------------------------------------
// Sparse symbol sets
// ---------------------------------------------------------------------------

/// |{x in alphabet^k : ||x||_0 <= l}| = sum_j C(k,j) (L-1)^j.
inline Count sparse_set_size(int k, int l, const Alphabet& alphabet) {
  Count total = 0;
  const Count nonzero = static_cast<Count>(alphabet.size() - 1);
  for (int j = 0; j <= std::min(k, l); ++j)
    total = checked_add(total, checked_mul(binomial(k, j), ipow(nonzero, j)));
  return total;
}

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 26;

/// Visits every x in alphabet^k with ||x||_0 <= l exactly once, in
/// lexicographic order. Throws TooLarge when the set exceeds `cap`.
inline void for_each_sparse(int k, int l, const Alphabet& alphabet, const std::function<void(const IntVector&)>& visit,
                            std::uint64_t cap = kDefaultEnumerationCap) {
  if (k < 0 || l < 0 || l > k) throw InvalidArgument("enumerate_sparse: requires 0 <= l <= k");
  if (sparse_set_size(k, l, alphabet) > cap) throw TooLarge("enumerate_sparse: set exceeds enumeration cap");
  IntVector x = IntVector::Zero(k);
  const auto& symbols = alphabet.symbols();
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == k) {
      visit(x);
      return;
    }
    for (int s : symbols) {
      if (s != 0 && used == l) continue;
      x[pos] = s;
      rec(pos + 1, used + (s != 0));
    }
    x[pos] = 0;
  };
  rec(0, 0);
}

inline std::vector<IntVector> enumerate_sparse(int k, int l, const Alphabet& alphabet,
                                               std::uint64_t cap = kDefaultEnumerationCap) {
  std::vector<IntVector> out;
  for_each_sparse(k, l, alphabet, [&](const IntVector& x) { out.push_back(x); }, cap);
  return out;
}

/// Number of l-sparse binary x_t of length m with ||x_t||_0 = k3 whose last
/// k entries carry k1 ones.
inline Count prefix_prior_binary(int m, int k, int k1, int k3) {
  if (k < 0 || k > m) return 0;
  return checked_mul(binomial(k, k1), binomial(m - k, k3 - k1));
}

/// Ternary analogue: the last k entries carry k1 nonzeros of which a are +1.
inline Count prefix_prior_ternary(int m, int k, int k1, int k3, int a) {
  if (k < 0 || k > m || a < 0 || a > k1) return 0;
  Count c = checked_mul(binomial(k, a), binomial(k - a, k1 - a));
  c = checked_mul(c, binomial(m - k, k3 - k1));
  return checked_mul(c, pow2(k3 - k1));
}

/// E||x||^2 for x uniform over the l-sparse set of length m.
inline double sparse_prior_energy(int m, int l, const Alphabet& alphabet) {
  const double nz = alphabet.size() - 1;
  const double per_symbol = alphabet.nonzero_energy() / nz;
  double weighted = 0.0;
  double total = 0.0;
  for (int j = 0; j <= l; ++j) {
    const double c = to_double(binomial(m, j)) * std::pow(nz, j);
    total += c;
    weighted += c * j * per_symbol;
  }
  return weighted / total;
}

/// snr_db = 10 log10(E||x||^2 / sigma2); +inf maps to sigma2 = 0. With
/// l = 0 the prior carries no energy, so the reference becomes a single
/// active symbol; otherwise every finite SNR would be noiseless.
inline double sigma2_from_snr(double snr_db, int m, int l, const Alphabet& alphabet) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  double energy = sparse_prior_energy(m, l, alphabet);
  if (!(energy > 0.0)) energy = alphabet.nonzero_energy() / (alphabet.size() - 1);
  return energy / std::pow(10.0, snr_db / 10.0);
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; maps (base, index) to well-separated seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct GenSpec {
  int m = 4;
  int n = 4;
  Alphabet alphabet = Alphabet::binary01();
  int l = 2;
  double snr_db = 10.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (m < 1 || n < m) throw InvalidArgument("GenSpec: requires 1 <= m <= n");
    if (l < 0 || l > m) throw InvalidArgument("GenSpec: requires 0 <= l <= m");
    if (std::isnan(snr_db)) throw InvalidArgument("GenSpec: snr_db is NaN");
  }
};

/// Uniform draw from the l-sparse set over the alphabet.
inline IntVector draw_sparse(int m, int l, const Alphabet& alphabet, Rng& rng) {
  const double nz = alphabet.size() - 1;
  std::vector<double> weights;
  for (int j = 0; j <= l; ++j) weights.push_back(to_double(binomial(m, j)) * std::pow(nz, j));
  boost::random::discrete_distribution<int, double> weight_dist(weights.begin(), weights.end());
  const int weight = weight_dist(rng);

  std::vector<int> positions(m);
  for (int i = 0; i < m; ++i) positions[i] = i;
  std::vector<int> nonzero;
  for (int s : alphabet.symbols())
    if (s != 0) nonzero.push_back(s);

  IntVector x = IntVector::Zero(m);
  boost::random::uniform_int_distribution<int> pick_symbol(0, static_cast<int>(nonzero.size()) - 1);
  for (int j = 0; j < weight; ++j) {
    boost::random::uniform_int_distribution<int> pick(j, m - 1);
    std::swap(positions[j], positions[pick(rng)]);
    x[positions[j]] = nonzero[pick_symbol(rng)];
  }
  return x;
}

struct GeneratedInstance {
  IlsInstance instance;
  IntVector x_true;
};

/// H ~ N(0,1) i.i.d., x_true uniform over the sparse set, y = H x_true + noise.
inline GeneratedInstance generate_instance(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Matrix h(spec.n, spec.m);
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, j) = normal(rng);

  IntVector x = draw_sparse(spec.m, spec.l, spec.alphabet, rng);
  const double sigma2 = sigma2_from_snr(spec.snr_db, spec.m, spec.l, spec.alphabet);
  Vector y = h * x.cast<double>();
  if (sigma2 > 0.0) {
    const double sigma = std::sqrt(sigma2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * normal(rng);
  }
  return {IlsInstance{std::move(h), std::move(y), spec.alphabet, spec.l, sigma2}, std::move(x)};
}

}  // namespace ssd
