#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssd/model.hpp"
#include "ssd/numerics.hpp"

namespace ssd {

/// Operations charged per visited node of a k-dimensional suffix:
/// f(k) = per_level * k + constant.
struct CostModel {
  std::uint64_t per_level = 2;
  std::uint64_t constant = 11;

  std::uint64_t operator()(int k) const { return per_level * static_cast<std::uint64_t>(k) + constant; }
};

struct SearchStats {
  /// nodes_per_level[k-1] counts visited k-dimensional suffixes (N_k).
  std::vector<std::uint64_t> nodes_per_level;
  std::uint64_t flops = 0;
  int radius_restarts = 0;
  std::uint64_t solutions_examined = 0;
  std::uint64_t bound_evaluations = 0;
  std::uint64_t bound_prunes = 0;

  std::uint64_t total_nodes() const {
    std::uint64_t t = 0;
    for (auto v : nodes_per_level) t += v;
    return t;
  }

  void merge(const SearchStats& other) {
    if (nodes_per_level.size() < other.nodes_per_level.size()) nodes_per_level.resize(other.nodes_per_level.size(), 0);
    for (std::size_t k = 0; k < other.nodes_per_level.size(); ++k) nodes_per_level[k] += other.nodes_per_level[k];
    flops += other.flops;
    radius_restarts += other.radius_restarts;
    solutions_examined += other.solutions_examined;
    bound_evaluations += other.bound_evaluations;
    bound_prunes += other.bound_prunes;
  }
};

enum class DecodeMode { fp_fixed, fp_growing, se_radius_update, classical, brute_force, fp_lower_bound, omp_round };

inline std::string to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::fp_fixed: return "fp_fixed";
    case DecodeMode::fp_growing: return "fp_growing";
    case DecodeMode::se_radius_update: return "se_radius_update";
    case DecodeMode::classical: return "classical";
    case DecodeMode::brute_force: return "brute_force";
    case DecodeMode::fp_lower_bound: return "fp_lower_bound";
    case DecodeMode::omp_round: return "omp_round";
  }
  return "unknown";
}

struct DecodeResult {
  IntVector x_hat;
  double residual2 = 0.0;  ///< ||y - H x_hat||^2, recomputed from x_hat
  SearchStats stats;
  DecodeMode mode = DecodeMode::fp_growing;
};

/// Outcome of a single fixed-radius pass; `result` is empty when the
/// sphere holds no feasible point.
struct FixedRadiusOutcome {
  std::optional<DecodeResult> result;
  SearchStats stats;
};

enum class Enumeration { fincke_pohst, schnorr_euchner };

struct SearchOptions {
  Enumeration order = Enumeration::fincke_pohst;
  bool radius_update = false;
  bool enforce_sparsity = true;
  /// Stop scanning a level once a nonzero symbol breaks the sparsity budget.
  /// Only valid for nonnegative alphabets in ascending order; unset means
  /// "on for binary01".
  std::optional<bool> nonnegative_cut;
  CostModel cost{};
};

// ---------------------------------------------------------------------------
// Shared tie-break
// ---------------------------------------------------------------------------

inline constexpr double kTieTolerance = 1e-11;

/// True when (res_a, x_a) beats (res_b, x_b): smaller residual, or a
/// residual tie (relative kTieTolerance) broken by lexicographic order.
inline bool better_candidate(double res_a, const IntVector& x_a, double res_b, const IntVector& x_b) {
  const double slack = kTieTolerance * std::max(1.0, std::max(std::abs(res_a), std::abs(res_b)));
  if (res_a < res_b - slack) return true;
  if (res_a > res_b + slack) return false;
  return lex_less(x_a, x_b);
}

// ---------------------------------------------------------------------------
// Triangular system
// ---------------------------------------------------------------------------

/// z = Q1^T y, R, and ||Q2^T y||^2; the sphere constraint becomes
/// ||z - R x||^2 <= d^2 - tail2.
struct Triangularized {
  Matrix r;
  Vector z;
  double tail2 = 0.0;
};

inline Triangularized triangularize(const IlsInstance& inst) {
  QrFactors qr = qr_decompose(inst.h);
  Triangularized out;
  out.z = qr.q1.transpose() * inst.y;
  out.tail2 = qr.q2.cols() > 0 ? (qr.q2.transpose() * inst.y).squaredNorm() : 0.0;
  out.r = std::move(qr.r);
  return out;
}

/// Admits every node; the plain sphere + sparsity rules do all the pruning.
struct NoPruner {
  bool admit(int /*level*/, int /*symbol*/, int /*nonzeros*/, double /*partial*/, double /*radius2*/,
             const Vector& /*parent_residual*/, std::uint64_t /*visited*/, SearchStats& /*stats*/) {
    return true;
  }
};

/// Depth-first sphere search over coordinates m-1 .. 0 (tree root first).
///
/// A node for coordinate i is the (m-i)-dimensional suffix x_{i..m-1}. It
/// is visited when its partial residual sum_{j>=i} (c_j - R_jj x_j)^2 lies
/// inside the closed sphere and its nonzero count respects the sparsity
/// bound; the pruner may veto further nodes. With radius update the sphere
/// shrinks to every improving leaf.
template <class Pruner = NoPruner>
class TreeSearch {
 public:
  TreeSearch(const Triangularized& tri, const Alphabet& alphabet, int sparsity, const SearchOptions& options,
             Pruner pruner = Pruner{})
      : r_(tri.r),
        z_(tri.z),
        symbols_(alphabet.symbols()),
        m_(static_cast<int>(tri.r.cols())),
        sparsity_(options.enforce_sparsity ? sparsity : static_cast<int>(tri.r.cols())),
        options_(options),
        pruner_(std::move(pruner)) {
    nonnegative_cut_ = options.nonnegative_cut.value_or(alphabet.name() == "binary01") && alphabet.nonnegative() &&
                       options.order == Enumeration::fincke_pohst;
    residuals_.resize(m_ + 1);
    for (int i = 0; i < m_; ++i) residuals_[i] = Vector::Zero(std::max(i, 1));
    residuals_[m_] = z_;
    candidates_.resize(m_);
    x_ = IntVector::Zero(m_);
  }

  /// Runs one pass with tree radius (d^2 - tail2). Returns the best leaf.
  std::optional<IntVector> run(double tree_radius2) {
    stats_ = SearchStats{};
    stats_.nodes_per_level.assign(m_, 0);
    best_.reset();
    best_total_ = 0.0;
    visited_ = 0;
    radius2_ = tree_radius2;
    if (m_ == 0 || !(tree_radius2 >= 0.0)) return std::nullopt;
    visit(m_ - 1, 0.0, 0);
    return best_;
  }

  const SearchStats& stats() const { return stats_; }
  double best_total() const { return best_total_; }
  Pruner& pruner() { return pruner_; }

 private:
  void visit(int i, double partial, int nonzeros) {
    const Vector& parent = residuals_[i + 1];
    const double center = parent[i];
    const double rii = r_(i, i);
    auto& cands = candidates_[i];
    cands.clear();
    for (int s : symbols_) {
      const double e = center - rii * s;
      cands.emplace_back(e * e, s);
    }
    if (options_.order == Enumeration::schnorr_euchner) std::stable_sort(cands.begin(), cands.end());

    const int k = m_ - i;
    for (const auto& [term, s] : cands) {
      const double total = partial + term;
      if (total > radius2_) {
        if (options_.order == Enumeration::schnorr_euchner) break;
        continue;
      }
      const int nz = nonzeros + (s != 0);
      if (nz > sparsity_) {
        if (nonnegative_cut_) break;
        continue;
      }
      if (!pruner_.admit(i, s, nz, total, radius2_, parent, visited_, stats_)) continue;

      ++stats_.nodes_per_level[k - 1];
      ++visited_;
      stats_.flops += options_.cost(k);
      x_[i] = s;
      if (i == 0) {
        leaf(total);
      } else {
        residuals_[i].head(i) = parent.head(i) - static_cast<double>(s) * r_.col(i).head(i);
        visit(i - 1, total, nz);
      }
    }
    x_[i] = 0;
  }

  void leaf(double total) {
    ++stats_.solutions_examined;
    if (!best_ || better_candidate(total, x_, best_total_, *best_)) {
      best_ = x_;
      best_total_ = total;
      if (options_.radius_update) {
        // Keep exact ties inside so the lexicographic tie-break still sees them.
        const double slack = kTieTolerance * std::max(1.0, total);
        radius2_ = std::min(radius2_, total + slack);
      }
    }
  }

  const Matrix& r_;
  const Vector& z_;
  const std::vector<int>& symbols_;
  int m_;
  int sparsity_;
  SearchOptions options_;
  Pruner pruner_;
  bool nonnegative_cut_ = false;

  std::vector<Vector> residuals_;
  std::vector<std::vector<std::pair<double, int>>> candidates_;
  IntVector x_;
  std::optional<IntVector> best_;
  double best_total_ = 0.0;
  double radius2_ = 0.0;
  std::uint64_t visited_ = 0;
  SearchStats stats_;
};

// ---------------------------------------------------------------------------
// Radius schedule
// ---------------------------------------------------------------------------

/// Initial radius from the noise statistics, then 1 - eps shrinks tenfold
/// per restart. Once the schedule saturates the radius grows geometrically
/// and is finally clamped to ||y||^2, which always contains x = 0.
class RadiusSchedule {
 public:
  RadiusSchedule(const IlsInstance& inst, double one_minus_eps)
      : n_(inst.n()), sigma2_(inst.sigma2), prob_(one_minus_eps), y_energy_(inst.y.squaredNorm()) {
    if (!(one_minus_eps > 0.0 && one_minus_eps < 1.0))
      throw InvalidArgument("radius schedule: probability must lie in (0,1)");
    if (sigma2_ > 0.0) {
      d2_ = choose_radius(n_, sigma2_, prob_);
    } else {
      d2_ = 1e-12 * (1.0 + y_energy_);
    }
    clamp();
  }

  double d2() const { return d2_; }
  bool saturated() const { return final_; }

  void advance() {
    const double eps = 1.0 - prob_;
    if (sigma2_ > 0.0 && eps / 10.0 >= 1e-15) {
      prob_ = 1.0 - eps / 10.0;
      d2_ = std::max(d2_, choose_radius(n_, sigma2_, prob_));
    } else {
      d2_ *= 4.0;
    }
    clamp();
  }

 private:
  void clamp() {
    const double cap = y_energy_ * (1.0 + 1e-9) + 1e-300;
    if (d2_ >= cap) {
      d2_ = cap;
      final_ = true;
    }
  }

  int n_;
  double sigma2_;
  double prob_;
  double y_energy_;
  double d2_ = 0.0;
  bool final_ = false;
};

// ---------------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------------

inline DecodeResult make_result(const IlsInstance& inst, IntVector x, SearchStats stats, DecodeMode mode) {
  DecodeResult out;
  out.residual2 = squared_residual(inst.h, inst.y, x);
  out.x_hat = std::move(x);
  out.stats = std::move(stats);
  out.mode = mode;
  return out;
}

/// One pass at squared radius d2 with the given pruner.
template <class Pruner>
FixedRadiusOutcome search_fixed(const IlsInstance& inst, const Triangularized& tri, double d2,
                                const SearchOptions& options, Pruner pruner, DecodeMode mode) {
  TreeSearch<Pruner> search(tri, inst.alphabet, inst.l, options, std::move(pruner));
  auto best = search.run(d2 - tri.tail2);
  FixedRadiusOutcome out;
  out.stats = search.stats();
  if (best) out.result = make_result(inst, std::move(*best), search.stats(), mode);
  return out;
}

inline FixedRadiusOutcome search_fixed(const IlsInstance& inst, double d2, const SearchOptions& options,
                                       DecodeMode mode = DecodeMode::fp_fixed) {
  inst.validate();
  if (!(d2 > 0.0)) throw InvalidArgument("search radius must be positive");
  return search_fixed(inst, triangularize(inst), d2, options, NoPruner{}, mode);
}

/// Repeats fixed-radius passes along the RadiusSchedule until a feasible
/// point is found. Stats accumulate over all passes.
template <class Pruner>
DecodeResult search_growing(const IlsInstance& inst, const Triangularized& tri, double one_minus_eps,
                            const SearchOptions& options, Pruner pruner, DecodeMode mode) {
  RadiusSchedule schedule(inst, one_minus_eps);
  TreeSearch<Pruner> search(tri, inst.alphabet, inst.l, options, std::move(pruner));
  SearchStats total;
  total.nodes_per_level.assign(inst.m(), 0);
  for (;;) {
    auto best = search.run(schedule.d2() - tri.tail2);
    total.merge(search.stats());
    if (best) return make_result(inst, std::move(*best), std::move(total), mode);
    if (schedule.saturated()) throw Error("sphere search found no point at the terminal radius");
    schedule.advance();
    ++total.radius_restarts;
  }
}

/// Sparsity-aware Fincke-Pohst search at a fixed squared radius d2.
inline FixedRadiusOutcome decode_sparse_fp(const IlsInstance& inst, double d2) {
  return search_fixed(inst, d2, SearchOptions{}, DecodeMode::fp_fixed);
}

/// Sparsity-aware Fincke-Pohst search with radius growth on empty spheres.
inline DecodeResult decode_sparse(const IlsInstance& inst, double one_minus_eps = 0.99) {
  inst.validate();
  return search_growing(inst, triangularize(inst), one_minus_eps, SearchOptions{}, NoPruner{},
                        DecodeMode::fp_growing);
}

inline SearchOptions schnorr_euchner_options(bool enforce_sparsity = true) {
  SearchOptions opt;
  opt.order = Enumeration::schnorr_euchner;
  opt.radius_update = true;
  opt.enforce_sparsity = enforce_sparsity;
  return opt;
}

/// Zig-zag enumeration from the nearest symbol, shrinking the radius to
/// every improving leaf.
inline DecodeResult decode_sparse_se(const IlsInstance& inst, double one_minus_eps = 0.99) {
  inst.validate();
  return search_growing(inst, triangularize(inst), one_minus_eps, schnorr_euchner_options(), NoPruner{},
                        DecodeMode::se_radius_update);
}

/// Sparsity-unaware baseline: same machinery, no l0 constraint.
inline DecodeResult decode_classical(const IlsInstance& inst, double one_minus_eps = 0.99) {
  inst.validate();
  SearchOptions opt;
  opt.enforce_sparsity = false;
  return search_growing(inst, triangularize(inst), one_minus_eps, opt, NoPruner{}, DecodeMode::classical);
}

/// Classical search with Schnorr-Euchner order and radius update.
inline DecodeResult decode_classical_se(const IlsInstance& inst, double one_minus_eps = 0.99) {
  inst.validate();
  return search_growing(inst, triangularize(inst), one_minus_eps, schnorr_euchner_options(false), NoPruner{},
                        DecodeMode::classical);
}

/// Exhaustive argmin over the l-sparse set, same tie-break as the tree
/// searches. Throws TooLarge past the enumeration cap.
inline DecodeResult brute_force(const IlsInstance& inst, std::uint64_t cap = kDefaultEnumerationCap) {
  inst.validate();
  const int m = inst.m();
  if (sparse_set_size(m, inst.l, inst.alphabet) > cap) throw TooLarge("brute_force: feasible set exceeds cap");

  const auto& symbols = inst.alphabet.symbols();
  std::vector<Vector> residual(m + 1);
  residual[0] = inst.y;
  IntVector x = IntVector::Zero(m);
  std::optional<IntVector> best;
  double best_res = 0.0;
  SearchStats stats;
  stats.nodes_per_level.assign(m, 0);

  auto rec = [&](auto&& self, int pos, int used) -> void {
    if (pos == m) {
      const double res = residual[m].squaredNorm();
      ++stats.solutions_examined;
      if (!best || better_candidate(res, x, best_res, *best)) {
        best = x;
        best_res = res;
      }
      return;
    }
    for (int s : symbols) {
      if (s != 0 && used == inst.l) continue;
      x[pos] = s;
      residual[pos + 1] = residual[pos] - static_cast<double>(s) * inst.h.col(pos);
      self(self, pos + 1, used + (s != 0));
    }
    x[pos] = 0;
  };
  rec(rec, 0, 0);
  return make_result(inst, std::move(*best), std::move(stats), DecodeMode::brute_force);
}

}  // namespace ssd
