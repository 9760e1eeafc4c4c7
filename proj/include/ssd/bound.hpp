#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ssd/decoder.hpp"

namespace ssd {

struct OmpResult {
  std::vector<int> support;  ///< selection order
  Vector coeffs;             ///< least-squares coefficients, aligned with support
  double residual2 = 0.0;
  std::uint64_t flops = 0;
};

/// Orthogonal matching pursuit on the leading `cols` columns of `a`.
/// Columns are scored by |a_j^T r| / ||a_j||; ties go to the smaller index
/// and zero columns are never picked. Stops at `budget` atoms or once the
/// residual drop falls below 1e-12. `norms` may carry precomputed column
/// norms (at least `cols` entries).
inline OmpResult omp_solve(const Matrix& a, const Vector& w, int budget, Eigen::Index cols = -1,
                           const Vector* norms = nullptr) {
  if (cols < 0) cols = a.cols();
  const Eigen::Index p = a.rows();
  if (w.size() != p) throw InvalidArgument("omp_solve: dimension mismatch");
  if (budget < 0) throw InvalidArgument("omp_solve: budget must be nonnegative");
  budget = static_cast<int>(std::min<Eigen::Index>(budget, cols));

  OmpResult out;
  Vector r = w;
  out.residual2 = r.squaredNorm();
  if (budget == 0 || p == 0) {
    out.coeffs.resize(0);
    return out;
  }

  Vector local_norms;
  if (norms == nullptr) {
    local_norms = a.leftCols(cols).colwise().norm().transpose();
    norms = &local_norms;
    out.flops += static_cast<std::uint64_t>(2 * p * cols);
  }

  Matrix q(p, budget);       // orthonormal basis of the selected columns
  Matrix t = Matrix::Zero(budget, budget);  // a_S = q * t
  Vector proj(budget);       // q^T w
  std::vector<char> used(static_cast<std::size_t>(cols), 0);

  for (int it = 0; it < budget; ++it) {
    const Vector corr = a.leftCols(cols).transpose() * r;
    out.flops += static_cast<std::uint64_t>(2 * p * cols);
    Eigen::Index pick = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double nj = (*norms)[j];
      if (used[j] || !(nj > 0.0)) continue;
      const double score = std::abs(corr[j]) / nj;
      if (score > best) {
        best = score;
        pick = j;
      }
    }
    if (pick < 0) break;

    Vector v = a.col(pick).head(p);
    for (int s = 0; s < it; ++s) {
      t(s, it) = q.col(s).dot(v);
      v -= t(s, it) * q.col(s);
    }
    out.flops += static_cast<std::uint64_t>(4 * p * it);
    const double vn = v.norm();
    if (!(vn > 1e-12 * (*norms)[pick])) break;  // numerically dependent atom
    t(it, it) = vn;
    q.col(it) = v / vn;
    const double c = q.col(it).dot(r);
    const double drop = c * c;
    if (drop < 1e-12) break;
    proj[it] = c;
    r -= c * q.col(it);
    out.flops += static_cast<std::uint64_t>(5 * p);
    used[pick] = 1;
    out.support.push_back(static_cast<int>(pick));
    out.residual2 = r.squaredNorm();
  }

  const int s = static_cast<int>(out.support.size());
  out.coeffs = t.topLeftCorner(s, s).triangularView<Eigen::Upper>().solve(proj.head(s));
  out.flops += static_cast<std::uint64_t>(s * s);
  return out;
}

struct LowerBoundValue {
  double unrounded = 0.0;  ///< relaxed OMP residual, used for pruning
  double rounded = 0.0;    ///< residual after rounding OMP coefficients onto the alphabet
  std::uint64_t flops = 0;
};

/// Relaxed bound on ||w - R_lead x||^2 over l_tilde-sparse x, where R_lead
/// is the leading `dim` x `dim` block of r.
inline LowerBoundValue lower_bound_block(const Matrix& r, const Vector& w, int dim, int l_tilde,
                                         const Alphabet& alphabet, const Vector* norms = nullptr,
                                         bool want_rounded = true) {
  LowerBoundValue out;
  if (dim <= 0) return out;
  if (l_tilde < 0) l_tilde = 0;
  if (l_tilde >= dim) {
    // Triangular block with positive diagonal: an exact real fit exists.
    if (want_rounded) {
      Vector xr = r.topLeftCorner(dim, dim).triangularView<Eigen::Upper>().solve(w.head(dim));
      IntVector xi(dim);
      for (int j = 0; j < dim; ++j) xi[j] = alphabet.nearest(xr[j]);
      out.rounded = (w.head(dim) - r.topLeftCorner(dim, dim) * xi.cast<double>()).squaredNorm();
    }
    return out;
  }
  if (l_tilde == 0) {
    out.unrounded = out.rounded = w.head(dim).squaredNorm();
    out.flops = static_cast<std::uint64_t>(2 * dim);
    return out;
  }
  const Matrix lead = r.topLeftCorner(dim, dim);
  OmpResult omp = omp_solve(lead, w.head(dim), l_tilde, dim, norms);
  out.unrounded = omp.residual2;
  out.flops = omp.flops;
  if (want_rounded) {
    Vector xr = Vector::Zero(dim);
    for (std::size_t j = 0; j < omp.support.size(); ++j)
      xr[omp.support[j]] = static_cast<double>(alphabet.nearest(omp.coeffs[static_cast<Eigen::Index>(j)]));
    out.rounded = (w.head(dim) - lead * xr).squaredNorm();
  }
  return out;
}

/// Bound for the subproblem below a fixed suffix. `x_suffix` holds the
/// symbols at coordinates m-|x_suffix| .. m-1; l_tilde is the remaining
/// sparsity budget. Returns the unrounded relaxed residual (never negative).
inline double lower_bound(const Vector& z, const Matrix& r, const IntVector& x_suffix, int l_tilde,
                          const Alphabet& alphabet) {
  const auto m = r.cols();
  const auto fixed = x_suffix.size();
  if (z.size() != m || r.rows() != m || fixed > m) throw InvalidArgument("lower_bound: dimension mismatch");
  const auto dim = m - fixed;
  if (dim == 0) return 0.0;
  const Vector w = z.head(dim) - r.block(0, dim, dim, fixed) * x_suffix.cast<double>();
  return lower_bound_block(r, w, static_cast<int>(dim), l_tilde, alphabet, nullptr, false).unrounded;
}

struct BoundAuditEntry {
  int level = 0;  ///< k, dimension of the suffix being tested
  double unrounded = 0.0;
  double rounded = 0.0;
  bool pruned = false;
};

struct LowerBoundOptions {
  bool safe_mode = false;
  /// The bound engages only after this many nodes were visited in the
  /// current pass; small searches finish faster without it.
  std::uint64_t threshold = 64;
  std::vector<BoundAuditEntry>* audit = nullptr;
};

/// Pruning policy: admits a node only if partial + bound of the remaining
/// subproblem stays inside the sphere.
class LowerBoundPruner {
 public:
  LowerBoundPruner(const Matrix& r, const Alphabet& alphabet, int sparsity, const LowerBoundOptions& options)
      : r_(r), alphabet_(alphabet), sparsity_(sparsity), options_(options) {
    const auto m = r.cols();
    // Column norms of each leading block, indexed by block size.
    norms_.resize(m + 1);
    for (Eigen::Index d = 1; d <= m; ++d) norms_[d] = r.topLeftCorner(d, d).colwise().norm().transpose();
  }

  bool admit(int level, int symbol, int nonzeros, double partial, double radius2, const Vector& parent,
             std::uint64_t visited, SearchStats& stats) {
    if (level == 0 || visited < options_.threshold) return true;
    w_ = parent.head(level) - static_cast<double>(symbol) * r_.col(level).head(level);
    const int l_tilde = std::max(0, sparsity_ - nonzeros);
    const bool want_rounded = options_.audit != nullptr;
    const LowerBoundValue lb = lower_bound_block(r_, w_, level, l_tilde, alphabet_, &norms_[level], want_rounded);
    ++stats.bound_evaluations;
    stats.flops += lb.flops;
    const bool keep = partial + lb.unrounded <= radius2;
    if (!keep) ++stats.bound_prunes;
    if (options_.audit) options_.audit->push_back({static_cast<int>(r_.cols()) - level, lb.unrounded, lb.rounded, !keep});
    return keep;
  }

 private:
  const Matrix& r_;
  const Alphabet& alphabet_;
  int sparsity_;
  LowerBoundOptions options_;
  std::vector<Vector> norms_;
  Vector w_;
};

/// Sparsity-aware Fincke-Pohst search that additionally prunes with the
/// relaxed OMP bound. The bound is heuristic; safe_mode disables it and
/// the call reduces to decode_sparse.
inline DecodeResult decode_sparse_lb(const IlsInstance& inst, double one_minus_eps = 0.99,
                                     const LowerBoundOptions& options = {}) {
  if (options.safe_mode) return decode_sparse(inst, one_minus_eps);
  inst.validate();
  const Triangularized tri = triangularize(inst);
  LowerBoundPruner pruner(tri.r, inst.alphabet, inst.l, options);
  return search_growing(inst, tri, one_minus_eps, SearchOptions{}, std::move(pruner), DecodeMode::fp_lower_bound);
}

/// Fixed-radius variant for paired comparisons against decode_sparse_fp.
inline FixedRadiusOutcome decode_sparse_lb_fp(const IlsInstance& inst, double d2, const LowerBoundOptions& options = {}) {
  inst.validate();
  if (!(d2 > 0.0)) throw InvalidArgument("search radius must be positive");
  const Triangularized tri = triangularize(inst);
  if (options.safe_mode) return search_fixed(inst, tri, d2, SearchOptions{}, NoPruner{}, DecodeMode::fp_fixed);
  LowerBoundPruner pruner(tri.r, inst.alphabet, inst.l, options);
  return search_fixed(inst, tri, d2, SearchOptions{}, std::move(pruner), DecodeMode::fp_lower_bound);
}

/// Relax to reals, run OMP with budget l, round onto the alphabet.
inline DecodeResult decode_omp_round(const IlsInstance& inst) {
  inst.validate();
  const OmpResult omp = omp_solve(inst.h, inst.y, inst.l);
  IntVector x = IntVector::Zero(inst.m());
  for (std::size_t j = 0; j < omp.support.size(); ++j)
    x[omp.support[j]] = inst.alphabet.nearest(omp.coeffs[static_cast<Eigen::Index>(j)]);
  SearchStats stats;
  stats.nodes_per_level.assign(inst.m(), 0);
  stats.flops = omp.flops;
  return make_result(inst, std::move(x), std::move(stats), DecodeMode::omp_round);
}

}  // namespace ssd
