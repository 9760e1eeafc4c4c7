#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ssd/bound.hpp"
#include "ssd/complexity.hpp"
#include "ssd/decoder.hpp"
#include "ssd/model.hpp"
#include "ssd/parallel.hpp"

namespace ssd {

// ---------------------------------------------------------------------------
// Decoder selection
// ---------------------------------------------------------------------------

enum class DecoderKind { sparse, sparse_se, sparse_lb, classical, brute_force, omp };

inline std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::sparse: return "sparse";
    case DecoderKind::sparse_se: return "sparse_se";
    case DecoderKind::sparse_lb: return "sparse_lb";
    case DecoderKind::classical: return "classical";
    case DecoderKind::brute_force: return "brute_force";
    case DecoderKind::omp: return "omp";
  }
  return "unknown";
}

inline DecoderKind parse_decoder(const std::string& label) {
  for (DecoderKind k : {DecoderKind::sparse, DecoderKind::sparse_se, DecoderKind::sparse_lb, DecoderKind::classical,
                        DecoderKind::brute_force, DecoderKind::omp})
    if (to_string(k) == label) return k;
  throw InvalidArgument("unknown decoder '" + label + "' (sparse|sparse_se|sparse_lb|classical|brute_force|omp)");
}

struct DecoderOptions {
  double one_minus_eps = 0.99;
  bool safe_mode = false;
  std::uint64_t bound_threshold = 64;
  CostModel cost{};
};

/// Runs a decoder with radius growth (tree searches) or directly (brute
/// force, OMP).
inline DecodeResult run_decoder(DecoderKind kind, const IlsInstance& inst, const DecoderOptions& opt = {}) {
  inst.validate();
  switch (kind) {
    case DecoderKind::brute_force: return brute_force(inst);
    case DecoderKind::omp: return decode_omp_round(inst);
    default: break;
  }
  const Triangularized tri = triangularize(inst);
  SearchOptions so;
  so.cost = opt.cost;
  switch (kind) {
    case DecoderKind::sparse:
      return search_growing(inst, tri, opt.one_minus_eps, so, NoPruner{}, DecodeMode::fp_growing);
    case DecoderKind::sparse_se: {
      SearchOptions se = schnorr_euchner_options();
      se.cost = opt.cost;
      return search_growing(inst, tri, opt.one_minus_eps, se, NoPruner{}, DecodeMode::se_radius_update);
    }
    case DecoderKind::sparse_lb: {
      if (opt.safe_mode) return search_growing(inst, tri, opt.one_minus_eps, so, NoPruner{}, DecodeMode::fp_growing);
      LowerBoundOptions lbo;
      lbo.threshold = opt.bound_threshold;
      return search_growing(inst, tri, opt.one_minus_eps, so, LowerBoundPruner(tri.r, inst.alphabet, inst.l, lbo),
                            DecodeMode::fp_lower_bound);
    }
    case DecoderKind::classical:
      so.enforce_sparsity = false;
      return search_growing(inst, tri, opt.one_minus_eps, so, NoPruner{}, DecodeMode::classical);
    default: break;
  }
  throw InvalidArgument("run_decoder: unsupported decoder");
}

/// Single pass at squared radius d2. Brute force and OMP ignore the radius.
inline FixedRadiusOutcome run_decoder_fixed(DecoderKind kind, const IlsInstance& inst, double d2,
                                            const DecoderOptions& opt = {}) {
  inst.validate();
  if (kind == DecoderKind::brute_force || kind == DecoderKind::omp) {
    FixedRadiusOutcome out;
    out.result = run_decoder(kind, inst, opt);
    out.stats = out.result->stats;
    return out;
  }
  if (!(d2 > 0.0)) throw InvalidArgument("search radius must be positive");
  const Triangularized tri = triangularize(inst);
  SearchOptions so;
  so.cost = opt.cost;
  switch (kind) {
    case DecoderKind::sparse: return search_fixed(inst, tri, d2, so, NoPruner{}, DecodeMode::fp_fixed);
    case DecoderKind::sparse_se: {
      SearchOptions se = schnorr_euchner_options();
      se.cost = opt.cost;
      return search_fixed(inst, tri, d2, se, NoPruner{}, DecodeMode::se_radius_update);
    }
    case DecoderKind::sparse_lb: {
      if (opt.safe_mode) return search_fixed(inst, tri, d2, so, NoPruner{}, DecodeMode::fp_fixed);
      LowerBoundOptions lbo;
      lbo.threshold = opt.bound_threshold;
      return search_fixed(inst, tri, d2, so, LowerBoundPruner(tri.r, inst.alphabet, inst.l, lbo),
                          DecodeMode::fp_lower_bound);
    }
    case DecoderKind::classical:
      so.enforce_sparsity = false;
      return search_fixed(inst, tri, d2, so, NoPruner{}, DecodeMode::classical);
    default: break;
  }
  throw InvalidArgument("run_decoder_fixed: unsupported decoder");
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::vector<int> m_grid{10};
  std::vector<int> n_grid;  ///< empty: n = m
  std::vector<int> l_grid{3};
  std::vector<double> snr_grid{10.0};
  Alphabet alphabet = Alphabet::binary01();
  std::vector<std::string> decoders{"sparse"};
  std::uint64_t trials = 100;
  bool fixed_radius = false;
  double one_minus_eps = 0.99;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  bool safe_mode = false;
  std::uint64_t bound_threshold = 64;
  CostModel cost{};

  void validate() const {
    if (trials < 1) throw InvalidArgument("experiment: trials must be >= 1");
    if (m_grid.empty() || l_grid.empty() || snr_grid.empty() || decoders.empty())
      throw InvalidArgument("experiment: grids must be non-empty");
    if (!(one_minus_eps > 0.0 && one_minus_eps < 1.0)) throw InvalidArgument("experiment: one_minus_eps must lie in (0,1)");
    for (const auto& d : decoders) parse_decoder(d);
  }
};

struct GridPoint {
  int m = 0, n = 0, l = 0;
  double snr_db = 0.0;
  double sigma2 = 0.0;
  double d2 = 0.0;  ///< fixed-radius mode only
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::string decoder;
  int error_count = 0;
  std::vector<std::uint64_t> nodes_per_level;
  std::uint64_t flops = 0;
  double residual2 = 0.0;
  double wall_time = 0.0;  ///< seconds; never written to CSV
  bool empty = false;      ///< fixed radius: no point inside the sphere
  std::optional<std::string> failure;
};

struct DecoderSummary {
  GridPoint point;
  std::string alphabet;
  std::string decoder;
  std::uint64_t trials = 0;
  std::uint64_t empty_trials = 0;
  std::uint64_t failed_trials = 0;
  double error_rate = 0.0;
  double error_rate_se = 0.0;        ///< binomial, components treated as independent
  double error_rate_trial_se = 0.0;  ///< from per-trial error fractions
  double mean_nodes = 0.0, mean_nodes_se = 0.0;
  double mean_flops = 0.0, mean_flops_se = 0.0;
  double e_c = 0.0;
  std::vector<double> mean_nk, mean_nk_se;
};

struct ExperimentResult {
  std::vector<GridPoint> points;
  std::vector<DecoderSummary> rows;
  /// records[point][decoder][trial]
  std::vector<std::vector<std::vector<TrialRecord>>> records;
};

namespace detail {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

inline std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridPoint> out;
  for (int m : spec.m_grid) {
    const std::vector<int> ns = spec.n_grid.empty() ? std::vector<int>{m} : spec.n_grid;
    for (int n : ns) {
      if (n < m) continue;
      for (int l : spec.l_grid) {
        if (l < 0 || l > m) continue;
        for (double snr : spec.snr_grid) {
          GridPoint p{m, n, l, snr, sigma2_from_snr(snr, m, l, spec.alphabet), 0.0};
          if (spec.fixed_radius) {
            if (!(p.sigma2 > 0.0)) throw InvalidArgument("fixed-radius mode needs a finite SNR");
            p.d2 = choose_radius(n, p.sigma2, spec.one_minus_eps);
          }
          out.push_back(p);
        }
      }
    }
  }
  if (out.empty()) throw InvalidArgument("experiment: grid has no admissible (m, n, l) point");
  return out;
}

inline DecoderSummary summarize(const GridPoint& p, const std::string& alphabet, const std::string& decoder,
                                const std::vector<TrialRecord>& recs) {
  DecoderSummary s;
  s.point = p;
  s.alphabet = alphabet;
  s.decoder = decoder;
  s.trials = recs.size();
  std::vector<double> nodes, flops, err_frac;
  std::vector<std::vector<double>> nk(p.m);
  std::uint64_t errors = 0, scored = 0;
  for (const auto& r : recs) {
    if (r.failure) {
      ++s.failed_trials;
      continue;
    }
    if (r.empty) ++s.empty_trials;
    std::uint64_t total = 0;
    for (int k = 0; k < p.m; ++k) {
      const std::uint64_t v = k < static_cast<int>(r.nodes_per_level.size()) ? r.nodes_per_level[k] : 0;
      nk[k].push_back(static_cast<double>(v));
      total += v;
    }
    nodes.push_back(static_cast<double>(total));
    flops.push_back(static_cast<double>(r.flops));
    if (!r.empty) {
      errors += static_cast<std::uint64_t>(r.error_count);
      ++scored;
      err_frac.push_back(static_cast<double>(r.error_count) / p.m);
    }
  }
  if (scored > 0) {
    const double comps = static_cast<double>(scored) * p.m;
    s.error_rate = static_cast<double>(errors) / comps;
    s.error_rate_se = std::sqrt(s.error_rate * (1.0 - s.error_rate) / comps);
    s.error_rate_trial_se = mean_se(err_frac).se;
  }
  const MeanSe mn = mean_se(nodes), mf = mean_se(flops);
  s.mean_nodes = mn.mean;
  s.mean_nodes_se = mn.se;
  s.mean_flops = mf.mean;
  s.mean_flops_se = mf.se;
  s.e_c = (s.mean_flops > 0.0 && p.m > 1) ? std::log(s.mean_flops) / std::log(static_cast<double>(p.m))
                                           : -std::numeric_limits<double>::infinity();
  for (int k = 0; k < p.m; ++k) {
    const MeanSe e = mean_se(nk[k]);
    s.mean_nk.push_back(e.mean);
    s.mean_nk_se.push_back(e.se);
  }
  return s;
}

}  // namespace detail

/// Trial t at every grid point uses seed mix_seed(spec.seed, t), and all
/// decoders see the same instance, so comparisons are paired. Decoder
/// failures are recorded per trial rather than aborting the run.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult res;
  res.points = detail::expand_grid(spec);
  std::vector<DecoderKind> kinds;
  for (const auto& d : spec.decoders) kinds.push_back(parse_decoder(d));

  DecoderOptions dopt;
  dopt.one_minus_eps = spec.one_minus_eps;
  dopt.safe_mode = spec.safe_mode;
  dopt.bound_threshold = spec.bound_threshold;
  dopt.cost = spec.cost;

  for (const GridPoint& p : res.points) {
    std::vector<std::vector<TrialRecord>> recs(kinds.size(), std::vector<TrialRecord>(spec.trials));
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
      GenSpec g{p.m, p.n, spec.alphabet, p.l, p.snr_db, mix_seed(spec.seed, t)};
      const GeneratedInstance gen = generate_instance(g);
      for (std::size_t d = 0; d < kinds.size(); ++d) {
        TrialRecord& r = recs[d][t];
        r.seed = g.seed;
        r.decoder = spec.decoders[d];
        const auto start = std::chrono::steady_clock::now();
        try {
          std::optional<DecodeResult> out;
          SearchStats stats;
          if (spec.fixed_radius) {
            FixedRadiusOutcome fo = run_decoder_fixed(kinds[d], gen.instance, p.d2, dopt);
            out = std::move(fo.result);
            stats = std::move(fo.stats);
          } else {
            out = run_decoder(kinds[d], gen.instance, dopt);
            stats = out->stats;
          }
          r.nodes_per_level = stats.nodes_per_level;
          r.flops = stats.flops;
          if (out) {
            r.error_count = static_cast<int>((out->x_hat.array() != gen.x_true.array()).count());
            r.residual2 = out->residual2;
          } else {
            r.empty = true;
          }
        } catch (const std::exception& e) {
          r.failure = e.what();
        }
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    });
    for (std::size_t d = 0; d < kinds.size(); ++d)
      res.rows.push_back(detail::summarize(p, spec.alphabet.label(), spec.decoders[d], recs[d]));
    res.records.push_back(std::move(recs));
  }
  return res;
}

/// Relax to reals, OMP with budget l, round to the alphabet.
inline ExperimentResult run_omp_baseline(ExperimentSpec spec) {
  spec.decoders = {"omp"};
  return run_experiment(spec);
}

struct TheoryRow {
  GridPoint point;
  std::string alphabet;
  int k = 0;
  double analytic = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
  bool pass = false;
};

inline constexpr double kTheoryZLimit = 4.0;

/// Per-level analytic E[N_k] against the fixed-radius Fincke-Pohst mean.
inline std::vector<TheoryRow> compare_theory(const ExperimentResult& res, const ExperimentSpec& spec) {
  if (!spec.fixed_radius) throw InvalidArgument("compare_theory requires fixed-radius mode");
  std::vector<TheoryRow> out;
  for (const auto& row : res.rows) {
    if (row.decoder != "sparse") continue;
    const GridPoint& p = row.point;
    const auto e_nk = expected_nodes_profile(p.m, p.n, p.l, spec.alphabet, p.sigma2, p.d2);
    for (int k = 1; k <= p.m; ++k) {
      TheoryRow t;
      t.point = p;
      t.alphabet = row.alphabet;
      t.k = k;
      t.analytic = e_nk[k - 1];
      t.empirical = row.mean_nk[k - 1];
      // Node counts are integers, so the empirical mean moves in steps of
      // 1/T; a level where every trial agreed still carries that resolution.
      const double used = static_cast<double>(row.trials - row.failed_trials);
      t.stderr_ = std::max(row.mean_nk_se[k - 1], used > 0.0 ? 1.0 / used : 0.0);
      const double diff = t.empirical - t.analytic;
      if (t.stderr_ > 0.0) {
        t.z = diff / t.stderr_;
      } else {
        t.z = std::abs(diff) <= 1e-9 * std::max(1.0, std::abs(t.analytic)) ? 0.0 : std::copysign(INFINITY, diff);
      }
      t.pass = std::abs(t.z) <= kTheoryZLimit;
      out.push_back(t);
    }
  }
  return out;
}

inline std::vector<TheoryRow> compare_theory(ExperimentSpec spec) {
  spec.fixed_radius = true;
  spec.decoders = {"sparse"};
  return compare_theory(run_experiment(spec), spec);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Round-trip formatting for every floating-point field.
inline std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

inline std::string summary_csv(const ExperimentResult& res) {
  std::string out =
      "m,n,l,alphabet,snr_db,decoder,trials,empty_trials,failed_trials,error_rate,error_rate_se,mean_nodes,"
      "mean_nodes_se,mean_flops,mean_flops_se,e_c\n";
  for (const auto& r : res.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.point.m, r.point.n, r.point.l, r.alphabet,
                       fmt_double(r.point.snr_db), r.decoder, r.trials, r.empty_trials, r.failed_trials,
                       fmt_double(r.error_rate), fmt_double(r.error_rate_se), fmt_double(r.mean_nodes),
                       fmt_double(r.mean_nodes_se), fmt_double(r.mean_flops), fmt_double(r.mean_flops_se),
                       fmt_double(r.e_c));
  }
  return out;
}

inline std::string levels_csv(const ExperimentResult& res) {
  std::string out = "m,n,l,alphabet,snr_db,decoder,k,mean_nk,mean_nk_se\n";
  for (const auto& r : res.rows)
    for (std::size_t k = 0; k < r.mean_nk.size(); ++k)
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.point.m, r.point.n, r.point.l, r.alphabet,
                         fmt_double(r.point.snr_db), r.decoder, k + 1, fmt_double(r.mean_nk[k]),
                         fmt_double(r.mean_nk_se[k]));
  return out;
}

inline std::string theory_csv(const std::vector<TheoryRow>& rows) {
  std::string out = "m,n,l,alphabet,snr_db,d2,k,analytic,empirical,stderr,z,pass\n";
  for (const auto& t : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", t.point.m, t.point.n, t.point.l, t.alphabet,
                       fmt_double(t.point.snr_db), fmt_double(t.point.d2), t.k, fmt_double(t.analytic),
                       fmt_double(t.empirical), fmt_double(t.stderr_), fmt_double(t.z), t.pass ? 1 : 0);
  return out;
}

}  // namespace ssd
