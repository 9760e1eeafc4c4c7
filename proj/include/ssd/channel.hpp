#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "ssd/bound.hpp"
#include "ssd/decoder.hpp"
#include "ssd/harness.hpp"
#include "ssd/model.hpp"
#include "ssd/parallel.hpp"

namespace ssd {

/// (M+L-1) x L convolution matrix: column j is u shifted down by j.
inline Matrix build_toeplitz(const Vector& u, int taps) {
  if (u.size() < 1) throw InvalidArgument("build_toeplitz: training sequence is empty");
  if (taps < 1) throw InvalidArgument("build_toeplitz: channel length must be >= 1");
  const Eigen::Index M = u.size();
  Matrix out = Matrix::Zero(M + taps - 1, taps);
  for (int j = 0; j < taps; ++j) out.col(j).segment(j, M) = u;
  return out;
}

/// Constant-modulus training: +1, -1, +1, ...
inline Vector alternating_training(int length) {
  if (length < 1) throw InvalidArgument("training length must be >= 1");
  Vector u(length);
  for (int i = 0; i < length; ++i) u[i] = (i % 2 == 0) ? 1.0 : -1.0;
  return u;
}

enum class TrainingKind { min_condition, alternating };

inline std::string to_string(TrainingKind k) { return k == TrainingKind::alternating ? "alternating" : "min_condition"; }

inline TrainingKind parse_training_kind(const std::string& label) {
  if (label == "min_condition") return TrainingKind::min_condition;
  if (label == "alternating") return TrainingKind::alternating;
  throw InvalidArgument("unknown training sequence '" + label + "' (min_condition|alternating)");
}

inline constexpr int kMaxSearchedTraining = 16;

/// The +-1 sequence (first sample +1) whose convolution matrix has the
/// smallest condition number; ties go to the earliest sign pattern, read as
/// binary with bit i-1 set when sample i is -1. Cached per (M, L).
inline Vector min_condition_training(int length, int taps) {
  if (length < 1 || taps < 1) throw InvalidArgument("training: lengths must be >= 1");
  if (length > kMaxSearchedTraining)
    throw InvalidArgument("training: min_condition search supports M <= 16; use the alternating sequence");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Vector> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find({length, taps}); it != cache.end()) return it->second;
  Vector best;
  double best_cond = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << (length - 1)); ++mask) {
    Vector u(length);
    u[0] = 1.0;
    for (int i = 1; i < length; ++i) u[i] = (mask >> (i - 1)) & 1U ? -1.0 : 1.0;
    const Eigen::JacobiSVD<Matrix> svd(build_toeplitz(u, taps));
    const auto& sv = svd.singularValues();
    const double cond = sv[0] / sv[sv.size() - 1];
    if (cond < best_cond * (1.0 - 1e-9)) {
      best_cond = cond;
      best = u;
    }
  }
  cache.emplace(std::make_pair(length, taps), best);
  return best;
}

inline Vector training_sequence(TrainingKind kind, int length, int taps) {
  return kind == TrainingKind::alternating ? alternating_training(length) : min_condition_training(length, taps);
}

struct ChannelInstance {
  Vector u_seq;
  Matrix u_mat;
  Vector h;
  IntVector b;
  Vector x_obs;
  double sigma2 = 0.0;
  int m_sharp = 0;  ///< number of nonzero taps

  int taps() const { return static_cast<int>(h.size()); }
};

struct ChannelSpec {
  int taps = 20;        ///< L
  int training = 6;     ///< M
  int m_sharp = 3;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  TrainingKind training_kind = TrainingKind::min_condition;

  void validate() const {
    if (training < 1 || taps < 1) throw InvalidArgument("channel: lengths must be >= 1");
    if (m_sharp < 0 || m_sharp > taps) throw InvalidArgument("channel: requires 0 <= m_sharp <= L");
    if (std::isnan(snr_db)) throw InvalidArgument("channel: snr_db is NaN");
  }
};

/// Per-sample SNR: E||U h||^2 / (M+L-1) over sigma2, with E||U h||^2 = m_sharp M.
inline double channel_sigma2(const ChannelSpec& spec) {
  if (std::isinf(spec.snr_db) && spec.snr_db > 0) return 0.0;
  const double signal = static_cast<double>(spec.m_sharp) * spec.training / (spec.training + spec.taps - 1);
  return signal / std::pow(10.0, spec.snr_db / 10.0);
}

/// Taps N(0,1) on a uniform size-m_sharp support. The taps and support
/// depend only on the seed; noise is drawn last and scaled by the SNR.
inline ChannelInstance generate_channel(const ChannelSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  ChannelInstance c;
  c.m_sharp = spec.m_sharp;
  c.u_seq = training_sequence(spec.training_kind, spec.training, spec.taps);
  c.u_mat = build_toeplitz(c.u_seq, spec.taps);
  c.b = IntVector::Zero(spec.taps);
  c.h = Vector::Zero(spec.taps);
  std::vector<int> positions(spec.taps);
  for (int i = 0; i < spec.taps; ++i) positions[i] = i;
  for (int j = 0; j < spec.m_sharp; ++j) {
    boost::random::uniform_int_distribution<int> pick(j, spec.taps - 1);
    std::swap(positions[j], positions[pick(rng)]);
    c.b[positions[j]] = 1;
  }
  for (int i = 0; i < spec.taps; ++i) {
    const double tap = normal(rng);
    if (c.b[i]) c.h[i] = tap;
  }
  c.sigma2 = channel_sigma2(spec);
  c.x_obs = c.u_mat * c.h;
  const double sigma = std::sqrt(c.sigma2);
  for (Eigen::Index i = 0; i < c.x_obs.size(); ++i) {
    const double e = normal(rng);
    c.x_obs[i] += sigma * e;
  }
  return c;
}

enum class ChannelMethod { sparse_sd, classical_sd, omp, oracle };

inline std::string to_string(ChannelMethod m) {
  switch (m) {
    case ChannelMethod::sparse_sd: return "sparse_sd";
    case ChannelMethod::classical_sd: return "classical_sd";
    case ChannelMethod::omp: return "omp";
    case ChannelMethod::oracle: return "oracle";
  }
  return "unknown";
}

inline ChannelMethod parse_channel_method(const std::string& label) {
  for (ChannelMethod m : {ChannelMethod::sparse_sd, ChannelMethod::classical_sd, ChannelMethod::omp, ChannelMethod::oracle})
    if (to_string(m) == label) return m;
  throw InvalidArgument("unknown channel method '" + label + "' (sparse_sd|classical_sd|omp|oracle)");
}

struct ChannelEstimate {
  Vector h_hat;
  IntVector b_hat;
  double mse = 0.0;  ///< ||h - h_hat||^2 / ||h||^2
  SearchStats stats;
};

/// Least squares of x on the columns of u listed in `support`; zero elsewhere.
inline Vector structured_ls(const Matrix& u, const Vector& x, const IntVector& support) {
  const int taps = static_cast<int>(u.cols());
  Vector out = Vector::Zero(taps);
  std::vector<int> idx;
  for (int j = 0; j < taps; ++j)
    if (support[j]) idx.push_back(j);
  if (idx.empty()) return out;
  Matrix sub(u.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = u.col(idx[j]);
  const QrFactors qr = qr_decompose(sub);
  const Vector coef = qr.r.triangularView<Eigen::Upper>().solve(qr.q1.transpose() * x);
  for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = coef[static_cast<Eigen::Index>(j)];
  return out;
}

struct ChannelOptions {
  double one_minus_eps = 0.99;
  /// Detection order; both variants shrink the radius at every leaf.
  Enumeration order = Enumeration::fincke_pohst;
  CostModel cost{};
};

/// LS estimate, zero-tap detection on U diag(h_ls), structured re-fit.
inline ChannelEstimate estimate_channel(const ChannelInstance& inst, ChannelMethod method, const ChannelOptions& opt = {}) {
  const int taps = inst.taps();
  ChannelEstimate out;
  out.stats.nodes_per_level.assign(taps, 0);

  switch (method) {
    case ChannelMethod::oracle:
      out.b_hat = inst.b;
      break;
    case ChannelMethod::omp: {
      const OmpResult omp = omp_solve(inst.u_mat, inst.x_obs, inst.m_sharp);
      out.b_hat = IntVector::Zero(taps);
      for (int j : omp.support) out.b_hat[j] = 1;
      out.stats.flops = omp.flops;
      break;
    }
    case ChannelMethod::sparse_sd:
    case ChannelMethod::classical_sd: {
      const Vector h_ls = structured_ls(inst.u_mat, inst.x_obs, IntVector::Ones(taps));
      // Taps estimated as exactly zero cannot be detected and stay off.
      const double floor = 1e-12 * std::max(h_ls.norm(), 1e-300);
      std::vector<int> active;
      for (int j = 0; j < taps; ++j)
        if (std::abs(h_ls[j]) > floor) active.push_back(j);
      out.b_hat = IntVector::Zero(taps);
      if (active.empty()) break;
      Matrix lattice(inst.u_mat.rows(), static_cast<Eigen::Index>(active.size()));
      for (std::size_t j = 0; j < active.size(); ++j)
        lattice.col(static_cast<Eigen::Index>(j)) = inst.u_mat.col(active[j]) * h_ls[active[j]];
      const int budget = std::min<int>(inst.m_sharp, static_cast<int>(active.size()));
      IlsInstance ils{lattice, inst.x_obs, Alphabet::binary01(), budget, inst.sigma2};
      const Triangularized tri = triangularize(ils);
      SearchOptions so;
      so.order = opt.order;
      so.radius_update = true;
      so.enforce_sparsity = method == ChannelMethod::sparse_sd;
      so.cost = opt.cost;
      const DecodeMode mode = method == ChannelMethod::classical_sd ? DecodeMode::classical
                              : opt.order == Enumeration::schnorr_euchner ? DecodeMode::se_radius_update
                                                                          : DecodeMode::fp_growing;
      const DecodeResult det = search_growing(ils, tri, opt.one_minus_eps, so, NoPruner{}, mode);
      for (std::size_t j = 0; j < active.size(); ++j) out.b_hat[active[j]] = det.x_hat[static_cast<Eigen::Index>(j)];
      out.stats.flops = det.stats.flops;
      out.stats.radius_restarts = det.stats.radius_restarts;
      out.stats.solutions_examined = det.stats.solutions_examined;
      for (std::size_t k = 0; k < det.stats.nodes_per_level.size(); ++k) out.stats.nodes_per_level[k] = det.stats.nodes_per_level[k];
      break;
    }
  }
  out.h_hat = structured_ls(inst.u_mat, inst.x_obs, out.b_hat);
  const double energy = inst.h.squaredNorm();
  out.mse = energy > 0.0 ? (inst.h - out.h_hat).squaredNorm() / energy : (inst.h - out.h_hat).squaredNorm();
  return out;
}

struct ChannelExperimentSpec {
  int taps = 20;
  int training = 6;
  int m_sharp = 3;
  std::vector<double> snr_grid{10.0, 15.0, 20.0, 25.0};
  std::vector<std::string> methods{"oracle", "sparse_sd", "classical_sd", "omp"};
  std::uint64_t trials = 500;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  TrainingKind training_kind = TrainingKind::min_condition;
  ChannelOptions options{};
};

struct ChannelRow {
  double snr_db = 0.0;
  std::string method;
  double mean_mse = 0.0;
  double stderr_ = 0.0;
  double mean_nodes = 0.0;
  double mean_flops = 0.0;
  double mean_flops_se = 0.0;
};

struct ChannelResult {
  std::vector<ChannelRow> rows;
  /// mse[snr][method][trial], kept for paired comparisons
  std::vector<std::vector<std::vector<double>>> mse;
};

/// Trial t uses seed mix_seed(seed, t) at every SNR, and all methods see
/// the same channel and noise realisation.
inline ChannelResult run_channel_experiment(const ChannelExperimentSpec& spec) {
  if (spec.trials < 1) throw InvalidArgument("channel: trials must be >= 1");
  if (spec.snr_grid.empty() || spec.methods.empty()) throw InvalidArgument("channel: grids must be non-empty");
  std::vector<ChannelMethod> methods;
  for (const auto& m : spec.methods) methods.push_back(parse_channel_method(m));

  ChannelResult res;
  for (double snr : spec.snr_grid) {
    const std::size_t nm = methods.size();
    std::vector<std::vector<double>> mse(nm, std::vector<double>(spec.trials));
    std::vector<std::vector<double>> nodes(nm, std::vector<double>(spec.trials));
    std::vector<std::vector<double>> flops(nm, std::vector<double>(spec.trials));
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
      ChannelSpec cs{spec.taps, spec.training, spec.m_sharp, snr, mix_seed(spec.seed, t), spec.training_kind};
      const ChannelInstance inst = generate_channel(cs);
      for (std::size_t m = 0; m < nm; ++m) {
        const ChannelEstimate est = estimate_channel(inst, methods[m], spec.options);
        mse[m][t] = est.mse;
        nodes[m][t] = static_cast<double>(est.stats.total_nodes());
        flops[m][t] = static_cast<double>(est.stats.flops);
      }
    });
    for (std::size_t m = 0; m < methods.size(); ++m) {
      ChannelRow row;
      row.snr_db = snr;
      row.method = spec.methods[m];
      const auto e = detail::mean_se(mse[m]);
      row.mean_mse = e.mean;
      row.stderr_ = e.se;
      row.mean_nodes = detail::mean_se(nodes[m]).mean;
      const auto f = detail::mean_se(flops[m]);
      row.mean_flops = f.mean;
      row.mean_flops_se = f.se;
      res.rows.push_back(row);
    }
    res.mse.push_back(std::move(mse));
  }
  return res;
}

inline std::string channel_csv(const ChannelResult& res) {
  std::string out = "snr_db,method,mean_mse,stderr,mean_nodes,mean_flops\n";
  for (const auto& r : res.rows)
    out += fmt::format("{},{},{},{},{},{}\n", fmt_double(r.snr_db), r.method, fmt_double(r.mean_mse),
                       fmt_double(r.stderr_), fmt_double(r.mean_nodes), fmt_double(r.mean_flops));
  return out;
}

}  // namespace ssd
