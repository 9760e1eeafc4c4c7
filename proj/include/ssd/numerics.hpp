#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "ssd/error.hpp"

namespace ssd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// ---------------------------------------------------------------------------
// Exact counting
// ---------------------------------------------------------------------------

/// Exact unsigned count; every closed-form enumeration in the library is
/// carried in this type and converted to floating point only at the end.
using Count = unsigned __int128;

inline Count checked_mul(Count a, Count b) {
  Count out{};
  if (__builtin_mul_overflow(a, b, &out)) throw Overflow("exact count exceeds 128-bit range");
  return out;
}

inline Count checked_add(Count a, Count b) {
  Count out{};
  if (__builtin_add_overflow(a, b, &out)) throw Overflow("exact count exceeds 128-bit range");
  return out;
}

inline Count pow2(long long e) {
  if (e < 0) return 0;
  if (e >= 128) throw Overflow("2^e exceeds 128-bit range");
  return Count{1} << e;
}

inline Count ipow(Count base, long long e) {
  Count out = 1;
  for (long long i = 0; i < e; ++i) out = checked_mul(out, base);
  return out;
}

inline double to_double(Count c) { return static_cast<double>(c); }

inline std::string to_string(Count c) {
  if (c == 0) return "0";
  std::string s;
  while (c > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(c % 10)));
    c /= 10;
  }
  return s;
}

inline Count gcd(Count a, Count b) {
  while (b != 0) {
    const Count t = a % b;
    a = b;
    b = t;
  }
  return a;
}

/// C(n, k), zero when k < 0, k > n or n < 0 so that guard terms in the
/// counting formulas vanish on their own.
inline Count binomial(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  Count result = 1;
  for (long long i = 0; i < k; ++i) {
    // result * (n - i) is divisible by (i + 1); cancel the common factor
    // first so the product never exceeds the next binomial.
    Count den = static_cast<Count>(i + 1);
    const Count g = gcd(result, den);
    result /= g;
    den /= g;
    result = checked_mul(result, static_cast<Count>(n - i) / den);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Regularized lower incomplete gamma P(shape, x).
inline double regularized_gamma(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw InvalidArgument("regularized_gamma: shape must be positive");
  if (!(x >= 0.0)) throw InvalidArgument("regularized_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x);
}

/// Squared search radius d^2 = alpha * n * sigma2 such that a chi-square
/// variable with n degrees of freedom (scaled by sigma2) falls inside the
/// sphere with probability one_minus_eps.
inline double choose_radius(int n, double sigma2, double one_minus_eps) {
  if (n < 1) throw InvalidArgument("choose_radius: n must be >= 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("choose_radius: sigma2 must be positive");
  if (!(one_minus_eps > 0.0 && one_minus_eps < 1.0))
    throw InvalidArgument("choose_radius: probability must lie in (0,1)");

  const double half_n = 0.5 * n;
  auto excess = [&](double alpha) { return regularized_gamma(half_n, alpha * half_n) - one_minus_eps; };

  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 1100) throw NoConvergence("choose_radius: cannot bracket alpha");
  }
  constexpr int kMaxSteps = 200;
  int steps = 0;
  while (hi - lo > 1e-10 * hi) {
    if (++steps > kMaxSteps) throw NoConvergence("choose_radius: bisection did not converge");
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double alpha = 0.5 * (lo + hi);
  return alpha * n * sigma2;
}

// ---------------------------------------------------------------------------
// QR
// ---------------------------------------------------------------------------

struct QrFactors {
  Matrix q1;  ///< n x m, orthonormal columns
  Matrix q2;  ///< n x (n - m), orthonormal complement
  Matrix r;   ///< m x m upper triangular, positive diagonal
};

/// Householder QR with the sign of each reflection folded into Q so that
/// diag(R) > 0. Throws RankDeficient when a diagonal entry falls below
/// 1e-10 * ||h||_F.
inline QrFactors qr_decompose(const Matrix& h) {
  const auto n = h.rows();
  const auto m = h.cols();
  if (n < m) throw InvalidArgument("qr_decompose: requires n >= m");
  if (!h.allFinite()) throw InvalidArgument("qr_decompose: non-finite entries");

  Eigen::HouseholderQR<Matrix> qr(h);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();

  const double tol = 1e-10 * h.norm();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (std::abs(r(k, k)) < tol || r(k, k) == 0.0)
      throw RankDeficient("qr_decompose: matrix is rank deficient at column " + std::to_string(k));
    if (r(k, k) < 0.0) {
      r.row(k) *= -1.0;
      q.col(k) *= -1.0;
    }
  }
  return QrFactors{q.leftCols(m), q.rightCols(n - m), std::move(r)};
}

}  // namespace ssd
