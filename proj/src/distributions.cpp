#include "combresp/distributions.hpp"

#include <cmath>
#include <limits>

#include "combresp/errors.hpp"

namespace combresp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream_id * kGolden + 0xD1B54A32D192ED03ull;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + kGolden + (a << 6) + (a >> 2));
}

}  // namespace

SeededStream::SeededStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix_key(seed, stream_id)) {}

SeededStream SeededStream::child(std::uint64_t k) const {
  return SeededStream(mix_key(seed_, stream_id_), k);
}

std::uint64_t SeededStream::next_u64() { return engine_(); }

double SeededStream::uniform() {
  // 53 random bits centered in (0,1); endpoints are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) *
         (1.0 / 9007199254740992.0);
}

double SeededStream::normal() { return std_normal_quantile(uniform()); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

// Acklam's rational approximation for the normal quantile.
double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidInterval("std_normal_quantile: p must lie in (0,1)");
  }
  double x = acklam_quantile(p);
  // One Halley refinement against the erfc-based CDF.
  const double e = std_normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

namespace {

// Standard normal conditioned on X > a; strictly greater on return.
double std_normal_above(double a, SeededStream& rng) {
  if (a <= 4.0) {
    // X = -Phi^{-1}(U * Phi(-a)) keeps full precision in the mapped tail.
    const double tail = std_normal_cdf(-a);
    double x = -std_normal_quantile(rng.uniform() * tail);
    if (!(x > a)) x = std::nextafter(a, std::numeric_limits<double>::infinity());
    return x;
  }
  // Exponential-proposal rejection (Robert) for the far tail.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double t = a - std::log(rng.uniform()) / lambda;
    const double dev = t - lambda;
    if (rng.uniform() <= std::exp(-0.5 * dev * dev)) return t;
  }
}

}  // namespace

double sample_truncated_normal(double mean, Tail side, double cut,
                               SeededStream& rng) {
  if (side == Tail::Above) return mean + std_normal_above(cut - mean, rng);
  return mean - std_normal_above(mean - cut, rng);
}

double sample_truncated_exponential(double rate, double a, double b,
                                    SeededStream& rng) {
  if (!(rate > 0.0)) {
    throw InvalidInterval("sample_truncated_exponential: rate must be > 0");
  }
  if (!(a < b)) {
    throw InvalidInterval("sample_truncated_exponential: need a < b");
  }
  const double u = rng.uniform();
  double t;
  if (std::isinf(b)) {
    t = a - std::log1p(-u) / rate;
  } else {
    const double q = -std::expm1(-rate * (b - a));
    t = a - std::log1p(-u * q) / rate;
  }
  // Guard against rounding onto the endpoints.
  if (!(t > a)) t = std::nextafter(a, b);
  if (!(t < b)) t = std::nextafter(b, a);
  return t;
}

Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                     const Eigen::MatrixXd& row_cov,
                                     const Eigen::MatrixXd& col_cov,
                                     SeededStream& rng) {
  const Eigen::Index q = mean.rows();
  const Eigen::Index r = mean.cols();
  if (row_cov.rows() != q || row_cov.cols() != q || col_cov.rows() != r ||
      col_cov.cols() != r) {
    throw DimensionMismatch("sample_matrix_normal: covariance shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> lrow(row_cov);
  if (lrow.info() != Eigen::Success) {
    throw NotPositiveDefinite("sample_matrix_normal: row covariance not SPD");
  }
  Eigen::LLT<Eigen::MatrixXd> lcol(col_cov);
  if (lcol.info() != Eigen::Success) {
    throw NotPositiveDefinite("sample_matrix_normal: column covariance not SPD");
  }
  Eigen::MatrixXd z(q, r);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < r; ++j) z(i, j) = rng.normal();
  return mean + lrow.matrixL() * z * lcol.matrixL().transpose();
}

}  // namespace combresp
