#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace combresp {

/// Deterministic variate stream keyed by (seed, stream_id).
///
/// All variates are produced from raw engine bits through explicit
/// constructions (no std::*_distribution), so a given (seed, stream_id,
/// call sequence) yields the same values on every platform. Distinct
/// stream ids give statistically independent streams; samplers that run
/// per-observation use stream_id = observation index.
class SeededStream {
 public:
  SeededStream() : SeededStream(0, 0) {}
  SeededStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derived stream for sub-tasks (per chain sample, per observation, ...).
  /// Folds this stream's identity into the seed so children of different
  /// parents do not collide.
  SeededStream child(std::uint64_t k) const;

  std::uint64_t next_u64();

  /// Uniform draw on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  /// Standard normal draw via the inverse CDF.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Standard normal CDF, absolute error below 1e-15 (erfc based).
double std_normal_cdf(double x);

/// Standard normal quantile; rational approximation refined by one Halley
/// step, accurate to ~1e-15 over the full open unit interval.
double std_normal_quantile(double p);

enum class Tail {
  Above,  // condition X > cut
  Below,  // condition X < cut
};

/// Draw from N(mean, 1) restricted to one side of `cut`. Inverse CDF in the
/// central regime, exponential-proposal rejection in the far tail. The draw
/// is strictly beyond the cut.
double sample_truncated_normal(double mean, Tail side, double cut,
                               SeededStream& rng);

/// Inverse-CDF draw from the density proportional to exp(-rate*t) on (a, b).
/// `a` may be negative (shifted support); `b` may be +infinity.
double sample_truncated_exponential(double rate, double a, double b,
                                    SeededStream& rng);

/// Draw from the matrix normal MN(mean, row_cov, col_cov); equivalently
/// vec(X) ~ N(vec(mean), col_cov (x) row_cov). Covariances must be SPD.
Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                     const Eigen::MatrixXd& row_cov,
                                     const Eigen::MatrixXd& col_cov,
                                     SeededStream& rng);

}  // namespace combresp
