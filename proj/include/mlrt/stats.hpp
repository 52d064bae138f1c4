#pragma once

#include "mlrt/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace mlrt {

/// Seeded random stream. Two instances with the same (seed, stream_id) emit
/// identical sequences; the engine is std::mt19937_64 seeded through
/// std::seed_seq, whose algorithm is fixed by the standard.
///
/// Variate consumption:
///  - uniform(): one 64-bit output, mapped to (0, 1) as ((x >> 11) + 0.5) / 2^53
///  - normal(): two uniforms u1, u2, returns sqrt(-2 ln u1) cos(2 pi u2)
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Mixes two integers into a well-spread 64-bit value (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Lower Cholesky factor. On failure adds 1e-8 x mean(diag) to the diagonal and
/// retries once; a second failure throws NumericalError.
Matrix cholesky_lower(const MatrixRef& a);

/// Inverse of an SPD matrix via its Cholesky factor; the result is symmetrized.
Matrix spd_inverse(const MatrixRef& a);

/// True when `a` is square, symmetric to 1e-12 relative tolerance and
/// Cholesky-factorizable without jitter.
bool is_spd(const MatrixRef& a);

/// mean + L z, with z drawn as mean.size() standard normals in index order.
Vector mvn_sample(const VectorRef& mean, const MatrixRef& cov, Rng& rng);

/// Draw from N(precision^-1 b, precision^-1) using the Cholesky factor of the
/// precision. Consumes b.size() normals in index order.
Vector mvn_sample_precision(const VectorRef& b, const MatrixRef& precision, Rng& rng);

struct ConditionalNormal {
  Vector mean;
  Matrix cov;
};

/// Conditional distribution of the free block of N(mean, cov) given the
/// coordinates in `fixed` take the values `fixed_vals`.
///
/// The regression coefficients and the Schur complement depend only on the
/// covariance, so they are computed once and reused for any number of fixed
/// values.
class GaussianConditioner {
 public:
  GaussianConditioner(const MatrixRef& cov, std::vector<int> fixed);

  /// Conditional mean given the full mean vector and the fixed-block values.
  Vector conditional_mean(const VectorRef& mean, const VectorRef& fixed_vals) const;
  /// Same, for a zero full mean.
  Vector conditional_mean(const VectorRef& fixed_vals) const;

  const Matrix& conditional_cov() const { return cond_cov_; }
  const Matrix& conditional_precision() const { return cond_precision_; }
  const Matrix& gain() const { return gain_; }
  const std::vector<int>& free_indices() const { return free_; }
  const std::vector<int>& fixed_indices() const { return fixed_; }

 private:
  std::vector<int> fixed_;
  std::vector<int> free_;
  Matrix gain_;
  Matrix cond_cov_;
  Matrix cond_precision_;
};

ConditionalNormal mvn_condition(const VectorRef& mean, const MatrixRef& cov,
                                const std::vector<int>& fixed_idx,
                                const VectorRef& fixed_vals);

/// Gamma variate with the given shape and rate (mean shape / rate).
/// Marsaglia-Tsang for shape >= 1: per attempt one normal then one uniform.
/// For shape < 1 a shape + 1 draw is followed by one extra uniform u and
/// scaled by u^(1/shape). The rate divides the unit-rate draw.
double gamma_sample(double shape, double rate, Rng& rng);

double chi_square_sample(double df, Rng& rng);

/// Assembles L A A' L' from the Cholesky factor of the scale, the diagonal of
/// the Bartlett factor A, and its strictly lower entries listed row by row.
Matrix wishart_from_bartlett(const MatrixRef& scale_chol, const VectorRef& bartlett_diag,
                             const std::vector<double>& bartlett_lower);

/// Bartlett draw. Row i of A (0-based) consumes sqrt(chi2(df - i)) for the
/// diagonal followed by i normals for columns 0..i-1.
Matrix wishart_sample(const MatrixRef& scale, double df, Rng& rng);

/// Inverse of wishart_sample(scale^-1, df): mean scale / (df - p - 1).
Matrix invwishart_sample(const MatrixRef& scale, double df, Rng& rng);

/// Unit-diagonal correlation matrix.
Matrix cov_to_corr(const MatrixRef& cov);

}  // namespace mlrt
