#include "mlrt/stats.hpp"

#include <algorithm>
#include <numbers>

namespace mlrt {

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_() {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix cholesky_lower(const MatrixRef& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("Cholesky of a non-square matrix");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::Index p = a.rows();
  const double jitter = p > 0 ? 1e-8 * a.diagonal().mean() : 0.0;
  Matrix jittered = a;
  jittered.diagonal().array() += jitter;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization failed after diagonal jitter");
  }
  return llt.matrixL();
}

Matrix spd_inverse(const MatrixRef& a) {
  const Matrix l = cholesky_lower(a);
  const Matrix l_inv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(a.rows(), a.cols()));
  Matrix inv = l_inv.transpose() * l_inv;
  return 0.5 * (inv + inv.transpose());
}

bool is_spd(const MatrixRef& a) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  if (!a.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

Vector mvn_sample(const VectorRef& mean, const MatrixRef& cov, Rng& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("mvn_sample: covariance does not match mean");
  }
  const Matrix l = cholesky_lower(cov);
  Vector z(mean.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
  return mean + l.triangularView<Eigen::Lower>() * z;
}

Vector mvn_sample_precision(const VectorRef& b, const MatrixRef& precision, Rng& rng) {
  const Matrix l = cholesky_lower(precision);
  // mean = P^-1 b = L^-T L^-1 b; noise = L^-T z has covariance P^-1.
  Vector rhs = l.triangularView<Eigen::Lower>().solve(b);
  for (Eigen::Index j = 0; j < rhs.size(); ++j) rhs(j) += rng.normal();
  return l.transpose().triangularView<Eigen::Upper>().solve(rhs);
}

GaussianConditioner::GaussianConditioner(const MatrixRef& cov, std::vector<int> fixed)
    : fixed_(std::move(fixed)) {
  const int p = static_cast<int>(cov.rows());
  if (cov.cols() != p) throw std::invalid_argument("conditioning on a non-square covariance");
  std::vector<bool> is_fixed(p, false);
  for (int j : fixed_) {
    if (j < 0 || j >= p || is_fixed[j]) throw std::invalid_argument("invalid fixed index set");
    is_fixed[j] = true;
  }
  for (int j = 0; j < p; ++j) {
    if (!is_fixed[j]) free_.push_back(j);
  }
  if (fixed_.empty() || free_.empty()) {
    throw std::invalid_argument("fixed index set must be a nonempty proper subset");
  }
  const int nf = static_cast<int>(free_.size());
  const int nx = static_cast<int>(fixed_.size());
  Matrix s_ff(nf, nf), s_fx(nf, nx), s_xx(nx, nx);
  for (int a = 0; a < nf; ++a) {
    for (int b = 0; b < nf; ++b) s_ff(a, b) = cov(free_[a], free_[b]);
    for (int b = 0; b < nx; ++b) s_fx(a, b) = cov(free_[a], fixed_[b]);
  }
  for (int a = 0; a < nx; ++a) {
    for (int b = 0; b < nx; ++b) s_xx(a, b) = cov(fixed_[a], fixed_[b]);
  }
  Eigen::LLT<Matrix> llt(s_xx);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("singular covariance of the conditioning block");
  }
  gain_ = llt.solve(s_fx.transpose()).transpose();
  cond_cov_ = s_ff - gain_ * s_fx.transpose();
  cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());
  cond_precision_ = spd_inverse(cond_cov_);
}

Vector GaussianConditioner::conditional_mean(const VectorRef& mean,
                                             const VectorRef& fixed_vals) const {
  if (fixed_vals.size() != static_cast<Eigen::Index>(fixed_.size())) {
    throw std::invalid_argument("fixed values do not match the fixed index set");
  }
  Vector resid(fixed_.size());
  for (std::size_t b = 0; b < fixed_.size(); ++b) resid(b) = fixed_vals(b) - mean(fixed_[b]);
  Vector out = gain_ * resid;
  for (std::size_t a = 0; a < free_.size(); ++a) out(a) += mean(free_[a]);
  return out;
}

Vector GaussianConditioner::conditional_mean(const VectorRef& fixed_vals) const {
  if (fixed_vals.size() != static_cast<Eigen::Index>(fixed_.size())) {
    throw std::invalid_argument("fixed values do not match the fixed index set");
  }
  return gain_ * fixed_vals;
}

ConditionalNormal mvn_condition(const VectorRef& mean, const MatrixRef& cov,
                                const std::vector<int>& fixed_idx, const VectorRef& fixed_vals) {
  if (mean.size() != cov.rows()) throw std::invalid_argument("mean does not match covariance");
  GaussianConditioner cond(cov, fixed_idx);
  return {cond.conditional_mean(mean, fixed_vals), cond.conditional_cov()};
}

double gamma_sample(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gamma shape and rate must be positive");
  }
  if (shape < 1.0) {
    const double g = gamma_sample(shape + 1.0, 1.0, rng);
    const double u = rng.uniform();
    return g * std::pow(u, 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = rng.normal();
    const double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    const double v3 = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * z * z + d - d * v3 + d * std::log(v3)) return d * v3 / rate;
  }
}

double chi_square_sample(double df, Rng& rng) { return gamma_sample(0.5 * df, 0.5, rng); }

Matrix wishart_from_bartlett(const MatrixRef& scale_chol, const VectorRef& bartlett_diag,
                             const std::vector<double>& bartlett_lower) {
  const Eigen::Index p = scale_chol.rows();
  if (bartlett_diag.size() != p ||
      bartlett_lower.size() != static_cast<std::size_t>(p * (p - 1) / 2)) {
    throw std::invalid_argument("Bartlett factor has the wrong size");
  }
  Matrix a = Matrix::Zero(p, p);
  std::size_t next = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = bartlett_diag(i);
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = bartlett_lower[next++];
  }
  const Matrix la = scale_chol.triangularView<Eigen::Lower>() * a;
  Matrix w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

Matrix wishart_sample(const MatrixRef& scale, double df, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (scale.cols() != p || p == 0) throw std::invalid_argument("Wishart scale must be square");
  if (!(df >= static_cast<double>(p))) {
    throw std::invalid_argument("Wishart degrees of freedom must be >= dimension");
  }
  const Matrix l = cholesky_lower(scale);
  Vector diag(p);
  std::vector<double> lower;
  lower.reserve(p * (p - 1) / 2);
  for (Eigen::Index i = 0; i < p; ++i) {
    diag(i) = std::sqrt(chi_square_sample(df - static_cast<double>(i), rng));
    for (Eigen::Index j = 0; j < i; ++j) lower.push_back(rng.normal());
  }
  return wishart_from_bartlett(l, diag, lower);
}

Matrix invwishart_sample(const MatrixRef& scale, double df, Rng& rng) {
  return spd_inverse(wishart_sample(spd_inverse(scale), df, rng));
}

Matrix cov_to_corr(const MatrixRef& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
  const Eigen::Index p = cov.rows();
  Matrix corr(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(cov(i, i) > 0.0)) throw std::invalid_argument("covariance has a non-positive diagonal");
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      corr(i, j) = i == j ? 1.0 : cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
    }
  }
  return corr;
}

}  // namespace mlrt
