#pragma once

#include "mlrt/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace testing {

inline double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_var(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Monte Carlo standard error of the mean by non-overlapping batch means;
/// robust to the autocorrelation of Markov chain output.
inline double batch_means_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += x[b * len + j];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(sample_var(means) / batches);
}

/// Brute-force posterior on a grid: a fine trapezoid scan of the whole
/// support [lo, hi] gives the normalizing constant and moments, then the
/// density is tabulated on `points` nodes spanning +-5 posterior SDs
/// (clipped to the support).
struct GridPosterior {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

inline GridPosterior grid_posterior(const std::function<double(double)>& log_f, double lo,
                                    double hi, int points = 401) {
  const int fine = 200001;
  std::vector<double> xs(fine), ys(fine);
  double top = -INFINITY;
  for (int j = 0; j < fine; ++j) {
    xs[j] = lo + (hi - lo) * j / (fine - 1);
    ys[j] = log_f(xs[j]);
    top = std::max(top, ys[j]);
  }
  for (double& y : ys) y = std::exp(y - top);
  double area = 0.0, m = 0.0, m2 = 0.0;
  for (int j = 1; j < fine; ++j) {
    const double h = xs[j] - xs[j - 1];
    area += 0.5 * h * (ys[j] + ys[j - 1]);
    m += 0.5 * h * (xs[j] * ys[j] + xs[j - 1] * ys[j - 1]);
    m2 += 0.5 * h * (xs[j] * xs[j] * ys[j] + xs[j - 1] * xs[j - 1] * ys[j - 1]);
  }
  m /= area;
  m2 /= area;

  GridPosterior out;
  out.mean = m;
  out.sd = std::sqrt(m2 - m * m);
  const double a = std::max(lo, m - 5 * out.sd), b = std::min(hi, m + 5 * out.sd);
  for (int j = 0; j < points; ++j) {
    out.x.push_back(a + (b - a) * j / (points - 1));
    out.density.push_back(std::exp(log_f(out.x.back()) - top) / area);
  }
  return out;
}

/// Largest relative deviation of `density(x)` from the grid posterior.
inline double max_relative_error(const GridPosterior& grid,
                                 const std::function<double(double)>& density) {
  double worst = 0.0;
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    worst = std::max(worst, std::abs(density(grid.x[j]) - grid.density[j]) / grid.density[j]);
  }
  return worst;
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2 * std::numbers::pi * var);
}

inline double gamma_pdf(double x, double shape, double rate) {
  return std::exp(shape * std::log(rate) - std::lgamma(shape) + (shape - 1) * std::log(x) -
                  rate * x);
}

/// Inverse-gamma density with shape a and scale b.
inline double inv_gamma_pdf(double x, double a, double b) {
  return std::exp(a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(x) - b / x);
}

}  // namespace testing
