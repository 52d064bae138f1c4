#pragma once

#include <cstdint>
#include <vector>

// Brute-force checks of the sampler's full conditionals, shared by the unit
// tests and the acceptance binary.
namespace oracles {

/// Max relative error between an implemented full-conditional density and a
/// 401-point grid posterior built from the model's densities directly.
double tau_grid_error();
double xi_grid_error();
double omega_precision_grid_error();
/// Marginal of a diagonal Sigma_person element: a one-dimensional
/// inverse-gamma problem.
double sigma_person_grid_error();
double mu_d_grid_error();

/// Moments of a Metropolis chain run with no likelihood terms, beside the
/// conditional prior it should reproduce.
struct PriorRecovery {
  double mean;
  double mean_se;  ///< batch-means Monte Carlo SE
  double var;
  double target_mean;
  double target_var;

  bool passes() const;
};

/// 2000 adapted burn-in sweeps, then 20,000 kept draws; one entry per
/// component of a two-dimensional theta_n.
std::vector<PriorRecovery> theta_prior_recovery(std::uint64_t seed);
PriorRecovery d_prior_recovery(std::uint64_t seed);

}  // namespace oracles
