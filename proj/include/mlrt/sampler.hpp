#pragma once

#include "mlrt/draws.hpp"
#include "mlrt/model.hpp"
#include "mlrt/stats.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mlrt {

struct SamplerConfig {
  int n_chains = 2;
  int n_iterations = 10000;
  int n_burnin = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  double initial_proposal_sd = 0.5;
  double adapt_target = 0.44;
  int adapt_window = 50;

  void validate() const;
  int retained_per_chain() const { return (n_iterations - n_burnin) / thin; }
};

/// Priors and hyperpriors. Normal hyperprior spreads are variances.
struct PriorSpec {
  double r_person_scale = 1.0;       ///< R_person = scale x identity
  std::optional<double> df_person;   ///< defaults to K*
  double r_item_scale = 1.0;         ///< R_item = scale x identity(2)
  double df_item = 2.0;
  double omega_precision_shape = 1.0;  ///< omega^2 ~ Gamma(shape, rate)
  double omega_precision_rate = 1.0;
  double mu_d_mean = 0.0;
  double mu_d_var = 2.0;
  double mu_xi_mean = 4.3;
  double mu_xi_var = 2.0;

  double person_df(int k_star) const { return df_person.value_or(static_cast<double>(k_star)); }
  void validate() const;
};

/// Per-parameter Metropolis acceptance counts (theta is N x K_theta).
struct AcceptanceCounts {
  Matrix theta;
  Vector d;
  int steps = 0;

  void reset();
  double theta_rate() const;
  double d_rate() const;
};

struct ChainState {
  PersonParams persons;
  ItemParams items;
  int iteration = 0;
  Matrix theta_proposal_sd;
  Vector d_proposal_sd;
  AcceptanceCounts window;    ///< reset at every adaptation step
  AcceptanceCounts retained;  ///< reset when burn-in ends
};

struct NormalConditional {
  Vector mean;
  Matrix cov;
};

struct GammaConditional {
  double shape;
  double rate;
};

struct InvWishartConditional {
  Matrix scale;
  double df;
};

struct ChainResult {
  Matrix draws;  ///< retained draws x layout size
  double theta_acceptance = 0.0;
  double d_acceptance = 0.0;
};

/// Metropolis-within-Gibbs sampler for one data set and one pair of loading
/// matrices. Every draw method is const and reads only the state it is
/// given, so chains share one sampler.
///
/// One iteration updates, in order: every tau_n (exact), every theta_n
/// (componentwise random-walk Metropolis), every xi_i (exact), every d_i
/// (random-walk Metropolis), every omega_i (exact), Sigma_person (exact),
/// then (mu_d, mu_xi) and Sigma_item (exact).
class GibbsSampler {
 public:
  GibbsSampler(const ObservedData& data, Loadings loadings, PriorSpec priors,
               SamplerConfig config);

  const DrawLayout& layout() const { return layout_; }
  const SamplerConfig& config() const { return config_; }
  const PriorSpec& priors() const { return priors_; }
  int k_theta() const { return k_theta_; }
  int k_tau() const { return k_tau_; }

  /// theta and tau as independent N(0, 0.25) (person-major, theta first),
  /// data-driven item starts, identity covariances, hyper-means at the prior
  /// means.
  ChainState initialize_state(Rng& rng) const;

  NormalConditional tau_conditional(int n, const ChainState& state) const;
  Vector update_tau(int n, const ChainState& state, Rng& rng) const;

  /// Componentwise Metropolis sweep over theta_n; per component one normal
  /// (increment) then one uniform (acceptance). Returns the new theta_n and
  /// records acceptances in `state`.
  Vector update_theta(int n, ChainState& state, Rng& rng) const;
  /// Unnormalized log full conditional of theta_n, for tests and diagnostics.
  double theta_log_target(int n, const VectorRef& theta, const ChainState& state) const;

  NormalConditional xi_conditional(int i, const ChainState& state) const;
  double update_xi(int i, const ChainState& state, Rng& rng) const;

  double update_d(int i, ChainState& state, Rng& rng) const;
  double d_log_target(int i, double d, const ChainState& state) const;

  GammaConditional omega_precision_conditional(int i, const ChainState& state) const;
  double update_omega(int i, const ChainState& state, Rng& rng) const;

  InvWishartConditional sigma_person_conditional(const ChainState& state) const;
  Matrix update_sigma_person(const ChainState& state, Rng& rng) const;

  NormalConditional item_mean_conditional(const ChainState& state) const;
  InvWishartConditional sigma_item_conditional(const ChainState& state, double mu_d,
                                               double mu_xi) const;
  /// Draws (mu_d, mu_xi) and then Sigma_item given the new means.
  void update_item_hyper(ChainState& state, Rng& rng) const;

  /// Robbins-Monro step on every Metropolis proposal sd toward
  /// config.adapt_target using the acceptance counts of the current window
  /// (state.window.steps sweeps); then clears the window.
  void adapt_proposals(ChainState& state) const;

  /// One full update cycle; adapts proposal scales while in burn-in.
  void iterate(ChainState& state, Rng& rng) const;

  /// Deviance of the current state; throws NumericalError naming the cell when
  /// a term is not finite.
  double state_deviance(const ChainState& state) const;

  ChainResult run_chain(int chain_index) const;

 private:
  struct Obs {
    int index;
    double value;
  };
  struct PersonPrior;
  struct ItemPrior;

  PersonPrior person_prior(const ChainState& state) const;
  ItemPrior item_prior(const ChainState& state) const;
  /// Posterior precision and precision-weighted mean of tau_n.
  void tau_canonical(int n, const ChainState& state, const PersonPrior& prior, Matrix& precision,
                     Vector& info) const;
  Vector draw_tau(int n, const ChainState& state, const PersonPrior& prior, Rng& rng) const;
  NormalConditional tau_conditional(int n, const ChainState& state,
                                    const PersonPrior& prior) const;
  Vector draw_theta(int n, ChainState& state, const PersonPrior& prior, Rng& rng) const;
  NormalConditional xi_conditional(int i, const ChainState& state, const ItemPrior& prior) const;
  double draw_d(int i, ChainState& state, const ItemPrior& prior, Rng& rng) const;

  const ObservedData& data_;
  Loadings loadings_;
  PriorSpec priors_;
  SamplerConfig config_;
  int k_theta_;
  int k_tau_;
  DrawLayout layout_;
  std::vector<std::vector<int>> ability_dims_of_item_;
  std::vector<std::vector<int>> speed_dims_of_item_;
  std::vector<std::vector<Obs>> responses_by_person_;
  std::vector<std::vector<Obs>> rts_by_person_;
  std::vector<std::vector<Obs>> responses_by_item_;
  std::vector<std::vector<Obs>> rts_by_item_;
};

/// Runs config.n_chains chains concurrently; chain c uses Rng(config.seed, c).
PosteriorDraws fit_model(const ObservedData& data, const Loadings& loadings,
                         const SamplerConfig& config, const PriorSpec& priors = {},
                         std::vector<ChainResult>* chain_stats = nullptr);

}  // namespace mlrt
