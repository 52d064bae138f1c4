#pragma once

#include "mlrt/draws.hpp"
#include "mlrt/model.hpp"
#include "mlrt/stats.hpp"

#include <span>
#include <string>
#include <vector>

namespace mlrt {

/// Classic Gelman-Rubin potential scale reduction factor (no degrees-of-freedom
/// correction, no chain splitting). Needs >= 2 chains of equal length >= 2.
/// Returns +inf when within-chain variance is zero but chains disagree, and 1
/// when every draw is identical.
double psrf(const std::vector<Vector>& chains);

/// Fraction of replicated discrepancies >= the realized ones (ties count).
double ppp_from_discrepancies(std::span<const double> realized,
                              std::span<const double> replicated);

/// Sum of squared Pearson residuals over the observed response cells.
double ra_discrepancy(const MatrixRef& responses, const ObservedData& data,
                      const PersonParams& persons, const ItemParams& items,
                      const MatrixRef& q_ability);

/// Sum of squared standardized log-RT residuals over the observed cells.
double rt_discrepancy(const MatrixRef& log_rts, const ObservedData& data,
                      const PersonParams& persons, const ItemParams& items,
                      const MatrixRef& q_speed);

/// Pooled draw indices used by PPMC: 0, stride, 2 * stride, ...
std::vector<int> ppmc_draw_indices(const PosteriorDraws& draws, int stride);

/// Posterior predictive p-value of the response model. For each selected
/// draw, the replicated responses are generated over the observed cells
/// (row-major, one uniform per cell).
double ppmc_ra(const PosteriorDraws& draws, const ObservedData& data, const MatrixRef& q_ability,
               Rng& rng, int stride = 10);

/// Posterior predictive p-value of the RT model (one normal per observed cell).
double ppmc_rt(const PosteriorDraws& draws, const ObservedData& data, const MatrixRef& q_speed,
               Rng& rng, int stride = 10);

struct InformationCriteria {
  double aic;
  double bic;
  double dic;
  double mean_deviance;
  double p_e;
  double p;
};

/// Number of estimated structural parameters: 3I + 2 + 3 + K*(K*+1)/2.
int parameter_count(int n_items, int k_star);

InformationCriteria information_criteria(std::span<const double> deviances, double p,
                                         double n_persons);
InformationCriteria information_criteria(const PosteriorDraws& draws, double p, double n_persons);

struct ParameterSummary {
  std::string name;
  double mean;
  double sd;
  double psrf;  ///< NaN when fewer than 2 chains or fewer than 2 draws per chain
};

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws);

/// Pooled mean and sample sd of a single sequence.
std::pair<double, double> mean_sd(std::span<const double> values);

struct FitSummary {
  std::vector<ParameterSummary> parameters;
  double ppp_ra;
  double ppp_rt;
  InformationCriteria criteria;

  double max_psrf() const;
};

struct PpmcOptions {
  int stride = 10;
  std::uint64_t seed = 1;
};

/// Summaries, PPMC (seeded on stream 1000) and information criteria.
FitSummary summarize_fit(const PosteriorDraws& draws, const ObservedData& data,
                         const Loadings& loadings, const PpmcOptions& ppmc = {});

}  // namespace mlrt
