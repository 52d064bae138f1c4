#pragma once

#include "mlrt/diagnostics.hpp"
#include "mlrt/sampler.hpp"
#include "mlrt/simulator.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mlrt {

/// Mean of (estimate - truth).
double bias(std::span<const double> estimates, double true_value);
double bias(std::span<const double> estimates, std::span<const double> truths);

/// Root mean squared error against the truth.
double rmse(std::span<const double> estimates, double true_value);
double rmse(std::span<const double> estimates, std::span<const double> truths);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> cor(std::span<const double> estimates, std::span<const double> truths);

struct RecoveryRow {
  std::string family;
  double bias = 0.0;   ///< mean over members of the per-member bias
  double abs_bias = 0.0;  ///< mean over members of |per-member bias|
  double rmse = 0.0;   ///< mean over members of the per-member RMSE
  std::optional<double> cor;  ///< pooled over all (estimate, truth) pairs
  int members = 0;
};

struct ReplicationOutcome {
  int replication = 0;
  bool accepted = false;
  double max_psrf = 0.0;
  double ppp_ra = 0.0;
  double ppp_rt = 0.0;
  InformationCriteria criteria{};
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  std::vector<ReplicationOutcome> outcomes;
  int replications = 0;
  int excluded = 0;

  const RecoveryRow* find(const std::string& family) const;
};

struct RecoveryOptions {
  double psrf_exclusion = 1.2;
  bool run_ppmc = true;
  int ppmc_stride = 10;
  unsigned max_parallel = 0;  ///< 0 = hardware concurrency
};

/// Replication r (1..R) simulates on Rng(base_seed, r), fits the design's
/// structure with sampler seed mix_seed(base_seed, r) and takes posterior
/// means as estimates. Replications whose largest PSRF reaches
/// options.psrf_exclusion are excluded from the rows.
RecoveryReport run_replications(const SimDesign& design, const SamplerConfig& fit_config,
                                int replications, std::uint64_t base_seed,
                                const PriorSpec& priors = {},
                                const RecoveryOptions& options = {});

}  // namespace mlrt
