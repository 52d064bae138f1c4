#pragma once

#include "mlrt/io.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mlrt {

enum class Command { Simulate, Fit, Compare, Recover };

Command parse_command(std::string_view name);
std::string_view to_string(Command c);

/// Everything one CLI invocation needs. Built from a JSON config document;
/// every field has a default, so an empty document is a valid simulate or
/// recover config.
///
/// Recognized keys (all optional):
///   seed, structure, output_dir, replications, structures (compare),
///   data.{responses, rts, qmatrix},
///   sampler.{n_chains, n_iterations, n_burnin, thin, initial_proposal_sd,
///            adapt_target, adapt_window, ppmc_stride},
///   priors.{r_person_scale, df_person, r_item_scale, df_item,
///           omega_precision_shape, omega_precision_rate,
///           mu_d_mean, mu_d_var, mu_xi_mean, mu_xi_var},
///   design.{n_persons, n_items, n_dims, qmatrix, ability_variances,
///           speed_variances, ability_corr, speed_corr, cross_corr,
///           sigma_person, mu_d, mu_xi, sigma_item, omega, missing_rate}
struct RunConfig {
  Command command = Command::Simulate;
  io::fs::path responses;
  io::fs::path rts;
  io::fs::path qmatrix;
  io::fs::path output_dir = "out";
  ModelStructure structure = ModelStructure::MA_MS;
  std::vector<ModelStructure> compare_structures = {
      ModelStructure::UA_US, ModelStructure::MA_US, ModelStructure::MA_MS};
  SamplerConfig sampler;
  PriorSpec priors;
  SimDesign design;
  int replications = 10;
  int ppmc_stride = 10;
  io::json document;  ///< normalized effective configuration

  /// Throws std::invalid_argument naming the first violated requirement.
  void validate() const;
  /// 16 hex digits, FNV-1a over the normalized document. File locations are
  /// not part of the document, so moving inputs or outputs keeps the hash.
  std::string hash() const;
  io::Provenance provenance() const { return {hash(), sampler.seed}; }
};

/// Applies "a.b.c=value" overrides to a JSON document. The value is parsed as
/// JSON when possible and kept as a string otherwise.
void apply_override(io::json& document, const std::string& assignment);

RunConfig parse_run_config(Command command, const io::json& document);

/// Executes a validated config, writing artifacts under output_dir and
/// progress to `log`. Returns the process exit status.
int run_command(const RunConfig& config, std::ostream& log);

}  // namespace mlrt
