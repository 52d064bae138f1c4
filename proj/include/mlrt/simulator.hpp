#pragma once

#include "mlrt/model.hpp"
#include "mlrt/stats.hpp"

#include <variant>

namespace mlrt {

struct OmegaConstant {
  double value = 2.0;
};

/// log(omega) ~ Normal(mean, sd).
struct OmegaLogNormal {
  double mean = 0.0;
  double sd = 0.25;
};

using OmegaMode = std::variant<OmegaConstant, OmegaLogNormal>;

struct SimDesign {
  int n_persons = 500;
  QMatrix q = QMatrix::simple_structure(20, 2);
  ModelStructure structure = ModelStructure::MA_MS;
  Matrix sigma_person;
  double mu_d = 0.0;
  double mu_xi = 4.3;
  Matrix sigma_item;
  OmegaMode omega_mode = OmegaConstant{2.0};
  double missing_rate = 0.0;

  int k_theta() const { return ability_dims(structure, q); }
  int k_tau() const { return speed_dims(structure, q); }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Person covariance with per-dimension variances and three correlation
/// levels: among abilities, among speeds, and between an ability and a speed.
Matrix block_person_covariance(const Vector& ability_variances, const Vector& speed_variances,
                               double ability_corr, double speed_corr, double cross_corr);

/// N=500, I=20, K=2 simple-structure design. Ability variances 1, speed
/// variances 0.3, within-block correlations 0.7, cross-block -0.3, true
/// omega constant at 2.
SimDesign default_design(ModelStructure structure = ModelStructure::MA_MS);

/// Design for comparing structures fitted to the same data: speed dimensions
/// with distinct variances (0.2, 0.5) correlated 0.7, and abilities with
/// variance 2 correlated 0.3, so that both kinds of multidimensionality carry
/// signal at desk scale.
SimDesign distinct_speed_design();

PersonParams simulate_persons(const SimDesign& design, Rng& rng);
ItemParams simulate_items(const SimDesign& design, Rng& rng);

/// Cell order is row-major (person, then item); one uniform per cell.
Matrix simulate_responses(const PersonParams& persons, const ItemParams& items,
                          const MatrixRef& q_ability, Rng& rng);

/// Seconds. Row-major; one normal per cell.
Matrix simulate_rts(const PersonParams& persons, const ItemParams& items,
                    const MatrixRef& q_speed, Rng& rng);

/// Marks each RT cell missing with probability `missing_rate` (one uniform per
/// cell, row-major). Responses are left untouched.
ObservedData inject_missing(const ObservedData& data, double missing_rate, Rng& rng);

struct SimulatedDataset {
  ObservedData data;
  PersonParams persons;
  ItemParams items;
};

/// Persons, items, responses, RTs, then missingness, all from one stream.
SimulatedDataset simulate_dataset(const SimDesign& design, Rng& rng);

}  // namespace mlrt
