#include "mlrt/simulator.hpp"

namespace mlrt {

void SimDesign::validate() const {
  if (n_persons < 0) throw std::invalid_argument("n_persons must be nonnegative");
  const int k_star = k_theta() + k_tau();
  if (sigma_person.rows() != k_star || sigma_person.cols() != k_star) {
    throw std::invalid_argument("sigma_person must be " + std::to_string(k_star) + "x" +
                                std::to_string(k_star) + " for structure " +
                                std::string(to_string(structure)));
  }
  if (!is_spd(sigma_person)) throw std::invalid_argument("sigma_person is not SPD");
  if (sigma_item.rows() != 2 || !is_spd(sigma_item)) {
    throw std::invalid_argument("sigma_item must be a 2x2 SPD matrix");
  }
  if (const auto* c = std::get_if<OmegaConstant>(&omega_mode); c && !(c->value > 0.0)) {
    throw std::invalid_argument("constant omega must be positive");
  }
  if (const auto* l = std::get_if<OmegaLogNormal>(&omega_mode); l && !(l->sd >= 0.0)) {
    throw std::invalid_argument("log-normal omega sd must be nonnegative");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw std::invalid_argument("missing_rate must lie in [0, 1)");
  }
}

Matrix block_person_covariance(const Vector& ability_variances, const Vector& speed_variances,
                               double ability_corr, double speed_corr, double cross_corr) {
  const Eigen::Index ka = ability_variances.size();
  const Eigen::Index ks = speed_variances.size();
  Vector sd(ka + ks);
  sd << ability_variances.cwiseSqrt(), speed_variances.cwiseSqrt();
  Matrix cov(ka + ks, ka + ks);
  for (Eigen::Index a = 0; a < ka + ks; ++a) {
    for (Eigen::Index b = 0; b < ka + ks; ++b) {
      double r = 1.0;
      if (a != b) {
        const bool a_speed = a >= ka;
        const bool b_speed = b >= ka;
        r = a_speed != b_speed ? cross_corr : (a_speed ? speed_corr : ability_corr);
      }
      cov(a, b) = r * sd(a) * sd(b);
    }
  }
  return cov;
}

SimDesign default_design(ModelStructure structure) {
  SimDesign design;
  design.structure = structure;
  design.q = QMatrix::simple_structure(20, 2);
  design.sigma_person = block_person_covariance(
      Vector::Constant(design.k_theta(), 1.0), Vector::Constant(design.k_tau(), 0.3), 0.7, 0.7,
      -0.3);
  design.sigma_item.resize(2, 2);
  const double cov_d_xi = -0.3 * std::sqrt(0.5 * 0.25);
  design.sigma_item << 0.5, cov_d_xi, cov_d_xi, 0.25;
  return design;
}

SimDesign distinct_speed_design() {
  SimDesign design = default_design(ModelStructure::MA_MS);
  Vector speed_var(2);
  speed_var << 0.2, 0.5;
  design.sigma_person =
      block_person_covariance(Vector::Constant(2, 2.0), speed_var, 0.3, 0.7, -0.3);
  return design;
}

PersonParams simulate_persons(const SimDesign& design, Rng& rng) {
  design.validate();
  const int kt = design.k_theta();
  const int ks = design.k_tau();
  PersonParams persons;
  persons.theta.resize(design.n_persons, kt);
  persons.tau.resize(design.n_persons, ks);
  persons.sigma_person = design.sigma_person;
  const Vector zero = Vector::Zero(kt + ks);
  for (int n = 0; n < design.n_persons; ++n) {
    const Vector draw = mvn_sample(zero, design.sigma_person, rng);
    persons.theta.row(n) = draw.head(kt).transpose();
    persons.tau.row(n) = draw.tail(ks).transpose();
  }
  return persons;
}

ItemParams simulate_items(const SimDesign& design, Rng& rng) {
  design.validate();
  const int n_items = design.q.n_items();
  ItemParams items;
  items.d.resize(n_items);
  items.xi.resize(n_items);
  items.omega.resize(n_items);
  items.mu_d = design.mu_d;
  items.mu_xi = design.mu_xi;
  items.sigma_item = design.sigma_item;
  Vector mean(2);
  mean << design.mu_d, design.mu_xi;
  for (int i = 0; i < n_items; ++i) {
    const Vector draw = mvn_sample(mean, design.sigma_item, rng);
    items.d(i) = draw(0);
    items.xi(i) = draw(1);
  }
  for (int i = 0; i < n_items; ++i) {
    if (const auto* c = std::get_if<OmegaConstant>(&design.omega_mode)) {
      items.omega(i) = c->value;
    } else {
      const auto& l = std::get<OmegaLogNormal>(design.omega_mode);
      items.omega(i) = std::exp(l.mean + l.sd * rng.normal());
    }
  }
  return items;
}

Matrix simulate_responses(const PersonParams& persons, const ItemParams& items,
                          const MatrixRef& q_ability, Rng& rng) {
  const int n_persons = persons.n_persons();
  const int n_items = items.n_items();
  if (q_ability.rows() != n_items || q_ability.cols() != persons.theta.cols()) {
    throw std::invalid_argument("ability loadings do not match persons/items");
  }
  Matrix y(n_persons, n_items);
  for (int n = 0; n < n_persons; ++n) {
    for (int i = 0; i < n_items; ++i) {
      const double p = success_prob(persons.theta.row(n).transpose(),
                                    q_ability.row(i).transpose(), items.d(i));
      y(n, i) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  return y;
}

Matrix simulate_rts(const PersonParams& persons, const ItemParams& items,
                    const MatrixRef& q_speed, Rng& rng) {
  const int n_persons = persons.n_persons();
  const int n_items = items.n_items();
  if (q_speed.rows() != n_items || q_speed.cols() != persons.tau.cols()) {
    throw std::invalid_argument("speed loadings do not match persons/items");
  }
  Matrix t(n_persons, n_items);
  for (int n = 0; n < n_persons; ++n) {
    for (int i = 0; i < n_items; ++i) {
      const double mean =
          rt_mean(items.xi(i), q_speed.row(i).transpose(), persons.tau.row(n).transpose());
      t(n, i) = std::exp(mean + rng.normal() / items.omega(i));
    }
  }
  return t;
}

ObservedData inject_missing(const ObservedData& data, double missing_rate, Rng& rng) {
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw std::invalid_argument("missing_rate must lie in [0, 1)");
  }
  ObservedData out = data;
  if (missing_rate == 0.0) return out;
  for (int n = 0; n < out.n_persons(); ++n) {
    for (int i = 0; i < out.n_items(); ++i) {
      if (rng.uniform() < missing_rate) out.log_rts(n, i) = kMissing;
    }
  }
  return out;
}

SimulatedDataset simulate_dataset(const SimDesign& design, Rng& rng) {
  SimulatedDataset out;
  out.persons = simulate_persons(design, rng);
  out.items = simulate_items(design, rng);
  const Loadings q = effective_q(design.structure, design.q);
  Matrix y = simulate_responses(out.persons, out.items, q.ability, rng);
  const Matrix t = simulate_rts(out.persons, out.items, q.speed, rng);
  out.data = inject_missing(ObservedData::from_seconds(std::move(y), t), design.missing_rate, rng);
  return out;
}

}  // namespace mlrt
