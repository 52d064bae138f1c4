#include "mlrt/draws.hpp"

namespace mlrt {

namespace {

std::string indexed(const char* name, int a) {
  return std::string(name) + "[" + std::to_string(a + 1) + "]";
}

std::string indexed(const char* name, int a, int b) {
  return std::string(name) + "[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "]";
}

}  // namespace

DrawLayout::DrawLayout(int n_persons, int n_items, int k_theta, int k_tau)
    : n_persons_(n_persons), n_items_(n_items), k_theta_(k_theta), k_tau_(k_tau) {
  for (int n = 0; n < n_persons; ++n) {
    for (int k = 0; k < k_theta; ++k) names_.push_back(indexed("theta", n, k));
  }
  tau_offset_ = static_cast<int>(names_.size());
  for (int n = 0; n < n_persons; ++n) {
    for (int k = 0; k < k_tau; ++k) names_.push_back(indexed("tau", n, k));
  }
  d_offset_ = static_cast<int>(names_.size());
  for (int i = 0; i < n_items; ++i) names_.push_back(indexed("d", i));
  for (int i = 0; i < n_items; ++i) names_.push_back(indexed("xi", i));
  for (int i = 0; i < n_items; ++i) names_.push_back(indexed("omega", i));
  names_.push_back("mu_d");
  names_.push_back("mu_xi");
  sigma_item_offset_ = static_cast<int>(names_.size());
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k <= j; ++k) names_.push_back(indexed("sigma_item", j, k));
  }
  sigma_person_offset_ = static_cast<int>(names_.size());
  for (int j = 0; j < k_star(); ++j) {
    for (int k = 0; k <= j; ++k) names_.push_back(indexed("sigma_person", j, k));
  }
  names_.push_back("deviance");
  for (int c = 0; c < size(); ++c) index_.emplace(names_[c], c);
}

int DrawLayout::lower_index(int j, int k) {
  if (k > j) std::swap(j, k);
  return j * (j + 1) / 2 + k;
}

int DrawLayout::sigma_item(int j, int k) const { return sigma_item_offset_ + lower_index(j, k); }

int DrawLayout::sigma_person(int j, int k) const {
  return sigma_person_offset_ + lower_index(j, k);
}

int DrawLayout::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void DrawLayout::pack(const PersonParams& persons, const ItemParams& items, double dev,
                      Eigen::Ref<Vector> row) const {
  for (int n = 0; n < n_persons_; ++n) {
    for (int k = 0; k < k_theta_; ++k) row(theta(n, k)) = persons.theta(n, k);
    for (int k = 0; k < k_tau_; ++k) row(tau(n, k)) = persons.tau(n, k);
  }
  for (int i = 0; i < n_items_; ++i) {
    row(d(i)) = items.d(i);
    row(xi(i)) = items.xi(i);
    row(omega(i)) = items.omega(i);
  }
  row(mu_d()) = items.mu_d;
  row(mu_xi()) = items.mu_xi;
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k <= j; ++k) row(sigma_item(j, k)) = items.sigma_item(j, k);
  }
  for (int j = 0; j < k_star(); ++j) {
    for (int k = 0; k <= j; ++k) row(sigma_person(j, k)) = persons.sigma_person(j, k);
  }
  row(deviance()) = dev;
}

std::pair<PersonParams, ItemParams> DrawLayout::unpack(const VectorRef& row) const {
  PersonParams persons;
  persons.theta.resize(n_persons_, k_theta_);
  persons.tau.resize(n_persons_, k_tau_);
  persons.sigma_person.resize(k_star(), k_star());
  for (int n = 0; n < n_persons_; ++n) {
    for (int k = 0; k < k_theta_; ++k) persons.theta(n, k) = row(theta(n, k));
    for (int k = 0; k < k_tau_; ++k) persons.tau(n, k) = row(tau(n, k));
  }
  for (int j = 0; j < k_star(); ++j) {
    for (int k = 0; k <= j; ++k) {
      persons.sigma_person(j, k) = persons.sigma_person(k, j) = row(sigma_person(j, k));
    }
  }
  ItemParams items;
  items.d.resize(n_items_);
  items.xi.resize(n_items_);
  items.omega.resize(n_items_);
  for (int i = 0; i < n_items_; ++i) {
    items.d(i) = row(d(i));
    items.xi(i) = row(xi(i));
    items.omega(i) = row(omega(i));
  }
  items.mu_d = row(mu_d());
  items.mu_xi = row(mu_xi());
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k <= j; ++k) {
      items.sigma_item(j, k) = items.sigma_item(k, j) = row(sigma_item(j, k));
    }
  }
  return {std::move(persons), std::move(items)};
}

int PosteriorDraws::total_draws() const {
  int total = 0;
  for (const auto& c : chains) total += static_cast<int>(c.rows());
  return total;
}

Vector PosteriorDraws::pooled(int column) const {
  Vector out(total_draws());
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    out.segment(at, c.rows()) = c.col(column);
    at += c.rows();
  }
  return out;
}

std::vector<Vector> PosteriorDraws::per_chain(int column) const {
  std::vector<Vector> out;
  out.reserve(chains.size());
  for (const auto& c : chains) out.emplace_back(c.col(column));
  return out;
}

Vector PosteriorDraws::pooled_row(int index) const {
  for (const auto& c : chains) {
    if (index < c.rows()) return c.row(index).transpose();
    index -= static_cast<int>(c.rows());
  }
  throw std::out_of_range("draw index out of range");
}

}  // namespace mlrt
