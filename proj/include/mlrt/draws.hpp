#pragma once

#include "mlrt/model.hpp"

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mlrt {

/// Column layout of one retained draw. Columns, in order:
///   theta[n,k], tau[n,k]            (person-major, 1-based indices)
///   d[i], xi[i], omega[i]
///   mu_d, mu_xi
///   sigma_item[j,k], sigma_person[j,k]   (lower triangle, row by row)
///   deviance
class DrawLayout {
 public:
  DrawLayout() = default;
  DrawLayout(int n_persons, int n_items, int k_theta, int k_tau);

  int n_persons() const { return n_persons_; }
  int n_items() const { return n_items_; }
  int k_theta() const { return k_theta_; }
  int k_tau() const { return k_tau_; }
  int k_star() const { return k_theta_ + k_tau_; }
  int size() const { return static_cast<int>(names_.size()); }

  int theta(int n, int k) const { return n * k_theta_ + k; }
  int tau(int n, int k) const { return tau_offset_ + n * k_tau_ + k; }
  int d(int i) const { return d_offset_ + i; }
  int xi(int i) const { return d_offset_ + n_items_ + i; }
  int omega(int i) const { return d_offset_ + 2 * n_items_ + i; }
  int mu_d() const { return d_offset_ + 3 * n_items_; }
  int mu_xi() const { return mu_d() + 1; }
  int sigma_item(int j, int k) const;
  int sigma_person(int j, int k) const;
  int deviance() const { return size() - 1; }

  const std::vector<std::string>& names() const { return names_; }
  /// Column index for a name such as "xi[3]"; -1 when absent.
  int find(const std::string& name) const;

  void pack(const PersonParams& persons, const ItemParams& items, double deviance,
            Eigen::Ref<Vector> row) const;
  std::pair<PersonParams, ItemParams> unpack(const VectorRef& row) const;

 private:
  static int lower_index(int j, int k);

  int n_persons_ = 0;
  int n_items_ = 0;
  int k_theta_ = 0;
  int k_tau_ = 0;
  int tau_offset_ = 0;
  int d_offset_ = 0;
  int sigma_item_offset_ = 0;
  int sigma_person_offset_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

/// Retained draws of every chain; chains[c] is (retained draws) x layout.size().
struct PosteriorDraws {
  DrawLayout layout;
  std::vector<Matrix> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int draws_per_chain() const { return chains.empty() ? 0 : static_cast<int>(chains[0].rows()); }
  int total_draws() const;

  /// All chains' values of one column concatenated in chain order.
  Vector pooled(int column) const;
  /// One vector per chain.
  std::vector<Vector> per_chain(int column) const;
  /// Draw number `index` of the pooled sequence.
  Vector pooled_row(int index) const;
};

}  // namespace mlrt
