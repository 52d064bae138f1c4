#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlrt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Raised when a computation produces a non-finite or non-factorizable value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Binary item-by-dimension loading structure.
class QMatrix {
 public:
  QMatrix() = default;
  /// Validates that every entry is 0/1 and every row loads at least one
  /// dimension. Labels default to "item<i>" / "dim<k>" when empty.
  QMatrix(Matrix entries, std::vector<std::string> item_ids = {},
          std::vector<std::string> dim_labels = {});

  /// Simple structure: items assigned to dimensions in contiguous blocks of
  /// (nearly) equal size.
  static QMatrix simple_structure(int n_items, int n_dims);

  const Matrix& entries() const { return entries_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& dim_labels() const { return dim_labels_; }
  int n_items() const { return static_cast<int>(entries_.rows()); }
  int n_dims() const { return static_cast<int>(entries_.cols()); }

 private:
  Matrix entries_;
  std::vector<std::string> item_ids_;
  std::vector<std::string> dim_labels_;
};

/// N x I responses and log response times; NaN marks a missing cell. The two
/// matrices are missing independently.
struct ObservedData {
  Matrix responses;
  Matrix log_rts;

  ObservedData() = default;
  ObservedData(Matrix responses, Matrix log_rts);

  /// Builds from RTs in seconds. Zero RTs become missing.
  static ObservedData from_seconds(Matrix responses, const Matrix& rt_seconds);
  Matrix rt_seconds() const;

  int n_persons() const { return static_cast<int>(responses.rows()); }
  int n_items() const { return static_cast<int>(responses.cols()); }
};

/// The three ability/speed relationships.
enum class ModelStructure { UA_US, MA_US, MA_MS };

std::string_view to_string(ModelStructure s);
ModelStructure parse_structure(std::string_view name);

struct PersonParams {
  Matrix theta;         ///< N x K_theta
  Matrix tau;           ///< N x K_tau
  Matrix sigma_person;  ///< K* x K*, ordered (theta block, tau block)

  int n_persons() const { return static_cast<int>(theta.rows()); }
};

struct ItemParams {
  Vector d;
  Vector xi;
  Vector omega;
  double mu_d = 0.0;
  double mu_xi = 4.3;
  Matrix sigma_item = Matrix::Identity(2, 2);

  int n_items() const { return static_cast<int>(d.size()); }
};

struct Loadings {
  Matrix ability;
  Matrix speed;
};

/// Numerically stable log(1 + exp(x)).
inline double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Inverse logit of q.theta + d. Stays strictly inside (0, 1): results that
/// round to 0 or 1 are moved to the adjacent representable value.
double success_prob(const VectorRef& theta, const VectorRef& q, double d);

/// Bernoulli log-mass of y in {0, 1} given the logit eta.
inline double bernoulli_log_mass(double y, double eta) {
  return y > 0.5 ? -log1p_exp(-eta) : -log1p_exp(eta);
}

/// Expected log RT: xi - q.tau.
double rt_mean(double xi, const VectorRef& q, const VectorRef& tau);

/// Normal log-density of log_t with mean rt_mean(xi, q, tau) and sd 1/omega.
double rt_log_density(double log_t, double xi, const VectorRef& q,
                      const VectorRef& tau, double omega);

double normal_log_density(double x, double mean, double sd);

double joint_log_likelihood(const ObservedData& data,
                            const PersonParams& persons,
                            const ItemParams& items, const MatrixRef& q_ability,
                            const MatrixRef& q_speed);

/// Contribution of a single cell (zero for the missing parts).
double cell_log_likelihood(const ObservedData& data, const PersonParams& persons,
                           const ItemParams& items, const MatrixRef& q_ability,
                           const MatrixRef& q_speed, int person, int item);

/// -2 x joint_log_likelihood.
double deviance(const ObservedData& data, const PersonParams& persons,
                const ItemParams& items, const MatrixRef& q_ability,
                const MatrixRef& q_speed);

Loadings effective_q(ModelStructure structure, const QMatrix& q);

/// Width of the ability and speed blocks under a structure.
int ability_dims(ModelStructure structure, const QMatrix& q);
int speed_dims(ModelStructure structure, const QMatrix& q);

}  // namespace mlrt
