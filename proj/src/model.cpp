#include "mlrt/model.hpp"

#include <numbers>

namespace mlrt {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void check_dims(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string("dimension mismatch: ") + what + " (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

QMatrix::QMatrix(Matrix entries, std::vector<std::string> item_ids,
                 std::vector<std::string> dim_labels)
    : entries_(std::move(entries)),
      item_ids_(std::move(item_ids)),
      dim_labels_(std::move(dim_labels)) {
  require(entries_.rows() >= 1 && entries_.cols() >= 1,
          "Q-matrix needs at least one item and one dimension");
  if (item_ids_.empty()) {
    for (int i = 0; i < n_items(); ++i) item_ids_.push_back("item" + std::to_string(i + 1));
  }
  if (dim_labels_.empty()) {
    for (int k = 0; k < n_dims(); ++k) dim_labels_.push_back("dim" + std::to_string(k + 1));
  }
  require(static_cast<int>(item_ids_.size()) == n_items(), "Q-matrix item id count mismatch");
  require(static_cast<int>(dim_labels_.size()) == n_dims(),
          "Q-matrix dimension label count mismatch");
  for (int i = 0; i < n_items(); ++i) {
    bool loads = false;
    for (int k = 0; k < n_dims(); ++k) {
      const double v = entries_(i, k);
      require(v == 0.0 || v == 1.0, "Q-matrix entry for item " + item_ids_[i] + " is not binary");
      loads = loads || v == 1.0;
    }
    require(loads, "Q-matrix row for item " + item_ids_[i] + " loads no dimension");
  }
}

QMatrix QMatrix::simple_structure(int n_items, int n_dims) {
  require(n_items >= n_dims && n_dims >= 1, "simple structure needs n_items >= n_dims >= 1");
  Matrix q = Matrix::Zero(n_items, n_dims);
  for (int i = 0; i < n_items; ++i) q(i, (i * n_dims) / n_items) = 1.0;
  return QMatrix(std::move(q));
}

ObservedData::ObservedData(Matrix responses_in, Matrix log_rts_in)
    : responses(std::move(responses_in)), log_rts(std::move(log_rts_in)) {
  require(responses.rows() == log_rts.rows() && responses.cols() == log_rts.cols(),
          "responses and RTs must have identical dimensions");
  for (Eigen::Index n = 0; n < responses.rows(); ++n) {
    for (Eigen::Index i = 0; i < responses.cols(); ++i) {
      const double y = responses(n, i);
      require(is_missing(y) || y == 0.0 || y == 1.0, "response is not binary");
      const double lt = log_rts(n, i);
      require(is_missing(lt) || std::isfinite(lt), "log RT is not finite");
    }
  }
}

ObservedData ObservedData::from_seconds(Matrix responses, const Matrix& rt_seconds) {
  Matrix log_rts(rt_seconds.rows(), rt_seconds.cols());
  for (Eigen::Index n = 0; n < rt_seconds.rows(); ++n) {
    for (Eigen::Index i = 0; i < rt_seconds.cols(); ++i) {
      const double t = rt_seconds(n, i);
      require(is_missing(t) || t >= 0.0, "negative response time");
      log_rts(n, i) = (is_missing(t) || t == 0.0) ? kMissing : std::log(t);
    }
  }
  return ObservedData(std::move(responses), std::move(log_rts));
}

Matrix ObservedData::rt_seconds() const {
  return log_rts.unaryExpr([](double lt) { return is_missing(lt) ? kMissing : std::exp(lt); });
}

std::string_view to_string(ModelStructure s) {
  switch (s) {
    case ModelStructure::UA_US: return "UA_US";
    case ModelStructure::MA_US: return "MA_US";
    case ModelStructure::MA_MS: return "MA_MS";
  }
  return "?";
}

ModelStructure parse_structure(std::string_view name) {
  if (name == "UA_US" || name == "UA-US") return ModelStructure::UA_US;
  if (name == "MA_US" || name == "MA-US") return ModelStructure::MA_US;
  if (name == "MA_MS" || name == "MA-MS") return ModelStructure::MA_MS;
  throw std::invalid_argument("unknown model structure '" + std::string(name) + "'");
}

double success_prob(const VectorRef& theta, const VectorRef& q, double d) {
  check_dims(theta.size(), q.size(), "theta vs q row");
  const double eta = q.dot(theta) + d;
  double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
  if (p >= 1.0) p = std::nextafter(1.0, 0.0);
  if (p <= 0.0) p = std::numeric_limits<double>::denorm_min();
  return p;
}

double rt_mean(double xi, const VectorRef& q, const VectorRef& tau) {
  check_dims(tau.size(), q.size(), "tau vs q row");
  return xi - q.dot(tau);
}

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double rt_log_density(double log_t, double xi, const VectorRef& q, const VectorRef& tau,
                      double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  const double z = omega * (log_t - rt_mean(xi, q, tau));
  return -0.5 * z * z + std::log(omega) - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace {

void check_consistent(const ObservedData& data, const PersonParams& persons,
                      const ItemParams& items, const MatrixRef& q_ability,
                      const MatrixRef& q_speed) {
  check_dims(persons.theta.rows(), data.n_persons(), "theta rows vs persons");
  check_dims(persons.tau.rows(), data.n_persons(), "tau rows vs persons");
  check_dims(items.d.size(), data.n_items(), "d vs items");
  check_dims(items.xi.size(), data.n_items(), "xi vs items");
  check_dims(items.omega.size(), data.n_items(), "omega vs items");
  check_dims(q_ability.rows(), data.n_items(), "ability loadings vs items");
  check_dims(q_speed.rows(), data.n_items(), "speed loadings vs items");
  check_dims(q_ability.cols(), persons.theta.cols(), "ability loadings vs theta");
  check_dims(q_speed.cols(), persons.tau.cols(), "speed loadings vs tau");
}

}  // namespace

double cell_log_likelihood(const ObservedData& data, const PersonParams& persons,
                           const ItemParams& items, const MatrixRef& q_ability,
                           const MatrixRef& q_speed, int n, int i) {
  double ll = 0.0;
  const double y = data.responses(n, i);
  if (!is_missing(y)) {
    const double eta = q_ability.row(i).dot(persons.theta.row(n)) + items.d(i);
    ll += bernoulli_log_mass(y, eta);
  }
  const double lt = data.log_rts(n, i);
  if (!is_missing(lt)) {
    ll += rt_log_density(lt, items.xi(i), q_speed.row(i).transpose(),
                         persons.tau.row(n).transpose(), items.omega(i));
  }
  return ll;
}

double joint_log_likelihood(const ObservedData& data, const PersonParams& persons,
                            const ItemParams& items, const MatrixRef& q_ability,
                            const MatrixRef& q_speed) {
  check_consistent(data, persons, items, q_ability, q_speed);
  double total = 0.0;
  for (int n = 0; n < data.n_persons(); ++n) {
    for (int i = 0; i < data.n_items(); ++i) {
      total += cell_log_likelihood(data, persons, items, q_ability, q_speed, n, i);
    }
  }
  return total;
}

double deviance(const ObservedData& data, const PersonParams& persons, const ItemParams& items,
                const MatrixRef& q_ability, const MatrixRef& q_speed) {
  return -2.0 * joint_log_likelihood(data, persons, items, q_ability, q_speed);
}

Loadings effective_q(ModelStructure structure, const QMatrix& q) {
  const Matrix ones = Matrix::Ones(q.n_items(), 1);
  switch (structure) {
    case ModelStructure::MA_MS: return {q.entries(), q.entries()};
    case ModelStructure::MA_US: return {q.entries(), ones};
    case ModelStructure::UA_US: return {ones, ones};
  }
  throw std::invalid_argument("unknown model structure");
}

int ability_dims(ModelStructure structure, const QMatrix& q) {
  return structure == ModelStructure::UA_US ? 1 : q.n_dims();
}

int speed_dims(ModelStructure structure, const QMatrix& q) {
  return structure == ModelStructure::MA_MS ? q.n_dims() : 1;
}

}  // namespace mlrt
