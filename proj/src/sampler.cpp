#include "mlrt/sampler.hpp"

#include <algorithm>
#include <future>
#include <numbers>
#include <sstream>

namespace mlrt {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<int> iota_indices(int from, int count) {
  std::vector<int> out(count);
  for (int j = 0; j < count; ++j) out[j] = from + j;
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1) throw std::invalid_argument("n_chains must be at least 1");
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be positive");
  if (n_burnin < 0 || n_burnin >= n_iterations) {
    throw std::invalid_argument("n_burnin must satisfy 0 <= n_burnin < n_iterations");
  }
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (!(initial_proposal_sd > 0.0)) {
    throw std::invalid_argument("initial_proposal_sd must be positive");
  }
  if (!(adapt_target > 0.0 && adapt_target < 1.0)) {
    throw std::invalid_argument("adapt_target must lie in (0, 1)");
  }
  if (adapt_window < 1) throw std::invalid_argument("adapt_window must be at least 1");
}

void PriorSpec::validate() const {
  if (!(r_person_scale > 0.0) || !(r_item_scale > 0.0)) {
    throw std::invalid_argument("inverse-Wishart scales must be positive");
  }
  if (!(df_item >= 2.0)) throw std::invalid_argument("df_item must be at least 2");
  if (!(omega_precision_shape > 0.0) || !(omega_precision_rate > 0.0)) {
    throw std::invalid_argument("omega prior shape and rate must be positive");
  }
  if (!(mu_d_var > 0.0) || !(mu_xi_var > 0.0)) {
    throw std::invalid_argument("hyperprior variances must be positive");
  }
}

void AcceptanceCounts::reset() {
  theta.setZero();
  d.setZero();
  steps = 0;
}

double AcceptanceCounts::theta_rate() const {
  return steps == 0 || theta.size() == 0 ? 0.0 : theta.mean() / steps;
}

double AcceptanceCounts::d_rate() const {
  return steps == 0 || d.size() == 0 ? 0.0 : d.mean() / steps;
}

struct GibbsSampler::PersonPrior {
  GaussianConditioner tau_given_theta;
  GaussianConditioner theta_given_tau;
};

struct GibbsSampler::ItemPrior {
  // d | xi and xi | d under N2((mu_d, mu_xi), Sigma_item).
  GaussianConditioner d_given_xi;
  GaussianConditioner xi_given_d;
  Vector mean;
};

GibbsSampler::GibbsSampler(const ObservedData& data, Loadings loadings, PriorSpec priors,
                           SamplerConfig config)
    : data_(data),
      loadings_(std::move(loadings)),
      priors_(priors),
      config_(config),
      k_theta_(static_cast<int>(loadings_.ability.cols())),
      k_tau_(static_cast<int>(loadings_.speed.cols())),
      layout_(data.n_persons(), data.n_items(), k_theta_, k_tau_) {
  config_.validate();
  priors_.validate();
  const int n_items = data.n_items();
  const int n_persons = data.n_persons();
  if (loadings_.ability.rows() != n_items || loadings_.speed.rows() != n_items) {
    throw std::invalid_argument("loading matrices do not match the number of items");
  }
  ability_dims_of_item_.resize(n_items);
  speed_dims_of_item_.resize(n_items);
  for (int i = 0; i < n_items; ++i) {
    for (int k = 0; k < k_theta_; ++k) {
      if (loadings_.ability(i, k) != 0.0) ability_dims_of_item_[i].push_back(k);
    }
    for (int k = 0; k < k_tau_; ++k) {
      if (loadings_.speed(i, k) != 0.0) speed_dims_of_item_[i].push_back(k);
    }
  }
  responses_by_person_.resize(n_persons);
  rts_by_person_.resize(n_persons);
  responses_by_item_.resize(n_items);
  rts_by_item_.resize(n_items);
  for (int n = 0; n < n_persons; ++n) {
    for (int i = 0; i < n_items; ++i) {
      const double y = data.responses(n, i);
      if (!is_missing(y)) {
        responses_by_person_[n].push_back({i, y});
        responses_by_item_[i].push_back({n, y});
      }
      const double lt = data.log_rts(n, i);
      if (!is_missing(lt)) {
        rts_by_person_[n].push_back({i, lt});
        rts_by_item_[i].push_back({n, lt});
      }
    }
  }
}

ChainState GibbsSampler::initialize_state(Rng& rng) const {
  const int n_persons = data_.n_persons();
  const int n_items = data_.n_items();
  ChainState state;
  state.persons.theta.resize(n_persons, k_theta_);
  state.persons.tau.resize(n_persons, k_tau_);
  for (int n = 0; n < n_persons; ++n) {
    for (int k = 0; k < k_theta_; ++k) state.persons.theta(n, k) = 0.5 * rng.normal();
    for (int k = 0; k < k_tau_; ++k) state.persons.tau(n, k) = 0.5 * rng.normal();
  }
  state.persons.sigma_person = Matrix::Identity(k_theta_ + k_tau_, k_theta_ + k_tau_);

  ItemParams& items = state.items;
  items.d.resize(n_items);
  items.xi.resize(n_items);
  items.omega.resize(n_items);
  items.mu_d = priors_.mu_d_mean;
  items.mu_xi = priors_.mu_xi_mean;
  items.sigma_item = Matrix::Identity(2, 2);
  for (int i = 0; i < n_items; ++i) {
    const auto& ys = responses_by_item_[i];
    if (ys.empty()) {
      items.d(i) = priors_.mu_d_mean;
    } else {
      double correct = 0.0;
      for (const auto& o : ys) correct += o.value;
      const double p = correct / static_cast<double>(ys.size());
      items.d(i) = p <= 0.0 ? -4.0 : p >= 1.0 ? 4.0 : std::clamp(logit(p), -4.0, 4.0);
    }
    const auto& ts = rts_by_item_[i];
    if (ts.empty()) {
      items.xi(i) = priors_.mu_xi_mean;
      items.omega(i) = 1.0;
      continue;
    }
    double sum = 0.0;
    for (const auto& o : ts) sum += o.value;
    const double mean = sum / static_cast<double>(ts.size());
    items.xi(i) = mean;
    if (ts.size() < 2) {
      items.omega(i) = 1.0;
    } else {
      double ss = 0.0;
      for (const auto& o : ts) ss += (o.value - mean) * (o.value - mean);
      const double sd = std::sqrt(ss / static_cast<double>(ts.size() - 1));
      items.omega(i) = sd > 0.0 ? std::clamp(1.0 / sd, 0.2, 10.0) : 10.0;
    }
  }

  state.theta_proposal_sd = Matrix::Constant(n_persons, k_theta_, config_.initial_proposal_sd);
  state.d_proposal_sd = Vector::Constant(n_items, config_.initial_proposal_sd);
  for (AcceptanceCounts* c : {&state.window, &state.retained}) {
    c->theta = Matrix::Zero(n_persons, k_theta_);
    c->d = Vector::Zero(n_items);
    c->steps = 0;
  }
  return state;
}

GibbsSampler::PersonPrior GibbsSampler::person_prior(const ChainState& state) const {
  return {GaussianConditioner(state.persons.sigma_person, iota_indices(0, k_theta_)),
          GaussianConditioner(state.persons.sigma_person, iota_indices(k_theta_, k_tau_))};
}

GibbsSampler::ItemPrior GibbsSampler::item_prior(const ChainState& state) const {
  Vector mean(2);
  mean << state.items.mu_d, state.items.mu_xi;
  return {GaussianConditioner(state.items.sigma_item, {1}),
          GaussianConditioner(state.items.sigma_item, {0}), mean};
}

// ---- tau: exact normal full conditional ---------------------------------

void GibbsSampler::tau_canonical(int n, const ChainState& state, const PersonPrior& prior,
                                 Matrix& precision, Vector& info) const {
  const auto& cond = prior.tau_given_theta;
  precision = cond.conditional_precision();
  info = precision * cond.conditional_mean(state.persons.theta.row(n).transpose());
  for (const auto& o : rts_by_person_[n]) {
    const double w = state.items.omega(o.index) * state.items.omega(o.index);
    const double r = state.items.xi(o.index) - o.value;
    const auto& dims = speed_dims_of_item_[o.index];
    for (int a : dims) {
      info(a) += w * r;
      for (int b : dims) precision(a, b) += w;
    }
  }
}

NormalConditional GibbsSampler::tau_conditional(int n, const ChainState& state,
                                                const PersonPrior& prior) const {
  Matrix precision;
  Vector info;
  tau_canonical(n, state, prior, precision, info);
  NormalConditional out;
  out.cov = spd_inverse(precision);
  out.mean = out.cov * info;
  return out;
}

NormalConditional GibbsSampler::tau_conditional(int n, const ChainState& state) const {
  return tau_conditional(n, state, person_prior(state));
}

Vector GibbsSampler::draw_tau(int n, const ChainState& state, const PersonPrior& prior,
                              Rng& rng) const {
  Matrix precision;
  Vector info;
  tau_canonical(n, state, prior, precision, info);
  return mvn_sample_precision(info, precision, rng);
}

Vector GibbsSampler::update_tau(int n, const ChainState& state, Rng& rng) const {
  return draw_tau(n, state, person_prior(state), rng);
}

// ---- theta: componentwise random-walk Metropolis ------------------------

double GibbsSampler::theta_log_target(int n, const VectorRef& theta,
                                      const ChainState& state) const {
  const PersonPrior prior = person_prior(state);
  const auto& cond = prior.theta_given_tau;
  const Vector resid = theta - cond.conditional_mean(state.persons.tau.row(n).transpose());
  double lp = -0.5 * resid.dot(cond.conditional_precision() * resid);
  for (const auto& o : responses_by_person_[n]) {
    double eta = state.items.d(o.index);
    for (int a : ability_dims_of_item_[o.index]) eta += theta(a);
    lp += bernoulli_log_mass(o.value, eta);
  }
  return lp;
}

Vector GibbsSampler::draw_theta(int n, ChainState& state, const PersonPrior& prior,
                                Rng& rng) const {
  const auto& cond = prior.theta_given_tau;
  const Matrix& precision = cond.conditional_precision();
  Vector theta = state.persons.theta.row(n).transpose();
  Vector resid = theta - cond.conditional_mean(state.persons.tau.row(n).transpose());

  const auto& obs = responses_by_person_[n];
  std::vector<double> eta(obs.size());
  for (std::size_t j = 0; j < obs.size(); ++j) {
    eta[j] = state.items.d(obs[j].index);
    for (int a : ability_dims_of_item_[obs[j].index]) eta[j] += theta(a);
  }

  for (int k = 0; k < k_theta_; ++k) {
    const double sd = state.theta_proposal_sd(n, k);
    if (!(sd > 0.0)) throw std::invalid_argument("degenerate theta proposal sd");
    const double step = sd * rng.normal();
    double delta = -(step * precision.row(k).dot(resid) + 0.5 * step * step * precision(k, k));
    for (std::size_t j = 0; j < obs.size(); ++j) {
      if (loadings_.ability(obs[j].index, k) == 0.0) continue;
      delta += bernoulli_log_mass(obs[j].value, eta[j] + step) -
               bernoulli_log_mass(obs[j].value, eta[j]);
    }
    if (std::log(rng.uniform()) < delta) {
      theta(k) += step;
      resid(k) += step;
      for (std::size_t j = 0; j < obs.size(); ++j) {
        if (loadings_.ability(obs[j].index, k) != 0.0) eta[j] += step;
      }
      state.window.theta(n, k) += 1.0;
      state.retained.theta(n, k) += 1.0;
    }
  }
  return theta;
}

Vector GibbsSampler::update_theta(int n, ChainState& state, Rng& rng) const {
  return draw_theta(n, state, person_prior(state), rng);
}

// ---- xi: exact normal full conditional ----------------------------------

NormalConditional GibbsSampler::xi_conditional(int i, const ChainState& state,
                                               const ItemPrior& prior) const {
  Vector d_val(1);
  d_val << state.items.d(i);
  const double m = prior.xi_given_d.conditional_mean(prior.mean, d_val)(0);
  const double v = prior.xi_given_d.conditional_cov()(0, 0);
  const double w = state.items.omega(i) * state.items.omega(i);
  double sum_z = 0.0;
  const auto& dims = speed_dims_of_item_[i];
  for (const auto& o : rts_by_item_[i]) {
    double z = o.value;
    for (int a : dims) z += state.persons.tau(o.index, a);
    sum_z += z;
  }
  const double precision = 1.0 / v + static_cast<double>(rts_by_item_[i].size()) * w;
  NormalConditional out;
  out.mean = Vector::Constant(1, (m / v + w * sum_z) / precision);
  out.cov = Matrix::Constant(1, 1, 1.0 / precision);
  return out;
}

NormalConditional GibbsSampler::xi_conditional(int i, const ChainState& state) const {
  return xi_conditional(i, state, item_prior(state));
}

double GibbsSampler::update_xi(int i, const ChainState& state, Rng& rng) const {
  const NormalConditional c = xi_conditional(i, state);
  return c.mean(0) + std::sqrt(c.cov(0, 0)) * rng.normal();
}

// ---- d: random-walk Metropolis ------------------------------------------

double GibbsSampler::d_log_target(int i, double d, const ChainState& state) const {
  const ItemPrior prior = item_prior(state);
  Vector xi_val(1);
  xi_val << state.items.xi(i);
  const double m = prior.d_given_xi.conditional_mean(prior.mean, xi_val)(0);
  const double v = prior.d_given_xi.conditional_cov()(0, 0);
  double lp = -0.5 * (d - m) * (d - m) / v;
  const auto& dims = ability_dims_of_item_[i];
  for (const auto& o : responses_by_item_[i]) {
    double eta = d;
    for (int a : dims) eta += state.persons.theta(o.index, a);
    lp += bernoulli_log_mass(o.value, eta);
  }
  return lp;
}

double GibbsSampler::draw_d(int i, ChainState& state, const ItemPrior& prior, Rng& rng) const {
  const double sd = state.d_proposal_sd(i);
  if (!(sd > 0.0)) throw std::invalid_argument("degenerate d proposal sd");
  Vector xi_val(1);
  xi_val << state.items.xi(i);
  const double m = prior.d_given_xi.conditional_mean(prior.mean, xi_val)(0);
  const double v = prior.d_given_xi.conditional_cov()(0, 0);
  const double current = state.items.d(i);
  const double proposal = current + sd * rng.normal();
  double delta = -0.5 * ((proposal - m) * (proposal - m) - (current - m) * (current - m)) / v;
  const auto& dims = ability_dims_of_item_[i];
  for (const auto& o : responses_by_item_[i]) {
    double base = 0.0;
    for (int a : dims) base += state.persons.theta(o.index, a);
    delta += bernoulli_log_mass(o.value, base + proposal) -
             bernoulli_log_mass(o.value, base + current);
  }
  if (std::log(rng.uniform()) < delta) {
    state.window.d(i) += 1.0;
    state.retained.d(i) += 1.0;
    return proposal;
  }
  return current;
}

double GibbsSampler::update_d(int i, ChainState& state, Rng& rng) const {
  return draw_d(i, state, item_prior(state), rng);
}

// ---- omega: exact gamma draw of the precision ---------------------------

GammaConditional GibbsSampler::omega_precision_conditional(int i, const ChainState& state) const {
  double sse = 0.0;
  const auto& dims = speed_dims_of_item_[i];
  for (const auto& o : rts_by_item_[i]) {
    double r = o.value - state.items.xi(i);
    for (int a : dims) r += state.persons.tau(o.index, a);
    sse += r * r;
  }
  const double n_obs = static_cast<double>(rts_by_item_[i].size());
  return {priors_.omega_precision_shape + 0.5 * n_obs, priors_.omega_precision_rate + 0.5 * sse};
}

double GibbsSampler::update_omega(int i, const ChainState& state, Rng& rng) const {
  const GammaConditional c = omega_precision_conditional(i, state);
  return std::sqrt(gamma_sample(c.shape, c.rate, rng));
}

// ---- covariance layers --------------------------------------------------

InvWishartConditional GibbsSampler::sigma_person_conditional(const ChainState& state) const {
  const int k_star = k_theta_ + k_tau_;
  Matrix scale = priors_.r_person_scale * Matrix::Identity(k_star, k_star);
  Vector omega_n(k_star);
  for (int n = 0; n < state.persons.n_persons(); ++n) {
    omega_n << state.persons.theta.row(n).transpose(), state.persons.tau.row(n).transpose();
    scale.selfadjointView<Eigen::Lower>().rankUpdate(omega_n);
  }
  scale = scale.selfadjointView<Eigen::Lower>();
  return {scale, priors_.person_df(k_star) + state.persons.n_persons()};
}

Matrix GibbsSampler::update_sigma_person(const ChainState& state, Rng& rng) const {
  const InvWishartConditional c = sigma_person_conditional(state);
  return invwishart_sample(c.scale, c.df, rng);
}

NormalConditional GibbsSampler::item_mean_conditional(const ChainState& state) const {
  const int n_items = state.items.n_items();
  const Matrix sigma_inv = spd_inverse(state.items.sigma_item);
  Matrix precision = Matrix::Zero(2, 2);
  precision(0, 0) = 1.0 / priors_.mu_d_var;
  precision(1, 1) = 1.0 / priors_.mu_xi_var;
  Vector info(2);
  info << priors_.mu_d_mean / priors_.mu_d_var, priors_.mu_xi_mean / priors_.mu_xi_var;
  precision += static_cast<double>(n_items) * sigma_inv;
  Vector psi_sum(2);
  psi_sum << state.items.d.sum(), state.items.xi.sum();
  info += sigma_inv * psi_sum;
  NormalConditional out;
  out.cov = spd_inverse(precision);
  out.mean = out.cov * info;
  return out;
}

InvWishartConditional GibbsSampler::sigma_item_conditional(const ChainState& state, double mu_d,
                                                           double mu_xi) const {
  Matrix scale = priors_.r_item_scale * Matrix::Identity(2, 2);
  for (int i = 0; i < state.items.n_items(); ++i) {
    const double a = state.items.d(i) - mu_d;
    const double b = state.items.xi(i) - mu_xi;
    scale(0, 0) += a * a;
    scale(0, 1) += a * b;
    scale(1, 1) += b * b;
  }
  scale(1, 0) = scale(0, 1);
  return {scale, priors_.df_item + state.items.n_items()};
}

void GibbsSampler::update_item_hyper(ChainState& state, Rng& rng) const {
  const NormalConditional mu = item_mean_conditional(state);
  const Vector draw = mvn_sample(mu.mean, mu.cov, rng);
  state.items.mu_d = draw(0);
  state.items.mu_xi = draw(1);
  const InvWishartConditional c = sigma_item_conditional(state, draw(0), draw(1));
  state.items.sigma_item = invwishart_sample(c.scale, c.df, rng);
}

// ---- full cycle ---------------------------------------------------------

void GibbsSampler::adapt_proposals(ChainState& state) const {
  const double window = static_cast<double>(state.window.steps);
  if (window <= 0.0) return;
  const int batch = state.iteration / config_.adapt_window;
  const double gain = 1.0 / std::sqrt(static_cast<double>(std::max(batch, 1)));
  auto tune = [&](double& sd, double accepted) {
    const double rate = accepted / window;
    sd = std::clamp(sd * std::exp(gain * (rate - config_.adapt_target)), 1e-3, 20.0);
  };
  for (Eigen::Index n = 0; n < state.theta_proposal_sd.rows(); ++n) {
    for (Eigen::Index k = 0; k < state.theta_proposal_sd.cols(); ++k) {
      tune(state.theta_proposal_sd(n, k), state.window.theta(n, k));
    }
  }
  for (Eigen::Index i = 0; i < state.d_proposal_sd.size(); ++i) {
    tune(state.d_proposal_sd(i), state.window.d(i));
  }
  state.window.reset();
}

void GibbsSampler::iterate(ChainState& state, Rng& rng) const {
  const int n_persons = data_.n_persons();
  const int n_items = data_.n_items();

  const PersonPrior pp = person_prior(state);
  for (int n = 0; n < n_persons; ++n) {
    state.persons.tau.row(n) = draw_tau(n, state, pp, rng).transpose();
  }
  for (int n = 0; n < n_persons; ++n) {
    state.persons.theta.row(n) = draw_theta(n, state, pp, rng).transpose();
  }

  const ItemPrior ip = item_prior(state);
  for (int i = 0; i < n_items; ++i) {
    const NormalConditional c = xi_conditional(i, state, ip);
    state.items.xi(i) = c.mean(0) + std::sqrt(c.cov(0, 0)) * rng.normal();
  }
  for (int i = 0; i < n_items; ++i) state.items.d(i) = draw_d(i, state, ip, rng);
  for (int i = 0; i < n_items; ++i) state.items.omega(i) = update_omega(i, state, rng);

  state.persons.sigma_person = update_sigma_person(state, rng);
  update_item_hyper(state, rng);

  ++state.window.steps;
  ++state.retained.steps;
  ++state.iteration;
  if (state.iteration <= config_.n_burnin && state.iteration % config_.adapt_window == 0) {
    adapt_proposals(state);
  }
  if (state.iteration == config_.n_burnin) {
    state.window.reset();
    state.retained.reset();
  }
}

double GibbsSampler::state_deviance(const ChainState& state) const {
  double ll = 0.0;
  const double* omega = state.items.omega.data();
  for (int n = 0; n < data_.n_persons(); ++n) {
    for (const auto& o : responses_by_person_[n]) {
      double eta = state.items.d(o.index);
      for (int a : ability_dims_of_item_[o.index]) eta += state.persons.theta(n, a);
      ll += bernoulli_log_mass(o.value, eta);
    }
    for (const auto& o : rts_by_person_[n]) {
      double mean = state.items.xi(o.index);
      for (int a : speed_dims_of_item_[o.index]) mean -= state.persons.tau(n, a);
      const double z = omega[o.index] * (o.value - mean);
      ll += -0.5 * z * z + std::log(omega[o.index]) - kHalfLog2Pi;
    }
  }
  if (std::isfinite(ll)) return -2.0 * ll;
  for (int n = 0; n < data_.n_persons(); ++n) {
    for (int i = 0; i < data_.n_items(); ++i) {
      const double cell = cell_log_likelihood(data_, state.persons, state.items,
                                              loadings_.ability, loadings_.speed, n, i);
      if (!std::isfinite(cell)) {
        std::ostringstream msg;
        msg << "non-finite log-likelihood at person " << n + 1 << ", item " << i + 1
            << " (iteration " << state.iteration << ")";
        throw NumericalError(msg.str());
      }
    }
  }
  throw NumericalError("non-finite log-likelihood");
}

ChainResult GibbsSampler::run_chain(int chain_index) const {
  Rng rng(config_.seed, static_cast<std::uint64_t>(chain_index));
  ChainState state = initialize_state(rng);
  ChainResult result;
  result.draws.resize(config_.retained_per_chain(), layout_.size());
  int row = 0;
  for (int t = 1; t <= config_.n_iterations; ++t) {
    iterate(state, rng);
    const int post = t - config_.n_burnin;
    if (post > 0 && post % config_.thin == 0 && row < result.draws.rows()) {
      Vector packed(layout_.size());
      layout_.pack(state.persons, state.items, state_deviance(state), packed);
      result.draws.row(row++) = packed.transpose();
    }
  }
  result.theta_acceptance = state.retained.theta_rate();
  result.d_acceptance = state.retained.d_rate();
  return result;
}

PosteriorDraws fit_model(const ObservedData& data, const Loadings& loadings,
                         const SamplerConfig& config, const PriorSpec& priors,
                         std::vector<ChainResult>* chain_stats) {
  const GibbsSampler sampler(data, loadings, priors, config);
  std::vector<std::future<ChainResult>> running;
  running.reserve(config.n_chains);
  for (int c = 0; c < config.n_chains; ++c) {
    running.push_back(std::async(std::launch::async, [&sampler, c] { return sampler.run_chain(c); }));
  }
  PosteriorDraws draws;
  draws.layout = sampler.layout();
  std::vector<ChainResult> results;
  for (auto& f : running) results.push_back(f.get());
  for (auto& r : results) draws.chains.push_back(r.draws);
  if (chain_stats != nullptr) *chain_stats = std::move(results);
  return draws;
}

}  // namespace mlrt
