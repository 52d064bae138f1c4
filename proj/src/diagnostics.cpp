#include "mlrt/diagnostics.hpp"

#include <limits>

namespace mlrt {

std::pair<double, double> mean_sd(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_sd of an empty sequence");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

double psrf(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("psrf needs at least two chains");
  const Eigen::Index length = chains.front().size();
  if (length < 2) throw std::invalid_argument("psrf needs chains of length >= 2");
  for (const auto& c : chains) {
    if (c.size() != length) throw std::invalid_argument("psrf chains must have equal length");
  }
  const double m = static_cast<double>(chains.size());
  const double l = static_cast<double>(length);
  Vector means(chains.size());
  double within = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means(c) = chains[c].mean();
    within += (chains[c].array() - means(c)).square().sum() / (l - 1.0);
  }
  within /= m;
  const double between_over_l = (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (within == 0.0) {
    return between_over_l > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return std::sqrt(((l - 1.0) / l * within + between_over_l) / within);
}

double ppp_from_discrepancies(std::span<const double> realized,
                              std::span<const double> replicated) {
  if (realized.size() != replicated.size() || realized.empty()) {
    throw std::invalid_argument("ppp needs equally many realized and replicated discrepancies");
  }
  std::size_t count = 0;
  for (std::size_t j = 0; j < realized.size(); ++j) {
    if (replicated[j] >= realized[j]) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(realized.size());
}

double ra_discrepancy(const MatrixRef& responses, const ObservedData& data,
                      const PersonParams& persons, const ItemParams& items,
                      const MatrixRef& q_ability) {
  double total = 0.0;
  for (int n = 0; n < data.n_persons(); ++n) {
    for (int i = 0; i < data.n_items(); ++i) {
      if (is_missing(data.responses(n, i))) continue;
      const double p = success_prob(persons.theta.row(n).transpose(),
                                    q_ability.row(i).transpose(), items.d(i));
      const double r = (responses(n, i) - p) / std::sqrt(p * (1.0 - p));
      total += r * r;
    }
  }
  return total;
}

double rt_discrepancy(const MatrixRef& log_rts, const ObservedData& data,
                      const PersonParams& persons, const ItemParams& items,
                      const MatrixRef& q_speed) {
  double total = 0.0;
  for (int n = 0; n < data.n_persons(); ++n) {
    for (int i = 0; i < data.n_items(); ++i) {
      if (is_missing(data.log_rts(n, i))) continue;
      const double mean =
          rt_mean(items.xi(i), q_speed.row(i).transpose(), persons.tau.row(n).transpose());
      const double z = items.omega(i) * (log_rts(n, i) - mean);
      total += z * z;
    }
  }
  return total;
}

std::vector<int> ppmc_draw_indices(const PosteriorDraws& draws, int stride) {
  if (stride < 1) throw std::invalid_argument("PPMC stride must be at least 1");
  std::vector<int> out;
  for (int j = 0; j < draws.total_draws(); j += stride) out.push_back(j);
  if (out.empty()) throw std::invalid_argument("PPMC needs at least one retained draw");
  return out;
}

double ppmc_ra(const PosteriorDraws& draws, const ObservedData& data, const MatrixRef& q_ability,
               Rng& rng, int stride) {
  std::vector<double> realized;
  std::vector<double> replicated;
  Matrix y_rep = data.responses;
  for (int j : ppmc_draw_indices(draws, stride)) {
    const auto [persons, items] = draws.layout.unpack(draws.pooled_row(j));
    for (int n = 0; n < data.n_persons(); ++n) {
      for (int i = 0; i < data.n_items(); ++i) {
        if (is_missing(data.responses(n, i))) continue;
        const double p = success_prob(persons.theta.row(n).transpose(),
                                      q_ability.row(i).transpose(), items.d(i));
        y_rep(n, i) = rng.uniform() < p ? 1.0 : 0.0;
      }
    }
    realized.push_back(ra_discrepancy(data.responses, data, persons, items, q_ability));
    replicated.push_back(ra_discrepancy(y_rep, data, persons, items, q_ability));
  }
  return ppp_from_discrepancies(realized, replicated);
}

double ppmc_rt(const PosteriorDraws& draws, const ObservedData& data, const MatrixRef& q_speed,
               Rng& rng, int stride) {
  std::vector<double> realized;
  std::vector<double> replicated;
  Matrix t_rep = data.log_rts;
  for (int j : ppmc_draw_indices(draws, stride)) {
    const auto [persons, items] = draws.layout.unpack(draws.pooled_row(j));
    for (int n = 0; n < data.n_persons(); ++n) {
      for (int i = 0; i < data.n_items(); ++i) {
        if (is_missing(data.log_rts(n, i))) continue;
        const double mean =
            rt_mean(items.xi(i), q_speed.row(i).transpose(), persons.tau.row(n).transpose());
        t_rep(n, i) = mean + rng.normal() / items.omega(i);
      }
    }
    realized.push_back(rt_discrepancy(data.log_rts, data, persons, items, q_speed));
    replicated.push_back(rt_discrepancy(t_rep, data, persons, items, q_speed));
  }
  return ppp_from_discrepancies(realized, replicated);
}

int parameter_count(int n_items, int k_star) {
  return 3 * n_items + 2 + 3 + k_star * (k_star + 1) / 2;
}

InformationCriteria information_criteria(std::span<const double> deviances, double p,
                                         double n_persons) {
  if (deviances.size() < 2) {
    throw std::invalid_argument("information criteria need at least two retained draws");
  }
  if (!(n_persons > 0.0)) throw std::invalid_argument("information criteria need N > 0");
  const auto [mean, sd] = mean_sd(deviances);
  InformationCriteria ic{};
  ic.mean_deviance = mean;
  ic.p_e = 0.5 * sd * sd;
  ic.p = p;
  ic.dic = mean + ic.p_e;
  ic.aic = mean + p;
  ic.bic = mean + (std::log(n_persons) - 1.0) * p;
  return ic;
}

InformationCriteria information_criteria(const PosteriorDraws& draws, double p, double n_persons) {
  const Vector dev = draws.pooled(draws.layout.deviance());
  return information_criteria(std::span<const double>(dev.data(), dev.size()), p, n_persons);
}

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws) {
  if (draws.total_draws() == 0) throw std::invalid_argument("summarize needs draws");
  std::vector<ParameterSummary> out;
  out.reserve(draws.layout.size());
  const bool can_psrf = draws.n_chains() >= 2 && draws.draws_per_chain() >= 2;
  for (int c = 0; c < draws.layout.size(); ++c) {
    const Vector pooled = draws.pooled(c);
    const auto [mean, sd] = mean_sd(std::span<const double>(pooled.data(), pooled.size()));
    const double r = can_psrf ? psrf(draws.per_chain(c)) : std::numeric_limits<double>::quiet_NaN();
    out.push_back({draws.layout.names()[c], mean, sd, r});
  }
  return out;
}

double FitSummary::max_psrf() const {
  double worst = 0.0;
  for (const auto& p : parameters) {
    if (p.name == "deviance" || std::isnan(p.psrf)) continue;
    worst = std::max(worst, p.psrf);
  }
  return worst;
}

FitSummary summarize_fit(const PosteriorDraws& draws, const ObservedData& data,
                         const Loadings& loadings, const PpmcOptions& ppmc) {
  FitSummary summary;
  summary.parameters = summarize(draws);
  Rng ra_rng(ppmc.seed, 1000);
  summary.ppp_ra = ppmc_ra(draws, data, loadings.ability, ra_rng, ppmc.stride);
  Rng rt_rng(ppmc.seed, 1001);
  summary.ppp_rt = ppmc_rt(draws, data, loadings.speed, rt_rng, ppmc.stride);
  const int p = parameter_count(data.n_items(), draws.layout.k_star());
  summary.criteria = information_criteria(draws, p, data.n_persons());
  return summary;
}

}  // namespace mlrt
