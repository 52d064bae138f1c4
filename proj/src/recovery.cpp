#include "mlrt/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <thread>

namespace mlrt {

namespace {

void require_nonempty(std::size_t n) {
  if (n == 0) throw std::invalid_argument("recovery statistics need at least one estimate");
}

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("estimates and truths differ in length");
}

}  // namespace

double bias(std::span<const double> estimates, double true_value) {
  require_nonempty(estimates.size());
  double total = 0.0;
  for (double e : estimates) total += e - true_value;
  return total / static_cast<double>(estimates.size());
}

double bias(std::span<const double> estimates, std::span<const double> truths) {
  require_nonempty(estimates.size());
  require_same_size(estimates.size(), truths.size());
  double total = 0.0;
  for (std::size_t r = 0; r < estimates.size(); ++r) total += estimates[r] - truths[r];
  return total / static_cast<double>(estimates.size());
}

double rmse(std::span<const double> estimates, double true_value) {
  require_nonempty(estimates.size());
  double total = 0.0;
  for (double e : estimates) total += (e - true_value) * (e - true_value);
  return std::sqrt(total / static_cast<double>(estimates.size()));
}

double rmse(std::span<const double> estimates, std::span<const double> truths) {
  require_nonempty(estimates.size());
  require_same_size(estimates.size(), truths.size());
  double total = 0.0;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    total += (estimates[r] - truths[r]) * (estimates[r] - truths[r]);
  }
  return std::sqrt(total / static_cast<double>(estimates.size()));
}

std::optional<double> cor(std::span<const double> estimates, std::span<const double> truths) {
  require_same_size(estimates.size(), truths.size());
  if (estimates.size() < 2) throw std::invalid_argument("correlation needs at least two pairs");
  const double n = static_cast<double>(estimates.size());
  double me = 0.0, mt = 0.0;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    me += estimates[j];
    mt += truths[j];
  }
  me /= n;
  mt /= n;
  double see = 0.0, stt = 0.0, set = 0.0;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const double a = estimates[j] - me;
    const double b = truths[j] - mt;
    see += a * a;
    stt += b * b;
    set += a * b;
  }
  if (see == 0.0 || stt == 0.0) return std::nullopt;
  return std::clamp(set / std::sqrt(see * stt), -1.0, 1.0);
}

const RecoveryRow* RecoveryReport::find(const std::string& family) const {
  for (const auto& row : rows) {
    if (row.family == family) return &row;
  }
  return nullptr;
}

namespace {

struct Pair {
  double estimate;
  double truth;
};

/// family -> member -> (estimate, truth) for every accepted replication.
using FamilyPairs = std::map<std::string, std::vector<std::vector<Pair>>>;

struct ReplicationResult {
  ReplicationOutcome outcome;
  // family name -> per-member pair for this replication, in family order
  std::vector<std::pair<std::string, std::vector<Pair>>> families;
};

std::string indexed(const std::string& name, int j, int k) {
  return name + "[" + std::to_string(j + 1) + "," + std::to_string(k + 1) + "]";
}

ReplicationResult run_one(const SimDesign& design, const SamplerConfig& fit_config,
                          const PriorSpec& priors, const RecoveryOptions& options,
                          std::uint64_t base_seed, int r) {
  Rng sim_rng(base_seed, static_cast<std::uint64_t>(r));
  const SimulatedDataset sim = simulate_dataset(design, sim_rng);
  const Loadings loadings = effective_q(design.structure, design.q);
  SamplerConfig config = fit_config;
  config.seed = mix_seed(base_seed, static_cast<std::uint64_t>(r));
  const PosteriorDraws draws = fit_model(sim.data, loadings, config, priors);
  const DrawLayout& layout = draws.layout;
  const std::vector<ParameterSummary> summary = summarize(draws);

  ReplicationResult out;
  out.outcome.replication = r;
  out.outcome.max_psrf = 0.0;
  for (const auto& s : summary) {
    if (s.name != "deviance" && !std::isnan(s.psrf)) {
      out.outcome.max_psrf = std::max(out.outcome.max_psrf, s.psrf);
    }
  }
  out.outcome.accepted = out.outcome.max_psrf < options.psrf_exclusion;
  out.outcome.criteria = information_criteria(
      draws, parameter_count(sim.data.n_items(), layout.k_star()), sim.data.n_persons());
  if (options.run_ppmc) {
    Rng ra_rng(config.seed, 1000);
    out.outcome.ppp_ra = ppmc_ra(draws, sim.data, loadings.ability, ra_rng, options.ppmc_stride);
    Rng rt_rng(config.seed, 1001);
    out.outcome.ppp_rt = ppmc_rt(draws, sim.data, loadings.speed, rt_rng, options.ppmc_stride);
  }

  auto mean_of = [&](int column) { return summary[column].mean; };
  auto add = [&](const std::string& family, std::vector<Pair> pairs) {
    out.families.emplace_back(family, std::move(pairs));
  };
  const int n_items = layout.n_items();
  const int n_persons = layout.n_persons();
  std::vector<Pair> d, xi, omega;
  for (int i = 0; i < n_items; ++i) {
    d.push_back({mean_of(layout.d(i)), sim.items.d(i)});
    xi.push_back({mean_of(layout.xi(i)), sim.items.xi(i)});
    omega.push_back({mean_of(layout.omega(i)), sim.items.omega(i)});
  }
  add("d", std::move(d));
  add("xi", std::move(xi));
  add("omega", std::move(omega));
  for (int k = 0; k < layout.k_theta(); ++k) {
    std::vector<Pair> theta;
    for (int n = 0; n < n_persons; ++n) {
      theta.push_back({mean_of(layout.theta(n, k)), sim.persons.theta(n, k)});
    }
    add("theta_" + std::to_string(k + 1), std::move(theta));
  }
  for (int k = 0; k < layout.k_tau(); ++k) {
    std::vector<Pair> tau;
    for (int n = 0; n < n_persons; ++n) {
      tau.push_back({mean_of(layout.tau(n, k)), sim.persons.tau(n, k)});
    }
    add("tau_" + std::to_string(k + 1), std::move(tau));
  }
  add("mu_d", {{mean_of(layout.mu_d()), design.mu_d}});
  add("mu_xi", {{mean_of(layout.mu_xi()), design.mu_xi}});
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k <= j; ++k) {
      add(indexed("sigma_item", j, k),
          {{mean_of(layout.sigma_item(j, k)), design.sigma_item(j, k)}});
    }
  }
  for (int j = 0; j < layout.k_star(); ++j) {
    for (int k = 0; k <= j; ++k) {
      add(indexed("sigma_person", j, k),
          {{mean_of(layout.sigma_person(j, k)), design.sigma_person(j, k)}});
    }
  }
  return out;
}

}  // namespace

RecoveryReport run_replications(const SimDesign& design, const SamplerConfig& fit_config,
                                int replications, std::uint64_t base_seed,
                                const PriorSpec& priors, const RecoveryOptions& options) {
  if (replications < 1) throw std::invalid_argument("recovery needs at least one replication");
  design.validate();
  fit_config.validate();
  unsigned parallel = options.max_parallel != 0 ? options.max_parallel
                                                : std::max(1u, std::thread::hardware_concurrency());

  std::vector<ReplicationResult> results(replications);
  for (int start = 1; start <= replications; start += static_cast<int>(parallel)) {
    const int stop = std::min(replications, start + static_cast<int>(parallel) - 1);
    std::vector<std::future<ReplicationResult>> batch;
    for (int r = start; r <= stop; ++r) {
      batch.push_back(std::async(std::launch::async, [&, r] {
        return run_one(design, fit_config, priors, options, base_seed, r);
      }));
    }
    for (int r = start; r <= stop; ++r) results[r - 1] = batch[r - start].get();
  }

  RecoveryReport report;
  report.replications = replications;
  std::vector<std::string> order;
  FamilyPairs pairs;
  for (const auto& res : results) {
    report.outcomes.push_back(res.outcome);
    if (!res.outcome.accepted) {
      ++report.excluded;
      continue;
    }
    for (const auto& [family, members] : res.families) {
      auto& slot = pairs[family];
      if (slot.empty()) {
        order.push_back(family);
        slot.resize(members.size());
      }
      for (std::size_t j = 0; j < members.size(); ++j) slot[j].push_back(members[j]);
    }
  }

  for (const auto& family : order) {
    const auto& members = pairs[family];
    RecoveryRow row;
    row.family = family;
    row.members = static_cast<int>(members.size());
    std::vector<double> all_est, all_truth;
    for (const auto& member : members) {
      std::vector<double> est, truth;
      for (const auto& p : member) {
        est.push_back(p.estimate);
        truth.push_back(p.truth);
      }
      const double b = bias(est, truth);
      row.bias += b;
      row.abs_bias += std::abs(b);
      row.rmse += rmse(est, truth);
      all_est.insert(all_est.end(), est.begin(), est.end());
      all_truth.insert(all_truth.end(), truth.begin(), truth.end());
    }
    row.bias /= static_cast<double>(members.size());
    row.abs_bias /= static_cast<double>(members.size());
    row.rmse /= static_cast<double>(members.size());
    if (all_est.size() >= 2) row.cor = cor(all_est, all_truth);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mlrt
