#include "mlrt/commands.hpp"

#include <cstdio>
#include <ostream>

namespace mlrt {

using io::json;

Command parse_command(std::string_view name) {
  if (name == "simulate") return Command::Simulate;
  if (name == "fit") return Command::Fit;
  if (name == "compare") return Command::Compare;
  if (name == "recover") return Command::Recover;
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Fit: return "fit";
    case Command::Compare: return "compare";
    case Command::Recover: return "recover";
  }
  return "?";
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.is_object() || !doc.contains(key)) return empty;
  const json& s = doc.at(key);
  if (!s.is_object()) throw std::invalid_argument(std::string("config section '") + key +
                                                  "' must be an object");
  return s;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(what) + " must be a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols) {
      throw std::invalid_argument(std::string(what) + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Vector variances_from_json(const json& j, const char* key, int size, double fallback) {
  if (!j.contains(key)) return Vector::Constant(size, fallback);
  const json& v = j.at(key);
  if (v.is_number()) return Vector::Constant(size, v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != size) {
    throw std::invalid_argument(std::string("design.") + key + " must be a number or an array of " +
                                std::to_string(size));
  }
  Vector out(size);
  for (int k = 0; k < size; ++k) out(k) = v.at(k).get<double>();
  return out;
}

SimDesign parse_design(const json& d, ModelStructure structure) {
  SimDesign design = default_design(structure);
  design.n_persons = get_or(d, "n_persons", design.n_persons);
  if (d.contains("qmatrix")) {
    design.q = io::load_qmatrix(d.at("qmatrix").get<std::string>());
  } else {
    const int n_items = get_or(d, "n_items", 20);
    const int n_dims = get_or(d, "n_dims", 2);
    design.q = QMatrix::simple_structure(n_items, n_dims);
  }
  if (d.contains("sigma_person")) {
    design.sigma_person = matrix_from_json(d.at("sigma_person"), "design.sigma_person");
  } else {
    design.sigma_person = block_person_covariance(
        variances_from_json(d, "ability_variances", design.k_theta(), 1.0),
        variances_from_json(d, "speed_variances", design.k_tau(), 0.3),
        get_or(d, "ability_corr", 0.7), get_or(d, "speed_corr", 0.7),
        get_or(d, "cross_corr", -0.3));
  }
  design.mu_d = get_or(d, "mu_d", design.mu_d);
  design.mu_xi = get_or(d, "mu_xi", design.mu_xi);
  if (d.contains("sigma_item")) {
    design.sigma_item = matrix_from_json(d.at("sigma_item"), "design.sigma_item");
  }
  if (d.contains("omega")) {
    const json& o = d.at("omega");
    if (o.is_number()) {
      design.omega_mode = OmegaConstant{o.get<double>()};
    } else if (o.contains("constant")) {
      design.omega_mode = OmegaConstant{o.at("constant").get<double>()};
    } else if (o.contains("lognormal")) {
      const json& l = o.at("lognormal");
      design.omega_mode = OmegaLogNormal{get_or(l, "mean", 0.0), get_or(l, "sd", 0.25)};
    } else {
      throw std::invalid_argument("design.omega must be a number, {constant} or {lognormal}");
    }
  }
  design.missing_rate = get_or(d, "missing_rate", design.missing_rate);
  return design;
}

json design_to_json(const SimDesign& design) {
  json j;
  j["n_persons"] = design.n_persons;
  j["structure"] = std::string(to_string(design.structure));
  j["qmatrix"] = matrix_to_json(design.q.entries());
  j["sigma_person"] = matrix_to_json(design.sigma_person);
  j["mu_d"] = design.mu_d;
  j["mu_xi"] = design.mu_xi;
  j["sigma_item"] = matrix_to_json(design.sigma_item);
  if (const auto* c = std::get_if<OmegaConstant>(&design.omega_mode)) {
    j["omega"] = {{"constant", c->value}};
  } else {
    const auto& l = std::get<OmegaLogNormal>(design.omega_mode);
    j["omega"] = {{"lognormal", {{"mean", l.mean}, {"sd", l.sd}}}};
  }
  j["missing_rate"] = design.missing_rate;
  return j;
}

json sampler_to_json(const SamplerConfig& s, int ppmc_stride) {
  return {{"n_chains", s.n_chains},
          {"n_iterations", s.n_iterations},
          {"n_burnin", s.n_burnin},
          {"thin", s.thin},
          {"initial_proposal_sd", s.initial_proposal_sd},
          {"adapt_target", s.adapt_target},
          {"adapt_window", s.adapt_window},
          {"ppmc_stride", ppmc_stride}};
}

json priors_to_json(const PriorSpec& p) {
  return {{"r_person_scale", p.r_person_scale},
          {"df_person", p.df_person ? json(*p.df_person) : json(nullptr)},
          {"r_item_scale", p.r_item_scale},
          {"df_item", p.df_item},
          {"omega_precision_shape", p.omega_precision_shape},
          {"omega_precision_rate", p.omega_precision_rate},
          {"mu_d_mean", p.mu_d_mean},
          {"mu_d_var", p.mu_d_var},
          {"mu_xi_mean", p.mu_xi_mean},
          {"mu_xi_var", p.mu_xi_var}};
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &document;
  std::string::size_type start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw std::invalid_argument("override key '" + key + "' has an empty part");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig parse_run_config(Command command, const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  RunConfig config;
  config.command = command;
  config.structure = parse_structure(get_or<std::string>(doc, "structure", "MA_MS"));
  config.output_dir = get_or<std::string>(doc, "output_dir", "out");
  config.replications = get_or(doc, "replications", config.replications);
  if (doc.contains("structures")) {
    config.compare_structures.clear();
    for (const auto& s : doc.at("structures")) {
      config.compare_structures.push_back(parse_structure(s.get<std::string>()));
    }
  }

  const json& data = section(doc, "data");
  config.responses = get_or<std::string>(data, "responses", "");
  config.rts = get_or<std::string>(data, "rts", "");
  config.qmatrix = get_or<std::string>(data, "qmatrix", "");

  SamplerConfig& s = config.sampler;
  const json& sj = section(doc, "sampler");
  s.seed = get_or<std::uint64_t>(doc, "seed", s.seed);
  s.n_chains = get_or(sj, "n_chains", s.n_chains);
  s.n_iterations = get_or(sj, "n_iterations", s.n_iterations);
  s.n_burnin = get_or(sj, "n_burnin", s.n_burnin);
  s.thin = get_or(sj, "thin", s.thin);
  s.initial_proposal_sd = get_or(sj, "initial_proposal_sd", s.initial_proposal_sd);
  s.adapt_target = get_or(sj, "adapt_target", s.adapt_target);
  s.adapt_window = get_or(sj, "adapt_window", s.adapt_window);
  config.ppmc_stride = get_or(sj, "ppmc_stride", config.ppmc_stride);

  PriorSpec& p = config.priors;
  const json& pj = section(doc, "priors");
  p.r_person_scale = get_or(pj, "r_person_scale", p.r_person_scale);
  if (pj.contains("df_person") && !pj.at("df_person").is_null()) {
    p.df_person = pj.at("df_person").get<double>();
  }
  p.r_item_scale = get_or(pj, "r_item_scale", p.r_item_scale);
  p.df_item = get_or(pj, "df_item", p.df_item);
  p.omega_precision_shape = get_or(pj, "omega_precision_shape", p.omega_precision_shape);
  p.omega_precision_rate = get_or(pj, "omega_precision_rate", p.omega_precision_rate);
  p.mu_d_mean = get_or(pj, "mu_d_mean", p.mu_d_mean);
  p.mu_d_var = get_or(pj, "mu_d_var", p.mu_d_var);
  p.mu_xi_mean = get_or(pj, "mu_xi_mean", p.mu_xi_mean);
  p.mu_xi_var = get_or(pj, "mu_xi_var", p.mu_xi_var);

  if (command == Command::Simulate || command == Command::Recover) {
    config.design = parse_design(section(doc, "design"), config.structure);
  }

  json normalized;
  normalized["command"] = std::string(to_string(command));
  normalized["seed"] = s.seed;
  normalized["structure"] = std::string(to_string(config.structure));
  normalized["sampler"] = sampler_to_json(s, config.ppmc_stride);
  normalized["priors"] = priors_to_json(p);
  if (command == Command::Compare) {
    json list = json::array();
    for (auto st : config.compare_structures) list.push_back(std::string(to_string(st)));
    normalized["structures"] = list;
  }
  if (command == Command::Simulate || command == Command::Recover) {
    normalized["design"] = design_to_json(config.design);
  }
  if (command == Command::Recover) normalized["replications"] = config.replications;
  config.document = std::move(normalized);
  return config;
}

void RunConfig::validate() const {
  sampler.validate();
  priors.validate();
  if (ppmc_stride < 1) throw std::invalid_argument("sampler.ppmc_stride must be at least 1");
  switch (command) {
    case Command::Fit:
    case Command::Compare:
      if (responses.empty() || rts.empty() || qmatrix.empty()) {
        throw std::invalid_argument(std::string(to_string(command)) +
                                    " requires data.responses, data.rts and data.qmatrix");
      }
      if (command == Command::Compare && compare_structures.size() < 2) {
        throw std::invalid_argument("compare requires at least two structures");
      }
      break;
    case Command::Simulate:
      design.validate();
      break;
    case Command::Recover:
      design.validate();
      if (replications < 1) throw std::invalid_argument("replications must be at least 1");
      break;
  }
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(document.dump())));
  return buf;
}

namespace {

struct FittedStructure {
  ModelStructure structure;
  PosteriorDraws draws;
  FitSummary summary;
};

FittedStructure fit_structure(const RunConfig& config, const ObservedData& data, const QMatrix& q,
                              ModelStructure structure, std::ostream& log) {
  const Loadings loadings = effective_q(structure, q);
  log << "fitting " << to_string(structure) << ": " << config.sampler.n_chains << " chains x "
      << config.sampler.n_iterations << " iterations (" << config.sampler.n_burnin
      << " burn-in)\n";
  std::vector<ChainResult> stats;
  PosteriorDraws draws = fit_model(data, loadings, config.sampler, config.priors, &stats);
  for (std::size_t c = 0; c < stats.size(); ++c) {
    log << "  chain " << c + 1 << ": acceptance theta " << stats[c].theta_acceptance << ", d "
        << stats[c].d_acceptance << '\n';
  }
  FitSummary summary =
      summarize_fit(draws, data, loadings, {config.ppmc_stride, config.sampler.seed});
  log << "  DIC " << summary.criteria.dic << ", AIC " << summary.criteria.aic << ", BIC "
      << summary.criteria.bic << ", ppp_RA " << summary.ppp_ra << ", ppp_RT " << summary.ppp_rt
      << ", max PSRF " << summary.max_psrf() << '\n';
  return {structure, std::move(draws), std::move(summary)};
}

json stamped(json body, const io::Provenance& stamp) {
  body["config_hash"] = stamp.config_hash;
  body["seed"] = stamp.seed;
  return body;
}

int run_simulate(const RunConfig& config, std::ostream& log) {
  const io::Provenance stamp = config.provenance();
  Rng rng(config.sampler.seed, 0);
  const SimulatedDataset sim = simulate_dataset(config.design, rng);
  const auto& dir = config.output_dir;
  io::save_data(dir / "responses.csv", dir / "rts.csv", sim.data, config.design.q.item_ids(),
                &stamp);
  io::save_qmatrix(dir / "qmatrix.csv", config.design.q, &stamp);
  json truth = io::to_json(sim.persons, sim.items);
  truth["design"] = config.document.at("design");
  io::write_json(dir / "truth.json", stamped(std::move(truth), stamp));
  io::write_json(dir / "config.json", stamped(config.document, stamp));
  log << "simulated " << sim.data.n_persons() << " persons x " << sim.data.n_items()
      << " items under " << to_string(config.design.structure) << " into " << dir.string()
      << '\n';
  return 0;
}

int run_fit(const RunConfig& config, std::ostream& log) {
  const io::Provenance stamp = config.provenance();
  const QMatrix q = io::load_qmatrix(config.qmatrix);
  std::vector<std::string> ids;
  const ObservedData data = io::load_data(config.responses, config.rts, &ids);
  if (data.n_items() != q.n_items()) {
    throw std::invalid_argument("Q-matrix has " + std::to_string(q.n_items()) +
                                " items but the data have " + std::to_string(data.n_items()));
  }
  const FittedStructure fit = fit_structure(config, data, q, config.structure, log);
  const auto& dir = config.output_dir;
  for (int c = 0; c < fit.draws.n_chains(); ++c) {
    io::save_draws(dir / ("draws_chain" + std::to_string(c + 1) + ".csv"), fit.draws, c, stamp);
  }
  io::write_json(dir / "summary.json", stamped(io::to_json(fit.summary, fit.structure), stamp));
  io::save_convergence_csv(dir / "convergence.csv", fit.summary, stamp);
  return 0;
}

int run_compare(const RunConfig& config, std::ostream& log) {
  const io::Provenance stamp = config.provenance();
  const QMatrix q = io::load_qmatrix(config.qmatrix);
  const ObservedData data = io::load_data(config.responses, config.rts);
  if (data.n_items() != q.n_items()) {
    throw std::invalid_argument("Q-matrix and data disagree on the number of items");
  }
  std::vector<io::ComparisonRow> rows;
  json table = json::array();
  for (ModelStructure s : config.compare_structures) {
    const FittedStructure fit = fit_structure(config, data, q, s, log);
    rows.push_back({s, fit.summary.criteria, fit.summary.ppp_ra, fit.summary.ppp_rt});
    io::write_json(config.output_dir / ("summary_" + std::string(to_string(s)) + ".json"),
                   stamped(io::to_json(fit.summary, s), stamp));
    table.push_back({{"structure", std::string(to_string(s))},
                     {"AIC", fit.summary.criteria.aic},
                     {"BIC", fit.summary.criteria.bic},
                     {"DIC", fit.summary.criteria.dic},
                     {"ppp_RA", fit.summary.ppp_ra},
                     {"ppp_RT", fit.summary.ppp_rt}});
  }
  io::save_comparison_csv(config.output_dir / "comparison.csv", rows, stamp);
  io::write_json(config.output_dir / "comparison.json", stamped({{"models", table}}, stamp));
  return 0;
}

int run_recover(const RunConfig& config, std::ostream& log) {
  const io::Provenance stamp = config.provenance();
  RecoveryOptions options;
  options.ppmc_stride = config.ppmc_stride;
  log << "recovery: " << config.replications << " replications of "
      << to_string(config.design.structure) << '\n';
  const RecoveryReport report = run_replications(config.design, config.sampler,
                                                 config.replications, config.sampler.seed,
                                                 config.priors, options);
  io::save_recovery_csv(config.output_dir / "recovery.csv", report, stamp);
  io::write_json(config.output_dir / "recovery.json", stamped(io::to_json(report), stamp));
  for (const auto& row : report.rows) {
    log << "  " << row.family << ": bias " << row.bias << ", rmse " << row.rmse << ", cor "
        << (row.cor ? io::format_double(*row.cor) : "NA") << '\n';
  }
  log << "  excluded " << report.excluded << " of " << report.replications << '\n';
  return 0;
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& log) {
  config.validate();
  switch (config.command) {
    case Command::Simulate: return run_simulate(config, log);
    case Command::Fit: return run_fit(config, log);
    case Command::Compare: return run_compare(config, log);
    case Command::Recover: return run_recover(config, log);
  }
  return 1;
}

}  // namespace mlrt
