// Command-line front end: simulate, fit, compare, recover.

#include "mlrt/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> structure;
  std::optional<std::string> output_dir;
  std::optional<std::string> responses;
  std::optional<std::string> rts;
  std::optional<std::string> qmatrix;
  std::optional<int> chains;
  std::optional<int> iterations;
  std::optional<int> burnin;
  std::optional<int> thin;
  std::optional<int> replications;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file");
  cmd->add_option("--set", o.assignments, "Override a config key, e.g. --set sampler.thin=2");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--structure", o.structure, "UA_US, MA_US or MA_MS");
  cmd->add_option("-o,--out", o.output_dir, "Output directory");
  cmd->add_option("--chains", o.chains, "Number of chains");
  cmd->add_option("--iterations", o.iterations, "Iterations per chain");
  cmd->add_option("--burnin", o.burnin, "Burn-in iterations per chain");
  cmd->add_option("--thin", o.thin, "Thinning interval");
}

void add_data_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--responses", o.responses, "Response CSV (0/1, blank = missing)");
  cmd->add_option("--rts", o.rts, "Response-time CSV in seconds (blank or 0 = missing)");
  cmd->add_option("--qmatrix", o.qmatrix, "Q-matrix CSV");
}

mlrt::io::json build_document(const Overrides& o) {
  using mlrt::io::json;
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::invalid_argument("cannot open config " + o.config_path);
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("config " + o.config_path + " is not JSON");
  }
  auto set = [&doc](const std::string& key, const json& value) {
    mlrt::apply_override(doc, key + "=" + value.dump());
  };
  if (o.seed) set("seed", *o.seed);
  if (o.structure) set("structure", *o.structure);
  if (o.output_dir) set("output_dir", *o.output_dir);
  if (o.responses) set("data.responses", *o.responses);
  if (o.rts) set("data.rts", *o.rts);
  if (o.qmatrix) set("data.qmatrix", *o.qmatrix);
  if (o.chains) set("sampler.n_chains", *o.chains);
  if (o.iterations) set("sampler.n_iterations", *o.iterations);
  if (o.burnin) set("sampler.n_burnin", *o.burnin);
  if (o.thin) set("sampler.thin", *o.thin);
  if (o.replications) set("replications", *o.replications);
  for (const auto& a : o.assignments) mlrt::apply_override(doc, a);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint response-accuracy / response-time models: simulate, fit, compare, recover"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "Simulate responses and RTs from a design");
  add_common_options(simulate, o);
  auto* fit = app.add_subcommand("fit", "Fit one structure by MCMC");
  add_common_options(fit, o);
  add_data_options(fit, o);
  auto* compare = app.add_subcommand("compare", "Fit UA_US, MA_US and MA_MS and compare");
  add_common_options(compare, o);
  add_data_options(compare, o);
  auto* recover = app.add_subcommand("recover", "Parameter-recovery study");
  add_common_options(recover, o);
  recover->add_option("--replications", o.replications, "Number of replications");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto* chosen = app.get_subcommands().front();
    const mlrt::Command command = mlrt::parse_command(chosen->get_name());
    const mlrt::RunConfig config = mlrt::parse_run_config(command, build_document(o));
    return mlrt::run_command(config, std::cerr);
  } catch (const mlrt::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
