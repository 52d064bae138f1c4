#pragma once

#include "mlrt/diagnostics.hpp"
#include "mlrt/model.hpp"
#include "mlrt/recovery.hpp"
#include "mlrt/sampler.hpp"
#include "mlrt/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mlrt::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Origin stamp written into every output file.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  /// "# config_hash=<hash> seed=<seed>"
  std::string comment_line() const;
};

/// Parsed CSV: '#' comment lines and blank lines are skipped; cells are trimmed.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path);

/// Header: a corner label then one label per dimension; one row per item with
/// the item id first. Blank cells mean zero.
QMatrix load_qmatrix(const fs::path& path);
void save_qmatrix(const fs::path& path, const QMatrix& q, const Provenance* stamp = nullptr);

/// Both files: header "person,<item ids>" (the person column is optional),
/// then one row per person. Empty response cells are missing; empty or zero
/// RT cells are missing; RTs are seconds and logged at load.
ObservedData load_data(const fs::path& responses_path, const fs::path& rts_path,
                       std::vector<std::string>* item_ids = nullptr);
void save_data(const fs::path& responses_path, const fs::path& rts_path,
               const ObservedData& data, const std::vector<std::string>& item_ids,
               const Provenance* stamp = nullptr);

/// One row per retained draw, columns named param[index] plus deviance.
void save_draws(const fs::path& path, const PosteriorDraws& draws, int chain,
                const Provenance& stamp);

json to_json(const FitSummary& summary, ModelStructure structure);
json to_json(const RecoveryReport& report);
json to_json(const PersonParams& persons, const ItemParams& items);
void save_recovery_csv(const fs::path& path, const RecoveryReport& report,
                       const Provenance& stamp);
/// name,mean,sd,psrf per parameter.
void save_convergence_csv(const fs::path& path, const FitSummary& summary,
                          const Provenance& stamp);

struct ComparisonRow {
  ModelStructure structure;
  InformationCriteria criteria;
  double ppp_ra;
  double ppp_rt;
};

/// Columns: ability,speed,structure,AIC,BIC,DIC,ppp_RA,ppp_RT.
void save_comparison_csv(const fs::path& path, const std::vector<ComparisonRow>& rows,
                         const Provenance& stamp);

void write_json(const fs::path& path, const json& value);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace mlrt::io
