#include "mlrt/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mlrt::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t row) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument(path.string() + ": row " + std::to_string(row) +
                                ": not a number: '" + cell + "'");
  }
  return value;
}

/// Returns the numeric block of a person-by-item CSV plus the item ids.
Matrix read_person_item_matrix(const fs::path& path, std::vector<std::string>& item_ids) {
  const CsvTable table = read_csv(path);
  std::size_t first = 0;
  if (!table.header.empty() && (table.header[0] == "person" || table.header[0] == "id")) first = 1;
  item_ids.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first), table.header.end());
  const auto n_items = static_cast<Eigen::Index>(item_ids.size());
  Matrix m(static_cast<Eigen::Index>(table.rows.size()), n_items);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(r + 1) + " has " +
                                  std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(table.header.size()));
    }
    for (Eigen::Index i = 0; i < n_items; ++i) {
      const std::string& cell = row[first + static_cast<std::size_t>(i)];
      m(static_cast<Eigen::Index>(r), i) =
          (cell.empty() || cell == "NA") ? kMissing : parse_number(cell, path, r + 1);
    }
  }
  return m;
}

void write_person_item_matrix(std::ostream& out, const Matrix& m,
                              const std::vector<std::string>& item_ids,
                              std::string (*format)(double)) {
  out << "person";
  for (const auto& id : item_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index n = 0; n < m.rows(); ++n) {
    out << n + 1;
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      out << ',';
      if (!is_missing(m(n, i))) out << format(m(n, i));
    }
    out << '\n';
  }
}

std::string format_seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string format_response(double v) { return v > 0.5 ? "1" : "0"; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string Provenance::comment_line() const {
  return "# config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_header) {
      table.header = split(line);
      have_header = true;
    } else {
      table.rows.push_back(split(line));
    }
  }
  if (!have_header) throw std::invalid_argument(path.string() + ": missing header row");
  return table;
}

QMatrix load_qmatrix(const fs::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2) {
    throw std::invalid_argument(path.string() + ": Q-matrix header needs at least one dimension");
  }
  const std::vector<std::string> dims(table.header.begin() + 1, table.header.end());
  std::vector<std::string> ids;
  Matrix q(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(dims.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw std::invalid_argument(path.string() + ": ragged Q-matrix row " + std::to_string(r + 1) +
                                  " (" + std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(table.header.size()) + ")");
    }
    ids.push_back(row[0]);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const std::string& cell = row[k + 1];
      double v = 0.0;
      if (!cell.empty()) {
        if (cell != "0" && cell != "1") {
          throw std::invalid_argument(path.string() + ": Q-matrix entry '" + cell + "' for item " +
                                      row[0] + " is not binary");
        }
        v = cell == "1" ? 1.0 : 0.0;
      }
      q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return QMatrix(std::move(q), std::move(ids), dims);
}

void save_qmatrix(const fs::path& path, const QMatrix& q, const Provenance* stamp) {
  auto out = open_output(path);
  if (stamp != nullptr) out << stamp->comment_line() << '\n';
  out << "item";
  for (const auto& label : q.dim_labels()) out << ',' << label;
  out << '\n';
  for (int i = 0; i < q.n_items(); ++i) {
    out << q.item_ids()[i];
    for (int k = 0; k < q.n_dims(); ++k) out << ',' << (q.entries()(i, k) == 1.0 ? "1" : "0");
    out << '\n';
  }
}

ObservedData load_data(const fs::path& responses_path, const fs::path& rts_path,
                       std::vector<std::string>* item_ids) {
  std::vector<std::string> response_ids, rt_ids;
  Matrix y = read_person_item_matrix(responses_path, response_ids);
  const Matrix t = read_person_item_matrix(rts_path, rt_ids);
  if (response_ids != rt_ids || y.rows() != t.rows()) {
    throw std::invalid_argument("response and RT files differ in dimensions or item headers");
  }
  for (Eigen::Index n = 0; n < y.rows(); ++n) {
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      const double v = y(n, i);
      if (!is_missing(v) && v != 0.0 && v != 1.0) {
        throw std::invalid_argument(responses_path.string() + ": response at row " +
                                    std::to_string(n + 1) + ", item " + response_ids[i] +
                                    " is not 0/1");
      }
      if (!is_missing(t(n, i)) && t(n, i) < 0.0) {
        throw std::invalid_argument(rts_path.string() + ": negative RT at row " +
                                    std::to_string(n + 1) + ", item " + rt_ids[i]);
      }
    }
  }
  if (item_ids != nullptr) *item_ids = response_ids;
  return ObservedData::from_seconds(std::move(y), t);
}

void save_data(const fs::path& responses_path, const fs::path& rts_path, const ObservedData& data,
               const std::vector<std::string>& item_ids, const Provenance* stamp) {
  if (static_cast<int>(item_ids.size()) != data.n_items()) {
    throw std::invalid_argument("item id count does not match the data");
  }
  auto y_out = open_output(responses_path);
  if (stamp != nullptr) y_out << stamp->comment_line() << '\n';
  write_person_item_matrix(y_out, data.responses, item_ids, &format_response);
  auto t_out = open_output(rts_path);
  if (stamp != nullptr) t_out << stamp->comment_line() << '\n';
  write_person_item_matrix(t_out, data.rt_seconds(), item_ids, &format_seconds);
}

void save_draws(const fs::path& path, const PosteriorDraws& draws, int chain,
                const Provenance& stamp) {
  auto out = open_output(path);
  out << stamp.comment_line() << " chain=" << chain + 1 << '\n';
  const auto& names = draws.layout.names();
  out << "iteration";
  for (const auto& name : names) out << ",\"" << name << '"';
  out << '\n';
  const Matrix& m = draws.chains.at(chain);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r + 1;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
}

json to_json(const FitSummary& summary, ModelStructure structure) {
  json j;
  j["structure"] = std::string(to_string(structure));
  j["ppp_RA"] = summary.ppp_ra;
  j["ppp_RT"] = summary.ppp_rt;
  j["AIC"] = summary.criteria.aic;
  j["BIC"] = summary.criteria.bic;
  j["DIC"] = summary.criteria.dic;
  j["D_bar"] = summary.criteria.mean_deviance;
  j["p_e"] = summary.criteria.p_e;
  j["p"] = summary.criteria.p;
  j["max_psrf"] = number_or_null(summary.max_psrf());
  json params = json::array();
  for (const auto& p : summary.parameters) {
    params.push_back({{"name", p.name},
                      {"mean", number_or_null(p.mean)},
                      {"sd", number_or_null(p.sd)},
                      {"psrf", number_or_null(p.psrf)}});
  }
  j["parameters"] = std::move(params);
  return j;
}

json to_json(const RecoveryReport& report) {
  json j;
  j["replications"] = report.replications;
  j["excluded"] = report.excluded;
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"family", row.family},
                    {"bias", row.bias},
                    {"abs_bias", row.abs_bias},
                    {"rmse", row.rmse},
                    {"cor", row.cor ? json(*row.cor) : json(nullptr)},
                    {"members", row.members}});
  }
  j["rows"] = std::move(rows);
  json outcomes = json::array();
  for (const auto& o : report.outcomes) {
    outcomes.push_back({{"replication", o.replication},
                        {"accepted", o.accepted},
                        {"max_psrf", number_or_null(o.max_psrf)},
                        {"ppp_RA", o.ppp_ra},
                        {"ppp_RT", o.ppp_rt},
                        {"DIC", o.criteria.dic}});
  }
  j["outcomes"] = std::move(outcomes);
  return j;
}

json to_json(const PersonParams& persons, const ItemParams& items) {
  json j;
  j["theta"] = matrix_json(persons.theta);
  j["tau"] = matrix_json(persons.tau);
  j["sigma_person"] = matrix_json(persons.sigma_person);
  j["d"] = vector_json(items.d);
  j["xi"] = vector_json(items.xi);
  j["omega"] = vector_json(items.omega);
  j["mu_d"] = items.mu_d;
  j["mu_xi"] = items.mu_xi;
  j["sigma_item"] = matrix_json(items.sigma_item);
  return j;
}

void save_recovery_csv(const fs::path& path, const RecoveryReport& report,
                       const Provenance& stamp) {
  auto out = open_output(path);
  out << stamp.comment_line() << " replications=" << report.replications
      << " excluded=" << report.excluded << '\n';
  out << "parameter,bias,abs_bias,rmse,cor,members\n";
  for (const auto& row : report.rows) {
    out << row.family << ',' << format_double(row.bias) << ',' << format_double(row.abs_bias)
        << ',' << format_double(row.rmse) << ','
        << (row.cor ? format_double(*row.cor) : "NA") << ',' << row.members << '\n';
  }
}

void save_convergence_csv(const fs::path& path, const FitSummary& summary,
                          const Provenance& stamp) {
  auto out = open_output(path);
  out << stamp.comment_line() << '\n';
  out << "parameter,mean,sd,psrf\n";
  for (const auto& p : summary.parameters) {
    out << '"' << p.name << "\"," << format_double(p.mean) << ',' << format_double(p.sd) << ','
        << format_double(p.psrf) << '\n';
  }
}

void save_comparison_csv(const fs::path& path, const std::vector<ComparisonRow>& rows,
                         const Provenance& stamp) {
  auto out = open_output(path);
  out << stamp.comment_line() << '\n';
  out << "ability,speed,structure,AIC,BIC,DIC,ppp_RA,ppp_RT\n";
  for (const auto& row : rows) {
    const bool multi_ability = row.structure != ModelStructure::UA_US;
    const bool multi_speed = row.structure == ModelStructure::MA_MS;
    out << (multi_ability ? "MRM" : "URM") << ',' << (multi_speed ? "MLRTM" : "ULRTM") << ','
        << to_string(row.structure) << ',' << format_double(row.criteria.aic) << ','
        << format_double(row.criteria.bic) << ',' << format_double(row.criteria.dic) << ','
        << format_double(row.ppp_ra) << ',' << format_double(row.ppp_rt) << '\n';
  }
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_output(path);
  out << value.dump(2) << '\n';
}

}  // namespace mlrt::io
