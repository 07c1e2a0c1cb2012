#include "cjsis/artifacts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cjsis/error.hpp"
#include "json_io.hpp"

namespace cjsis {
namespace {

using detail::json;

std::string join_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

void write_dataset_file(const fs::path& path, const CompressedDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, data);
}

std::vector<std::string> summary_cells(const std::string& name, const ParameterSummary& s) {
  return {name, format_number(s.mean), format_number(s.sd), format_number(s.q025), format_number(s.q50),
          format_number(s.q975)};
}

ParameterSummary summary_from(const std::vector<std::string>& row, std::size_t offset) {
  ParameterSummary s;
  s.mean = parse_number(row.at(offset));
  s.sd = parse_number(row.at(offset + 1));
  s.q025 = parse_number(row.at(offset + 2));
  s.q50 = parse_number(row.at(offset + 3));
  s.q975 = parse_number(row.at(offset + 4));
  return s;
}

DrawSet draws_from_table(const std::vector<std::vector<std::string>>& rows, const ModelSpec& spec, int T,
                         bool with_log_posterior) {
  DrawSet set;
  set.spec = spec;
  set.num_occasions = T;
  set.names = parameter_names(spec, T);
  const std::size_t dim = set.names.size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 2 + dim) throw Error(fmt::format("draw table row {} is too short", r + 1));
    set.chain.push_back(std::stoi(row[1]));
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) values[j] = parse_number(row[2 + j]);
    set.draws.push_back(unflatten(spec, T, values));
    if (with_log_posterior && row.size() > 2 + dim) set.log_posterior.push_back(parse_number(row[2 + dim]));
  }
  return set;
}

std::string draws_table(const DrawSet& draws, bool with_log_posterior) {
  std::vector<std::string> header{"draw", "chain"};
  header.insert(header.end(), draws.names.begin(), draws.names.end());
  if (with_log_posterior) header.emplace_back("log_posterior");
  std::string out = join_line(header);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    std::vector<std::string> cells{std::to_string(k), std::to_string(draws.chain.empty() ? 0 : draws.chain[k])};
    for (const double v : flatten(draws.spec, draws.draws[k])) cells.push_back(format_number(v));
    if (with_log_posterior) {
      cells.push_back(format_number(draws.log_posterior.empty() ? std::nan("") : draws.log_posterior[k]));
    }
    out += join_line(cells);
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

double parse_number(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error("malformed number '" + text + "'");
  }
  if (used != text.size()) throw Error("malformed number '" + text + "'");
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

void write_draws(const fs::path& dir, const DrawSet& draws) {
  fs::create_directories(dir);
  write_text(dir / "draws.csv", draws_table(draws, true));
  json manifest;
  manifest["subsample"] = draws.subsample;
  manifest["num_occasions"] = draws.num_occasions;
  manifest["model"] = detail::to_json(draws.spec);
  manifest["config_digest"] = draws.config_digest;
  manifest["draws"] = draws.size();
  manifest["likelihood_evaluations"] = draws.likelihood_evaluations;
  json acceptance = json::object();
  for (const auto& [name, rate] : draws.acceptance) acceptance[name] = rate;
  manifest["acceptance"] = acceptance;
  json ess = json::object();
  for (std::size_t j = 0; j < draws.names.size() && j < draws.ess.size(); ++j) ess[draws.names[j]] = draws.ess[j];
  manifest["ess"] = ess;
  detail::write_json(dir / "draws.json", manifest);
}

DrawSet read_draws(const fs::path& dir) {
  const json manifest = detail::read_json(dir / "draws.json");
  const ModelSpec spec = detail::model_from_json(manifest.at("model"));
  const int T = manifest.at("num_occasions").get<int>();
  DrawSet set = draws_from_table(read_csv(dir / "draws.csv"), spec, T, true);
  set.subsample = manifest.at("subsample").get<int>();
  set.config_digest = manifest.at("config_digest").get<std::string>();
  set.likelihood_evaluations = manifest.at("likelihood_evaluations").get<std::uint64_t>();
  for (const auto& [name, rate] : manifest.at("acceptance").items()) set.acceptance.emplace_back(name, rate.get<double>());
  for (const auto& name : set.names) set.ess.push_back(manifest.at("ess").value(name, 0.0));
  return set;
}

void write_weights(const fs::path& dir, const WeightedDraws& wd, const WeightEstimatorConfig& config) {
  fs::create_directories(dir);
  std::string table = join_line({"draw", "log_w_star", "w"});
  for (std::size_t k = 0; k < wd.w.size(); ++k) {
    table += join_line({std::to_string(k), format_number(wd.log_w_star[k]), format_number(wd.w[k])});
  }
  write_text(dir / "weights.csv", table);
  json manifest;
  manifest["subsample"] = wd.draws.subsample;
  manifest["draws"] = wd.w.size();
  manifest["ess"] = wd.ess;
  manifest["n_nonneg"] = wd.n_nonneg;
  manifest["threshold"] = config.threshold;
  manifest["retained"] =
      wd.retained.empty() ? wd.w.size() : static_cast<std::size_t>(std::count(wd.retained.begin(), wd.retained.end(), 1));
  manifest["particle_evaluations"] = wd.particle_evaluations;
  manifest["estimator"] = detail::to_json(config);
  detail::write_json(dir / "weights.json", manifest);
}

WeightedDraws read_weights(const fs::path& dir, DrawSet draws) {
  const auto rows = read_csv(dir / "weights.csv");
  const json manifest = detail::read_json(dir / "weights.json");
  WeightedDraws wd;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    wd.log_w_star.push_back(parse_number(rows[r].at(1)));
    wd.w.push_back(parse_number(rows[r].at(2)));
  }
  if (wd.w.size() != draws.size()) throw Error("weights.csv and draws.csv disagree on the number of draws");
  wd.draws = std::move(draws);
  wd.ess = manifest.at("ess").get<double>();
  wd.n_nonneg = manifest.at("n_nonneg").get<std::size_t>();
  wd.particle_evaluations = manifest.value("particle_evaluations", std::uint64_t{0});
  return wd;
}

void write_subsample(const fs::path& dir, const Subsample& sub, const SubsamplePlan& plan) {
  fs::create_directories(dir);
  write_dataset_file(dir / "x1.csv", sub.x1);
  write_dataset_file(dir / "x2.csv", sub.x2);
  json manifest;
  manifest["subsample"] = sub.index;
  manifest["plan"] = detail::to_json(plan);
  manifest["x1_individuals"] = sub.x1.total_individuals();
  manifest["x2_individuals"] = sub.x2.total_individuals();
  manifest["x1_entries"] = sub.x1.num_entries();
  manifest["x2_entries"] = sub.x2.num_entries();
  json strata = json::array();
  for (const auto& s : sub.strata) {
    json row;
    row["first"] = s.key.first;
    row["last"] = s.key.last;
    row["cohort_age"] = s.key.cohort_age ? json(*s.key.cohort_age) : json(nullptr);
    row["population"] = s.population;
    row["sampled"] = s.sampled;
    strata.push_back(row);
  }
  manifest["strata"] = strata;
  detail::write_json(dir / "subsample.json", manifest);
}

void write_subsample_result(const fs::path& dir, const SubsampleResult& r) {
  fs::create_directories(dir);
  json manifest;
  manifest["subsample"] = r.index;
  manifest["names"] = r.names;
  manifest["depleted"] = r.depleted;
  manifest["error"] = r.error;
  manifest["draws"] = r.draws;
  manifest["ess"] = r.ess;
  manifest["n_nonneg"] = r.n_nonneg;
  manifest["weight_variance"] = r.weight_variance;
  if (!r.depleted) {
    manifest["num_occasions"] = r.resample.num_occasions;
    manifest["model"] = detail::to_json(r.resample.spec);
  }
  detail::write_json(dir / "result.json", manifest);
  if (r.depleted) return;

  std::string table = join_line({"parameter", "stage", "mean", "sd", "q2.5", "q50", "q97.5"});
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    for (const auto& [stage, s] : {std::pair{"subposterior", r.subposterior[j]}, std::pair{"corrected", r.corrected[j]}}) {
      auto cells = summary_cells(r.names[j], s);
      cells.insert(cells.begin() + 1, stage);
      table += join_line(cells);
    }
  }
  write_text(dir / "corrected.csv", table);
  write_text(dir / "resample.csv", draws_table(r.resample, false));
}

SubsampleResult read_subsample_result(const fs::path& dir) {
  const json manifest = detail::read_json(dir / "result.json");
  SubsampleResult r;
  r.index = manifest.at("subsample").get<int>();
  r.names = manifest.at("names").get<std::vector<std::string>>();
  r.depleted = manifest.at("depleted").get<bool>();
  r.error = manifest.at("error").get<std::string>();
  r.draws = manifest.at("draws").get<std::size_t>();
  r.ess = manifest.at("ess").get<double>();
  r.n_nonneg = manifest.at("n_nonneg").get<std::size_t>();
  r.weight_variance = manifest.at("weight_variance").get<double>();
  if (r.depleted) return r;

  const auto rows = read_csv(dir / "corrected.csv");
  r.subposterior.resize(r.names.size());
  r.corrected.resize(r.names.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto it = std::find(r.names.begin(), r.names.end(), row.at(0));
    if (it == r.names.end()) throw Error("corrected.csv names an unknown parameter '" + row.at(0) + "'");
    const auto j = static_cast<std::size_t>(it - r.names.begin());
    (row.at(1) == "corrected" ? r.corrected : r.subposterior)[j] = summary_from(row, 2);
  }
  const ModelSpec spec = detail::model_from_json(manifest.at("model"));
  const int T = manifest.at("num_occasions").get<int>();
  r.resample = draws_from_table(read_csv(dir / "resample.csv"), spec, T, false);
  r.resample.subsample = r.index;
  return r;
}

void write_summary(const fs::path& path, const std::vector<CombinedRow>& rows, const std::string& rule,
                   std::size_t m) {
  std::string table = join_line({"parameter", "mean", "sd", "q2.5", "q50", "q97.5", "rule", "M"});
  for (const auto& row : rows) {
    auto cells = summary_cells(row.parameter, row.summary);
    cells.push_back(rule);
    cells.push_back(std::to_string(m));
    table += join_line(cells);
  }
  write_text(path, table);
}

std::vector<CombinedRow> read_summary(const fs::path& path) {
  const auto rows = read_csv(path);
  std::vector<CombinedRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) out.push_back({rows[i].at(0), summary_from(rows[i], 1)});
  return out;
}

void write_dispersion(const fs::path& path, const std::vector<DispersionRow>& rows) {
  std::string table = join_line({"parameter", "subposterior_q2.5", "subposterior_q97.5", "corrected_q2.5",
                                 "corrected_q97.5", "corrected_narrower"});
  for (const auto& r : rows) {
    table += join_line({r.parameter, format_number(r.subposterior_lower), format_number(r.subposterior_upper),
                        format_number(r.corrected_lower), format_number(r.corrected_upper),
                        r.corrected_narrower() ? "true" : "false"});
  }
  write_text(path, table);
}

}  // namespace cjsis
