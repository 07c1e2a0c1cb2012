#include "cjsis/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cjsis/artifacts.hpp"
#include "cjsis/error.hpp"
#include "cjsis/parallel.hpp"
#include "cjsis/simulate.hpp"
#include "json_io.hpp"

namespace cjsis {
namespace {

using detail::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = parse_value(assignment.substr(eq + 1));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct Moments {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Combined mean and mixture SD over a chosen set of subsamples.
Moments combined_moments(const std::vector<const SubsampleResult*>& chosen, CombinationRule rule) {
  std::vector<SubsampleResult> shallow;
  shallow.reserve(chosen.size());
  for (const auto* r : chosen) {
    SubsampleResult s;
    s.depleted = r->depleted;
    s.ess = r->ess;
    s.weight_variance = r->weight_variance;
    shallow.push_back(std::move(s));
  }
  const auto z = combination_weights(shallow, rule);
  Moments out;
  const SubsampleResult* live = nullptr;
  for (const auto* r : chosen) {
    if (!r->depleted) live = r;
  }
  if (live == nullptr) throw DepletionError("every subsample in the subset is depleted");
  for (std::size_t j = 0; j < live->names.size(); ++j) {
    std::vector<double> means;
    for (const auto* r : chosen) means.push_back(r->depleted ? 0.0 : r->corrected[j].mean);
    const double m = combine_expectations(means, shallow, rule);
    double second = 0.0;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (z[i] <= 0.0) continue;
      const auto& c = chosen[i]->corrected[j];
      second += z[i] * (c.sd * c.sd + c.mean * c.mean);
    }
    out.mean.push_back(m);
    out.sd.push_back(std::sqrt(std::max(second - m * m, 0.0)));
  }
  return out;
}

struct SubsampleOutcome {
  SubsampleResult result;
  std::vector<StageTiming> timing;
  std::string failure;  // stage failures other than depletion
  std::string chain_digest;
  std::uint64_t particle_evaluations = 0;
  std::uint64_t likelihood_evaluations = 0;
};

SubsampleOutcome execute_subsample(const PipelineConfig& config, const CompressedDataset& data, int m,
                                   const std::optional<fs::path>& dir) {
  SubsampleOutcome out;
  const auto names = parameter_names(config.model, data.num_occasions());
  std::string stage = "subsample";
  try {
    auto t0 = Clock::now();
    const Subsample sub = draw_subsample(data, config.subsample, m);
    if (dir) write_subsample(*dir, sub, config.subsample);
    out.timing.push_back({m, stage, seconds_since(t0), 0});

    stage = "mcmc";
    t0 = Clock::now();
    const DrawSet draws = run_subposterior_mcmc(sub.x1, config.model, config.mcmc, m);
    if (dir) write_draws(*dir, draws);
    out.chain_digest = draws.config_digest;
    out.likelihood_evaluations = draws.likelihood_evaluations;
    out.timing.push_back({m, stage, seconds_since(t0), draws.likelihood_evaluations});

    stage = "weights";
    t0 = Clock::now();
    const WeightedDraws wd = compute_weights(draws, sub.x2, config.weights);
    if (dir) write_weights(*dir, wd, config.weights);
    out.particle_evaluations = wd.particle_evaluations;
    out.timing.push_back({m, stage, seconds_since(t0), wd.particle_evaluations});

    stage = "summarize";
    t0 = Clock::now();
    Stream resample(config.seed, {tag(StreamDomain::resample), static_cast<std::uint64_t>(m)});
    out.result = summarize_subsample(wd, config.resample, resample);
    out.result.index = m;
    if (dir) write_subsample_result(*dir, out.result);
    out.timing.push_back({m, stage, seconds_since(t0), 0});
  } catch (const DepletionError& e) {
    out.result = failed_subsample(m, names, e.what());
    if (dir) write_subsample_result(*dir, out.result);
  } catch (const std::exception& e) {
    out.failure = fmt::format("subsample {} failed during {}: {}", m, stage, e.what());
    out.result = failed_subsample(m, names, out.failure);
    if (dir) write_subsample_result(*dir, out.result);
  }
  return out;
}

std::string timing_table(const std::vector<StageTiming>& timing) {
  std::string out = "subsample,stage,seconds,evaluations\n";
  for (const auto& t : timing) {
    out += fmt::format("{},{},{:.3f},{}\n", t.subsample, t.stage, t.seconds, t.likelihood_evaluations);
  }
  return out;
}

}  // namespace

std::string subsample_dir_name(int m) { return fmt::format("subsample_{:03d}", m); }

void PipelineConfig::validate() const {
  if (data_path.has_value() == simulate.has_value()) {
    throw ConfigError("config needs exactly one of data.path and data.simulate");
  }
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (resample < 1) throw ConfigError("resample size must be at least 1");
  model.validate();
  subsample.validate();
  mcmc.validate();
  weights.validate();
  if (simulate) {
    if (simulate->individuals < 1) throw ConfigError("simulation needs at least one individual");
    if (simulate->occasions < 2) throw ConfigError("simulation needs at least two occasions");
    validate_theta(model, simulate->occasions, simulate->truth);
  }
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  detail::require_keys(doc, {"seed", "workers", "output", "data", "model", "subsample", "mcmc", "weights", "combine"},
                       "config");

  PipelineConfig c;
  try {
    c.seed = doc.value("seed", c.seed);
    c.workers = doc.value("workers", c.workers);
    c.output = doc.value("output", c.output.string());
  } catch (const json::exception&) {
    throw ConfigError("config fields seed, workers and output have the wrong type");
  }
  c.subsample.master_seed = c.seed;
  c.mcmc.seed = c.seed;
  c.weights.seed = c.seed;
  if (doc.contains("model")) c.model = detail::model_from_json(doc.at("model"));
  if (doc.contains("subsample")) c.subsample = detail::subsample_from_json(doc.at("subsample"), c.subsample);
  if (doc.contains("mcmc")) c.mcmc = detail::chain_from_json(doc.at("mcmc"), c.mcmc);
  if (doc.contains("weights")) c.weights = detail::weights_from_json(doc.at("weights"), c.weights);
  if (doc.contains("combine")) {
    const auto& cj = doc.at("combine");
    detail::require_keys(cj, {"rule", "resample"}, "combine");
    if (cj.contains("rule")) c.rule = parse_rule(cj.at("rule").get<std::string>());
    c.resample = cj.value("resample", c.resample);
  }
  if (doc.contains("data")) {
    const auto& dj = doc.at("data");
    detail::require_keys(dj, {"path", "simulate"}, "data");
    if (dj.contains("path") && !dj.at("path").is_null()) c.data_path = dj.at("path").get<std::string>();
    if (dj.contains("simulate") && !dj.at("simulate").is_null()) {
      const auto& sj = dj.at("simulate");
      detail::require_keys(sj, {"individuals", "occasions", "last_release", "cohort_age", "seed", "truth"},
                           "data.simulate");
      SimulationConfig s;
      s.seed = c.seed;
      s.individuals = sj.value("individuals", s.individuals);
      s.occasions = sj.value("occasions", s.occasions);
      if (sj.contains("last_release") && !sj.at("last_release").is_null()) s.last_release = sj.at("last_release").get<int>();
      if (sj.contains("cohort_age") && !sj.at("cohort_age").is_null()) s.cohort_age = sj.at("cohort_age").get<int>();
      s.seed = sj.value("seed", s.seed);
      json truth = json::object();
      if (c.model.survival == SurvivalStructure::constant && c.model.capture == CaptureStructure::constant) {
        truth = {{"alpha", 0.62}, {"p", 0.13}};
        if (c.model.samples_sigma_eps()) truth["sigma_eps"] = 0.5;
      }
      if (sj.contains("truth")) truth.update(sj.at("truth"));
      s.truth = detail::theta_from_json(c.model, s.occasions, truth);
      c.simulate = s;
    }
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), overrides);
}

std::string to_json_string(const PipelineConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  doc["output"] = c.output.string();
  json data = json::object();
  if (c.data_path) data["path"] = c.data_path->string();
  if (c.simulate) {
    const auto& s = *c.simulate;
    data["simulate"] = {{"individuals", s.individuals},
                        {"occasions", s.occasions},
                        {"last_release", s.last_release ? json(*s.last_release) : json(nullptr)},
                        {"cohort_age", s.cohort_age ? json(*s.cohort_age) : json(nullptr)},
                        {"seed", s.seed},
                        {"truth", detail::theta_to_json(c.model, s.occasions, s.truth)}};
  }
  doc["data"] = data;
  doc["model"] = detail::to_json(c.model);
  doc["subsample"] = detail::to_json(c.subsample);
  doc["mcmc"] = detail::to_json(c.mcmc);
  doc["weights"] = detail::to_json(c.weights);
  doc["combine"] = {{"rule", to_string(c.rule)}, {"resample", c.resample}};
  return doc.dump(2) + "\n";
}

CompressedDataset resolve_dataset(const PipelineConfig& config) {
  if (config.data_path) return read_dataset(*config.data_path);
  const auto& s = *config.simulate;
  const int last = s.last_release.value_or(s.occasions - 2);
  return simulate_dataset(config.model, s.truth, s.occasions, equal_releases(s.individuals, last, s.cohort_age),
                          s.seed);
}

SubsampleResult run_subsample(const PipelineConfig& config, const CompressedDataset& data, int m,
                              std::vector<StageTiming>* timing) {
  auto out = execute_subsample(config, data, m, std::nullopt);
  if (timing) timing->insert(timing->end(), out.timing.begin(), out.timing.end());
  if (!out.failure.empty()) throw Error(out.failure);
  return out.result;
}

RunReport pipeline_run(const PipelineConfig& config, std::ostream& log, bool dry_run) {
  config.validate();
  if (config.workers > 0) set_worker_budget(config.workers);
  RunReport report;
  report.dry_run = dry_run;
  const auto start = Clock::now();
  const CompressedDataset data = resolve_dataset(config);
  const int M = config.subsample.num_subsamples;

  if (dry_run) {
    const Subsample first = draw_subsample(data, config.subsample, 1);
    log << fmt::format("dataset: {} individuals, {} distinct histories, T = {}\n", data.total_individuals(),
                       data.num_entries(), data.num_occasions());
    log << fmt::format("subsamples: M = {}, fraction {}, scheme {}, {} strata\n", M, config.subsample.fraction,
                       to_string(config.subsample.scheme), first.strata.size());
    log << fmt::format("per subsample: |x1| = {}, |x2| = {} ({} entries)\n", first.x1.total_individuals(),
                       first.x2.total_individuals(), first.x2.num_entries());
    log << fmt::format("mcmc: {} chains x {} iterations, burn-in {}, thin {} -> {} draws\n", config.mcmc.chains,
                       config.mcmc.iterations, config.mcmc.burn_in, config.mcmc.thin,
                       config.mcmc.chains * config.mcmc.retained_per_chain());
    log << fmt::format("weights: {} N = {}{}{}\n", to_string(config.weights.method), config.weights.particles,
                       config.weights.per_entry() ? ", repeated histories" : "",
                       config.weights.two_step ? ", two-step" : "");
    log << fmt::format("combine: rule {}, {} SIR draws per subsample\n", to_string(config.rule), config.resample);
    log << "output: " << config.output.string() << "\n";
    return report;
  }

  fs::create_directories(config.output);
  write_text(config.output / "config.json", to_json_string(config));
  if (config.simulate) {
    std::ofstream out(config.output / "data.csv", std::ios::binary);
    write_dataset(out, data);
    json truth;
    truth["seed"] = config.simulate->seed;
    truth["theta"] = detail::theta_to_json(config.model, config.simulate->occasions, config.simulate->truth);
    detail::write_json(config.output / "truth.json", truth);
  }
  report.timing.push_back({0, "data", seconds_since(start), 0});

  std::vector<SubsampleOutcome> outcomes(static_cast<std::size_t>(M));
  std::mutex log_mutex;
  parallel_for(outcomes.size(), [&](std::size_t i) {
    const int m = static_cast<int>(i) + 1;
    outcomes[i] = execute_subsample(config, data, m, config.output / subsample_dir_name(m));
    const std::lock_guard lock(log_mutex);
    const auto& r = outcomes[i].result;
    if (!outcomes[i].failure.empty()) {
      log << outcomes[i].failure << "\n";
    } else if (r.depleted) {
      log << fmt::format("subsample {}: depleted ({})\n", m, r.error);
    } else {
      log << fmt::format("subsample {}: ess {:.1f}, {} non-negligible weights\n", m, r.ess, r.n_nonneg);
    }
  });

  for (auto& o : outcomes) {
    report.timing.insert(report.timing.end(), o.timing.begin(), o.timing.end());
    if (!o.failure.empty()) report.failures.push_back(o.failure);
    report.subsamples.push_back(o.result);
  }

  const auto t0 = Clock::now();
  json manifest;
  manifest["version"] = kVersion;
  // Worker count and output location never change results, so they stay out of the digest.
  PipelineConfig canonical = config;
  canonical.workers = 0;
  canonical.output.clear();
  manifest["config_digest"] = fmt::format("{:016x}", fnv1a(to_json_string(canonical)));
  manifest["seed"] = config.seed;
  manifest["seeds"] = {{"subsample", config.subsample.master_seed},
                       {"mcmc", config.mcmc.seed},
                       {"weights", config.weights.seed},
                       {"resample", config.seed},
                       {"simulate", config.simulate ? json(config.simulate->seed) : json(nullptr)}};
  manifest["dataset"] = {{"individuals", data.total_individuals()},
                         {"entries", data.num_entries()},
                         {"occasions", data.num_occasions()}};
  try {
    report.combined = combine(report.subsamples, config.rule);
    report.warnings = report.combined->warnings;
    write_summary(config.output / "summary.csv", report.combined->rows, to_string(config.rule),
                  report.combined->included);
    write_dispersion(config.output / "dispersion.csv", subsample_report(report.subsamples));
    for (const auto& w : report.warnings) log << "warning: " << w << "\n";
  } catch (const DepletionError& e) {
    report.failures.push_back(std::string("combine failed: ") + e.what());
    log << report.failures.back() << "\n";
  }
  report.timing.push_back({0, "combine", seconds_since(t0), 0});

  json subs = json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    json s;
    s["subsample"] = o.result.index;
    s["directory"] = subsample_dir_name(o.result.index);
    s["status"] = !o.failure.empty() ? "failed" : (o.result.depleted ? "depleted" : "ok");
    s["error"] = o.result.error;
    s["chain_digest"] = o.chain_digest;
    s["ess"] = o.result.ess;
    s["n_nonneg"] = o.result.n_nonneg;
    s["likelihood_evaluations"] = o.likelihood_evaluations;
    s["particle_evaluations"] = o.particle_evaluations;
    s["z"] = report.combined ? json(report.combined->z[i]) : json(nullptr);
    subs.push_back(s);
  }
  manifest["subsamples"] = subs;
  manifest["combine"] = {{"rule", to_string(config.rule)},
                         {"included", report.combined ? report.combined->included : 0},
                         {"warnings", report.warnings}};
  manifest["failures"] = report.failures;
  manifest["exit_code"] = report.exit_code();
  detail::write_json(config.output / "manifest.json", manifest);

  report.timing.push_back({0, "total", seconds_since(start), 0});
  write_text(config.output / "timing.csv", timing_table(report.timing));
  return report;
}

FullFitResult full_data_fit(const CompressedDataset& data, const ModelSpec& spec, const ChainConfig& config) {
  if (data.empty()) throw ConfigError("full-data fit needs a non-empty dataset");
  FullFitResult out;
  if (data.total_individuals() > 20000) {
    out.warnings.push_back(fmt::format("full-data fit on {} individuals will be slow; consider the subsample pipeline",
                                       data.total_individuals()));
  }
  out.draws = run_subposterior_mcmc(data, spec, config, 0);
  for (std::size_t j = 0; j < out.draws.names.size(); ++j) {
    out.rows.push_back({out.draws.names[j], summarize_column(out.draws.column(j))});
  }
  return out;
}

std::vector<AuditRow> robustness_audit(const std::vector<SubsampleResult>& results,
                                       const std::vector<std::size_t>& subset_sizes, int repeats, std::uint64_t seed,
                                       CombinationRule rule) {
  if (repeats < 1) throw ConfigError("audit needs at least one repeat");
  std::vector<const SubsampleResult*> all;
  for (const auto& r : results) all.push_back(&r);
  const Moments reference = combined_moments(all, rule);
  const auto& names = std::find_if(results.begin(), results.end(), [](const auto& r) { return !r.depleted; })->names;

  std::vector<AuditRow> out;
  for (const std::size_t size : subset_sizes) {
    if (size < 1 || size > results.size()) {
      throw ConfigError(fmt::format("audit subset size {} exceeds the {} available subsamples", size, results.size()));
    }
    std::vector<double> se_mean(names.size(), 0.0);
    std::vector<double> se_sd(names.size(), 0.0);
    int counted = 0;
    for (int rep = 0; rep < repeats; ++rep) {
      Stream stream(seed, {tag(StreamDomain::audit), size, static_cast<std::uint64_t>(rep)});
      std::vector<std::size_t> idx(results.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.below(results.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(size);
      std::sort(idx.begin(), idx.end());
      std::vector<const SubsampleResult*> chosen;
      for (const auto i : idx) chosen.push_back(&results[i]);
      Moments mo;
      try {
        mo = combined_moments(chosen, rule);
      } catch (const DepletionError&) {
        continue;
      }
      ++counted;
      for (std::size_t j = 0; j < names.size(); ++j) {
        se_mean[j] += (mo.mean[j] - reference.mean[j]) * (mo.mean[j] - reference.mean[j]);
        se_sd[j] += (mo.sd[j] - reference.sd[j]) * (mo.sd[j] - reference.sd[j]);
      }
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      AuditRow row;
      row.subset_size = size;
      row.parameter = names[j];
      row.rmse_mean = counted > 0 ? std::sqrt(se_mean[j] / counted) : std::nan("");
      row.rmse_sd = counted > 0 ? std::sqrt(se_sd[j] / counted) : std::nan("");
      out.push_back(row);
    }
  }
  return out;
}

std::vector<SubsampleResult> load_run_results(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ConfigError("no run directory at " + run_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("subsample_", 0) == 0 &&
        fs::exists(entry.path() / "result.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<SubsampleResult> out;
  for (const auto& d : dirs) out.push_back(read_subsample_result(d));
  return out;
}

std::vector<AuditRow> robustness_audit(const fs::path& run_dir, const std::vector<std::size_t>& subset_sizes,
                                       int repeats, std::uint64_t seed, CombinationRule rule) {
  return robustness_audit(load_run_results(run_dir), subset_sizes, repeats, seed, rule);
}

void write_audit(const fs::path& path, const std::vector<AuditRow>& rows) {
  std::string table = "subset_size,parameter,rmse_mean,rmse_sd\n";
  for (const auto& r : rows) {
    table += fmt::format("{},{},{},{}\n", r.subset_size, r.parameter, format_number(r.rmse_mean),
                         format_number(r.rmse_sd));
  }
  write_text(path, table);
}

}  // namespace cjsis
