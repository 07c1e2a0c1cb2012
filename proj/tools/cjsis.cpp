// Command-line front end for the subsample-and-reweight CJS pipeline.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cjsis/artifacts.hpp"
#include "cjsis/error.hpp"
#include "cjsis/parallel.hpp"
#include "cjsis/pipeline.hpp"
#include "cjsis/simulate.hpp"

namespace fs = std::filesystem;
using namespace cjsis;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON config file");
  cmd->add_option("--set", c.overrides, "Override a config field, e.g. mcmc.iterations=2000")->allow_extra_args(false);
  cmd->add_option("-w,--workers", c.workers, "Worker threads (default: CJSIS_WORKERS or all cores)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig load(const Common& c, std::vector<std::string> extra = {}) {
  std::vector<std::string> overrides = std::move(extra);
  overrides.insert(overrides.end(), c.overrides.begin(), c.overrides.end());
  auto config = parse_pipeline_config(c.config.empty() ? std::string("{}") : read_file(c.config), overrides);
  if (c.workers > 0) config.workers = c.workers;
  set_worker_budget(config.workers);
  return config;
}

std::string json_string(const std::string& s) { return "\"" + s + "\""; }

void print_rows(const std::vector<CombinedRow>& rows) {
  std::cout << fmt::format("{:<14}{:>12}{:>12}{:>12}{:>12}{:>12}\n", "parameter", "mean", "sd", "q2.5", "q50", "q97.5");
  for (const auto& r : rows) {
    const auto& s = r.summary;
    std::cout << fmt::format("{:<14}{:>12.5f}{:>12.5f}{:>12.5f}{:>12.5f}{:>12.5f}\n", r.parameter, s.mean, s.sd, s.q025,
                             s.q50, s.q975);
  }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<std::size_t>(std::stoul(item)));
    } catch (const std::exception&) {
      throw ConfigError("bad subset size '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("no subset sizes given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subsample, fit and importance-reweight CJS models with individual survival effects"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  Common sim_common;
  std::string sim_out = "data.csv";
  std::int64_t sim_individuals = 0;
  int sim_occasions = 0;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Simulate capture histories from the model");
  add_common(sim, sim_common);
  sim->add_option("-o,--out", sim_out, "Output CSV (a .truth.json sidecar is written next to it)");
  sim->add_option("--individuals", sim_individuals, "Number of individuals");
  sim->add_option("--occasions", sim_occasions, "Number of capture occasions T");
  sim->add_option("--seed", sim_seed, "Simulation seed");

  // subsample
  Common sub_common;
  std::string sub_data;
  std::string sub_out = ".";
  int sub_m = 0;
  auto* sub = app.add_subcommand("subsample", "Draw stratified subsamples x1 and their complements x2");
  add_common(sub, sub_common);
  sub->add_option("-d,--data", sub_data, "Capture-history CSV (overrides data.path)");
  sub->add_option("-m,--index", sub_m, "Only draw subsample m (1-based); default all M");
  sub->add_option("-o,--out", sub_out, "Directory receiving subsample_NNN/");

  // fit
  Common fit_common;
  std::string fit_dir;
  auto* fit = app.add_subcommand("fit", "Run the subposterior MCMC on one subsample directory");
  add_common(fit, fit_common);
  fit->add_option("dir", fit_dir, "Subsample directory holding x1.csv and subsample.json")->required();

  // weights
  Common w_common;
  std::string w_dir;
  auto* weights = app.add_subcommand("weights", "Importance weights and corrected summaries for one subsample");
  add_common(weights, w_common);
  weights->add_option("dir", w_dir, "Subsample directory holding draws and x2.csv")->required();

  // combine
  std::string comb_run;
  std::string comb_rule = "equal";
  auto* comb = app.add_subcommand("combine", "Combine the corrected posteriors of a run directory");
  comb->add_option("run", comb_run, "Run directory")->required();
  comb->add_option("-r,--rule", comb_rule, "equal | inv_var | ess");

  // run
  Common run_common;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Full pipeline: subsample, fit, weight, combine");
  add_common(run, run_common);
  run->add_flag("--dry-run", dry_run, "Validate the config and print the plan only");

  // full-fit
  Common full_common;
  std::string full_data;
  std::string full_out = "full_fit.csv";
  auto* full = app.add_subcommand("full-fit", "Reference MCMC on the whole dataset");
  add_common(full, full_common);
  full->add_option("-d,--data", full_data, "Capture-history CSV (overrides data.path)");
  full->add_option("-o,--out", full_out, "Summary CSV");

  // audit
  std::string audit_run;
  std::string audit_sizes = "25,50";
  int audit_repeats = 100;
  std::uint64_t audit_seed = 1;
  std::string audit_rule = "equal";
  std::string audit_out;
  auto* audit = app.add_subcommand("audit", "RMSE of subset combinations against the all-M combination");
  audit->add_option("run", audit_run, "Run directory")->required();
  audit->add_option("--sizes", audit_sizes, "Comma-separated subset sizes");
  audit->add_option("--repeats", audit_repeats, "Random subsets per size");
  audit->add_option("--seed", audit_seed, "Seed for subset selection");
  audit->add_option("-r,--rule", audit_rule, "equal | inv_var | ess");
  audit->add_option("-o,--out", audit_out, "Output CSV (default <run>/audit.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      std::vector<std::string> extra;
      if (sim_individuals > 0) extra.push_back(fmt::format("data.simulate.individuals={}", sim_individuals));
      if (sim_occasions > 0) extra.push_back(fmt::format("data.simulate.occasions={}", sim_occasions));
      if (sim_seed > 0) extra.push_back(fmt::format("data.simulate.seed={}", sim_seed));
      extra.insert(extra.begin(), "data.path=null");
      if (sim_common.config.empty()) extra.insert(extra.begin(), "data.simulate={}");
      const PipelineConfig config = load(sim_common, extra);
      const CompressedDataset data = resolve_dataset(config);
      write_dataset(fs::path(sim_out), data);
      fs::path sidecar = fs::path(sim_out);
      sidecar.replace_extension(".truth.json");
      const auto names = parameter_names(config.model, config.simulate->occasions);
      const auto values = flatten(config.model, config.simulate->truth);
      std::string json = "{\n  \"seed\": " + std::to_string(config.simulate->seed) + ",\n  \"theta\": {";
      for (std::size_t i = 0; i < names.size(); ++i) {
        json += (i ? ", " : "") + json_string(names[i]) + ": " + format_number(values[i]);
      }
      json += "}\n}\n";
      write_text(sidecar, json);
      std::cout << fmt::format("wrote {} individuals ({} distinct histories) to {}\n", data.total_individuals(),
                               data.num_entries(), sim_out);
      return 0;
    }

    if (*sub) {
      std::vector<std::string> extra;
      if (!sub_data.empty()) extra = {"data.simulate=null", "data.path=" + json_string(sub_data)};
      const PipelineConfig config = load(sub_common, extra);
      const CompressedDataset data = resolve_dataset(config);
      const int first = sub_m > 0 ? sub_m : 1;
      const int last = sub_m > 0 ? sub_m : config.subsample.num_subsamples;
      for (int m = first; m <= last; ++m) {
        const Subsample s = draw_subsample(data, config.subsample, m);
        const fs::path dir = fs::path(sub_out) / subsample_dir_name(m);
        write_subsample(dir, s, config.subsample);
        std::cout << fmt::format("{}: |x1| = {}, |x2| = {}, {} strata\n", dir.string(), s.x1.total_individuals(),
                                 s.x2.total_individuals(), s.strata.size());
      }
      return 0;
    }

    if (*fit) {
      const PipelineConfig config = load(fit_common, {"data.simulate=null", "data.path=\"x1.csv\""});
      const fs::path dir(fit_dir);
      const CompressedDataset x1 = read_dataset(dir / "x1.csv");
      int m = 0;
      if (fs::exists(dir / "subsample.json")) {
        std::ifstream in(dir / "subsample.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const auto pos = text.find("\"subsample\":");
        if (pos != std::string::npos) m = std::stoi(text.substr(pos + 12));
      }
      const DrawSet draws = run_subposterior_mcmc(x1, config.model, config.mcmc, m);
      write_draws(dir, draws);
      std::cout << fmt::format("{} draws written to {}\n", draws.size(), (dir / "draws.csv").string());
      for (const auto& [name, rate] : draws.acceptance) std::cout << fmt::format("  accept {:<20} {:.3f}\n", name, rate);
      return 0;
    }

    if (*weights) {
      const PipelineConfig config = load(w_common, {"data.simulate=null", "data.path=\"x2.csv\""});
      const fs::path dir(w_dir);
      const DrawSet draws = read_draws(dir);
      const CompressedDataset x2 = read_dataset(dir / "x2.csv");
      try {
        const WeightedDraws wd = compute_weights(draws, x2, config.weights);
        write_weights(dir, wd, config.weights);
        Stream resample(config.seed, {tag(StreamDomain::resample), static_cast<std::uint64_t>(draws.subsample)});
        auto result = summarize_subsample(wd, config.resample, resample);
        result.index = draws.subsample;
        write_subsample_result(dir, result);
        std::cout << fmt::format("ess {:.1f}, {} weights above {}\n", wd.ess, wd.n_nonneg, config.weights.threshold);
      } catch (const DepletionError& e) {
        write_subsample_result(dir, failed_subsample(draws.subsample, draws.names, e.what()));
        std::cerr << "warning: " << e.what() << "\n";
      }
      return 0;
    }

    if (*comb) {
      const auto results = load_run_results(comb_run);
      const auto rule = parse_rule(comb_rule);
      const CombinedSummary summary = combine(results, rule);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
      write_summary(fs::path(comb_run) / "summary.csv", summary.rows, to_string(rule), summary.included);
      write_dispersion(fs::path(comb_run) / "dispersion.csv", subsample_report(results));
      print_rows(summary.rows);
      return 0;
    }

    if (*run) {
      const PipelineConfig config = load(run_common);
      const RunReport report = pipeline_run(config, std::cout, dry_run);
      if (report.combined) print_rows(report.combined->rows);
      for (const auto& f : report.failures) std::cerr << "error: " << f << "\n";
      return report.exit_code();
    }

    if (*full) {
      std::vector<std::string> extra;
      if (!full_data.empty()) extra = {"data.simulate=null", "data.path=" + json_string(full_data)};
      const PipelineConfig config = load(full_common, extra);
      const CompressedDataset data = resolve_dataset(config);
      const FullFitResult result = full_data_fit(data, config.model, config.mcmc);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      write_summary(full_out, result.rows, "full_data", 1);
      print_rows(result.rows);
      return 0;
    }

    if (*audit) {
      const auto rows = robustness_audit(fs::path(audit_run), parse_sizes(audit_sizes), audit_repeats, audit_seed,
                                         parse_rule(audit_rule));
      const fs::path out = audit_out.empty() ? fs::path(audit_run) / "audit.csv" : fs::path(audit_out);
      write_audit(out, rows);
      std::cout << fmt::format("{:>6}  {:<14}{:>12}{:>12}\n", "size", "parameter", "rmse_mean", "rmse_sd");
      for (const auto& r : rows) {
        std::cout << fmt::format("{:>6}  {:<14}{:>12.5f}{:>12.5f}\n", r.subset_size, r.parameter, r.rmse_mean,
                                 r.rmse_sd);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
