#include "json_io.hpp"

#include <fstream>
#include <set>

#include "cjsis/error.hpp"

namespace cjsis::detail {
namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

json normal_json(const NormalPrior& p) { return json::array({p.mean, p.scale}); }
json uniform_json(const UniformPrior& p) { return json::array({p.lower, p.upper}); }

std::pair<double, double> pair_of(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(std::string("prior '") + key + "' must be a two-element numeric array");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown config field '" + where + "." + key + "'");
  }
}

json to_json(const ModelSpec& spec) {
  json j;
  j["survival"] = spec.survival == SurvivalStructure::constant ? "constant" : "age_time";
  j["capture"] = spec.capture == CaptureStructure::constant ? "constant" : "age";
  j["random_effect"] = spec.random_effect;
  j["fixed_sigma_eps"] = spec.fixed_sigma_eps ? json(*spec.fixed_sigma_eps) : json(nullptr);
  j["survival_age_bounds"] = spec.survival_age_bounds;
  j["capture_age_bounds"] = spec.capture_age_bounds;
  const Priors& p = spec.priors;
  j["priors"] = {{"gaussian_scale", p.gaussian_scale == GaussianScale::variance ? "variance" : "sd"},
                 {"alpha", normal_json(p.alpha)},
                 {"alpha_age", normal_json(p.alpha_age)},
                 {"p", uniform_json(p.p)},
                 {"sigma_eps", uniform_json(p.sigma_eps)},
                 {"mu_beta", normal_json(p.mu_beta)},
                 {"sigma_beta", uniform_json(p.sigma_beta)}};
  return j;
}

ModelSpec model_from_json(const json& j) {
  require_keys(j,
               {"preset", "survival", "capture", "random_effect", "fixed_sigma_eps", "survival_age_bounds",
                "capture_age_bounds", "priors"},
               "model");
  const std::string preset = get_or<std::string>(j, "preset", "constant");
  ModelSpec spec;
  if (preset == "constant") {
    spec = ModelSpec::constant_model();
  } else if (preset == "age_time") {
    spec = ModelSpec::age_time_model();
  } else {
    throw ConfigError("unknown model preset '" + preset + "'");
  }
  if (j.contains("survival")) {
    const auto s = j.at("survival").get<std::string>();
    if (s == "constant") {
      spec.survival = SurvivalStructure::constant;
    } else if (s == "age_time") {
      spec.survival = SurvivalStructure::age_time;
    } else {
      throw ConfigError("unknown survival structure '" + s + "'");
    }
  }
  if (j.contains("capture")) {
    const auto c = j.at("capture").get<std::string>();
    if (c == "constant") {
      spec.capture = CaptureStructure::constant;
    } else if (c == "age") {
      spec.capture = CaptureStructure::age;
    } else {
      throw ConfigError("unknown capture structure '" + c + "'");
    }
  }
  spec.random_effect = get_or(j, "random_effect", spec.random_effect);
  if (j.contains("fixed_sigma_eps")) {
    spec.fixed_sigma_eps =
        j.at("fixed_sigma_eps").is_null() ? std::nullopt : std::optional<double>(j.at("fixed_sigma_eps").get<double>());
  }
  spec.survival_age_bounds = get_or(j, "survival_age_bounds", spec.survival_age_bounds);
  spec.capture_age_bounds = get_or(j, "capture_age_bounds", spec.capture_age_bounds);
  if (j.contains("priors")) {
    const auto& pj = j.at("priors");
    require_keys(pj, {"gaussian_scale", "alpha", "alpha_age", "p", "sigma_eps", "mu_beta", "sigma_beta"},
                 "model.priors");
    Priors& p = spec.priors;
    if (pj.contains("gaussian_scale")) {
      const auto g = pj.at("gaussian_scale").get<std::string>();
      if (g == "variance") {
        p.gaussian_scale = GaussianScale::variance;
      } else if (g == "sd") {
        p.gaussian_scale = GaussianScale::sd;
      } else {
        throw ConfigError("gaussian_scale must be 'variance' or 'sd'");
      }
    }
    auto set_normal = [&](const char* key, NormalPrior& out) {
      if (!pj.contains(key)) return;
      const auto [a, b] = pair_of(pj, key);
      out = {a, b};
    };
    auto set_uniform = [&](const char* key, UniformPrior& out) {
      if (!pj.contains(key)) return;
      const auto [a, b] = pair_of(pj, key);
      out = {a, b};
    };
    set_normal("alpha", p.alpha);
    set_normal("alpha_age", p.alpha_age);
    set_uniform("p", p.p);
    set_uniform("sigma_eps", p.sigma_eps);
    set_normal("mu_beta", p.mu_beta);
    set_uniform("sigma_beta", p.sigma_beta);
  }
  spec.validate();
  return spec;
}

json to_json(const ChainConfig& c) {
  return {{"chains", c.chains},
          {"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"adaptation_window", c.adaptation_window},
          {"target_accept", c.target_accept},
          {"init", c.init == InitRule::standard ? "standard" : "prior"},
          {"seed", c.seed},
          {"keep_random_effects", c.keep_random_effects}};
}

ChainConfig chain_from_json(const json& j, ChainConfig c) {
  require_keys(j,
               {"chains", "iterations", "burn_in", "thin", "adaptation_window", "target_accept", "init", "seed",
                "keep_random_effects"},
               "mcmc");
  c.chains = get_or(j, "chains", c.chains);
  c.iterations = get_or(j, "iterations", c.iterations);
  c.burn_in = get_or(j, "burn_in", c.burn_in);
  c.thin = get_or(j, "thin", c.thin);
  c.adaptation_window = get_or(j, "adaptation_window", c.adaptation_window);
  c.target_accept = get_or(j, "target_accept", c.target_accept);
  c.seed = get_or(j, "seed", c.seed);
  c.keep_random_effects = get_or(j, "keep_random_effects", c.keep_random_effects);
  if (j.contains("init")) {
    const auto rule = j.at("init").get<std::string>();
    if (rule == "standard") {
      c.init = InitRule::standard;
    } else if (rule == "prior") {
      c.init = InitRule::prior;
    } else {
      throw ConfigError("init must be 'standard' or 'prior'");
    }
  }
  return c;
}

json to_json(const SubsamplePlan& plan) {
  return {{"fraction", plan.fraction},
          {"scheme", to_string(plan.scheme)},
          {"M", plan.num_subsamples},
          {"seed", plan.master_seed}};
}

SubsamplePlan subsample_from_json(const json& j, SubsamplePlan plan) {
  require_keys(j, {"fraction", "scheme", "M", "seed"}, "subsample");
  plan.fraction = get_or(j, "fraction", plan.fraction);
  if (j.contains("scheme")) plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
  plan.num_subsamples = get_or(j, "M", plan.num_subsamples);
  plan.master_seed = get_or(j, "seed", plan.master_seed);
  return plan;
}

json to_json(const WeightEstimatorConfig& c) {
  json j;
  j["method"] = to_string(c.method);
  j["particles"] = c.particles;
  j["repeated_histories"] = c.repeated_histories;
  j["multiplicity_cap"] = c.multiplicity_cap ? json(*c.multiplicity_cap) : json(nullptr);
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  if (c.two_step) {
    const auto& t = *c.two_step;
    j["two_step"] = {{"coarse_particles", t.coarse_particles},
                     {"coarse_method", to_string(t.coarse_method)},
                     {"retain_fraction", t.retain_fraction ? json(*t.retain_fraction) : json(nullptr)},
                     {"retain_count", t.retain_count ? json(*t.retain_count) : json(nullptr)},
                     {"fine_particles", t.fine_particles},
                     {"share_coarse_particles", t.share_coarse_particles}};
  } else {
    j["two_step"] = nullptr;
  }
  return j;
}

WeightEstimatorConfig weights_from_json(const json& j, WeightEstimatorConfig c) {
  require_keys(j, {"method", "particles", "repeated_histories", "multiplicity_cap", "threshold", "seed", "two_step"},
               "weights");
  if (j.contains("method")) c.method = parse_weight_method(j.at("method").get<std::string>());
  c.particles = get_or(j, "particles", c.particles);
  c.repeated_histories = get_or(j, "repeated_histories", c.repeated_histories);
  if (j.contains("multiplicity_cap")) {
    c.multiplicity_cap = j.at("multiplicity_cap").is_null()
                             ? std::nullopt
                             : std::optional<std::int64_t>(j.at("multiplicity_cap").get<std::int64_t>());
  }
  c.threshold = get_or(j, "threshold", c.threshold);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("two_step")) {
    const auto& tj = j.at("two_step");
    if (tj.is_null() || (tj.is_boolean() && !tj.get<bool>())) {
      c.two_step.reset();
    } else {
      TwoStepConfig t = c.two_step.value_or(TwoStepConfig{});
      if (!tj.is_boolean()) {
        require_keys(tj,
                     {"coarse_particles", "coarse_method", "retain_fraction", "retain_count", "fine_particles",
                      "share_coarse_particles"},
                     "weights.two_step");
        t.coarse_particles = get_or(tj, "coarse_particles", t.coarse_particles);
        if (tj.contains("coarse_method")) t.coarse_method = parse_weight_method(tj.at("coarse_method").get<std::string>());
        if (tj.contains("retain_fraction")) {
          t.retain_fraction = tj.at("retain_fraction").is_null()
                                  ? std::nullopt
                                  : std::optional<double>(tj.at("retain_fraction").get<double>());
        }
        if (tj.contains("retain_count")) {
          t.retain_count =
              tj.at("retain_count").is_null() ? std::nullopt : std::optional<int>(tj.at("retain_count").get<int>());
        }
        t.fine_particles = get_or(tj, "fine_particles", t.fine_particles);
        t.share_coarse_particles = get_or(tj, "share_coarse_particles", t.share_coarse_particles);
      }
      c.two_step = t;
    }
  }
  return c;
}

json theta_to_json(const ModelSpec& spec, int num_occasions, const Theta& theta) {
  json j = json::object();
  const auto names = parameter_names(spec, num_occasions);
  const auto values = flatten(spec, theta);
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  return j;
}

Theta theta_from_json(const ModelSpec& spec, int num_occasions, const json& j) {
  if (!j.is_object()) throw ConfigError("theta must be an object of parameter values");
  const auto names = parameter_names(spec, num_occasions);
  auto values = flatten(spec, default_theta(spec, num_occasions));
  std::set<std::string> known(names.begin(), names.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown parameter '" + key + "' for this model");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (j.contains(names[i])) values[i] = j.at(names[i]).get<double>();
  }
  Theta theta = unflatten(spec, num_occasions, values);
  validate_theta(spec, num_occasions, theta);
  return theta;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace cjsis::detail
