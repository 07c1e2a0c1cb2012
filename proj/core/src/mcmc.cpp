#include "cjsis/mcmc.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/parallel.hpp"

namespace cjsis {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kJointTarget = 0.234;
constexpr std::uint64_t kJointRefresh = 100;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double empirical_resight_rate(const std::vector<LinearPredictorPlan>& plans) {
  double seen = 0.0;
  double known_alive = 0.0;
  for (const auto& plan : plans) {
    for (Occasion t = plan.first + 1; t <= plan.last; ++t) {
      seen += plan.seen[static_cast<std::size_t>(t - 1)];
      known_alive += 1.0;
    }
  }
  if (known_alive == 0.0) return 0.5;
  return std::clamp(seen / known_alive, 0.01, 0.99);
}

double eps_log_density(const std::vector<double>& eps, double sigma) {
  if (!(sigma > 0.0)) {
    for (const double e : eps) {
      if (e != 0.0) return kNegInf;
    }
    return 0.0;
  }
  double acc = 0.0;
  for (const double e : eps) acc += normal_logpdf(e, 0.0, sigma);
  return acc;
}

}  // namespace

void ChainConfig::validate() const {
  if (chains < 1) throw ConfigError("need at least one chain");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (retained_per_chain() < 100) throw ConfigError("(iterations - burn_in) / thin must be at least 100");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target acceptance must lie in (0, 1)");
  if (adaptation_window < 0) throw ConfigError("adaptation window must be non-negative");
}

std::string ChainConfig::digest() const {
  const std::string canonical =
      fmt::format("chains={};iterations={};burn_in={};thin={};adapt={};target={:.17g};init={};seed={}", chains,
                  iterations, burn_in, thin, adaptation_window, target_accept, static_cast<int>(init), seed);
  return fmt::format("{:016x}", fnv1a(canonical));
}

std::vector<double> DrawSet::column(std::size_t parameter) const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& theta : draws) out.push_back(parameter_value(spec, theta, parameter));
  return out;
}

double joint_log_posterior(const ModelSpec& spec, const std::vector<LinearPredictorPlan>& plans, const Theta& theta,
                           const std::vector<double>& eps) {
  const ConditionalLikelihood lik(spec, theta);
  double acc = 0.0;
  for (std::size_t j = 0; j < plans.size(); ++j) acc += lik.loglik(plans[j], spec.random_effect ? eps[j] : 0.0);
  if (spec.random_effect) acc += eps_log_density(eps, theta.sigma_eps);
  return acc + prior_logpdf(theta, spec);
}

Theta draw_from_prior(const ModelSpec& spec, int num_occasions, Stream& stream) {
  const Priors& pr = spec.priors;
  auto normal = [&](const NormalPrior& n) { return n.mean + pr.sd_of(n) * stream.normal(); };
  auto uniform = [&](const UniformPrior& u) { return u.lower + (u.upper - u.lower) * stream.uniform(); };
  Theta theta = default_theta(spec, num_occasions);
  if (spec.survival == SurvivalStructure::constant) {
    theta.alpha[0] = normal(pr.alpha);
  } else {
    for (std::size_t a = 1; a < theta.alpha.size(); ++a) theta.alpha[a] = normal(pr.alpha_age);
    theta.mu_beta = normal(pr.mu_beta);
    theta.sigma_beta = uniform(pr.sigma_beta);
    for (auto& b : theta.beta) b = theta.mu_beta + theta.sigma_beta * stream.normal();
  }
  for (auto& p : theta.p) p = uniform(pr.p);
  if (spec.samples_sigma_eps()) theta.sigma_eps = uniform(pr.sigma_eps);
  return theta;
}

SubposteriorSampler::SubposteriorSampler(ModelSpec spec, int num_occasions,
                                         const std::vector<CaptureHistory>& individuals, const ChainConfig& config,
                                         std::uint64_t subsample, std::uint64_t chain)
    : spec_(std::move(spec)),
      num_occasions_(num_occasions),
      config_(config),
      subsample_(subsample),
      chain_(chain),
      stream_(config.seed, {tag(StreamDomain::chain), subsample, chain}) {
  spec_.validate();
  if (individuals.empty()) throw SamplerError("cannot sample a subposterior without data");
  plans_.reserve(individuals.size());
  for (const auto& h : individuals) plans_.emplace_back(spec_, h);
  eps_.assign(plans_.size(), 0.0);
  ll_.assign(plans_.size(), 0.0);
  scratch_.assign(plans_.size(), 0.0);
  theta_ = default_theta(spec_, num_occasions_);

  if (spec_.survival == SurvivalStructure::constant) {
    blocks_.push_back({"alpha", Kind::alpha, 0});
  } else {
    for (std::size_t a = 1; a < spec_.survival_age_bounds.size(); ++a) {
      blocks_.push_back({"alpha_" + std::to_string(spec_.survival_age_bounds[a]), Kind::alpha, a});
    }
    for (int t = 0; t < num_occasions_ - 1; ++t) {
      blocks_.push_back({"beta_" + std::to_string(t + 1), Kind::beta, static_cast<std::size_t>(t)});
    }
  }
  for (int c = 0; c < spec_.num_p(); ++c) {
    const std::string name =
        spec_.capture == CaptureStructure::constant ? "p" : "p_" + std::to_string(spec_.capture_age_bounds[c]);
    blocks_.push_back({name, Kind::p, static_cast<std::size_t>(c)});
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) joint_members_.push_back(b);
  if (joint_members_.size() > 1) {
    const auto d = static_cast<double>(joint_members_.size());
    blocks_.push_back({"fixed_effects", Kind::fixed_joint, 0, std::log(2.38 / std::sqrt(d))});
    joint_mean_.assign(joint_members_.size(), 0.0);
    joint_m2_.assign(joint_members_.size() * joint_members_.size(), 0.0);
  } else {
    joint_members_.clear();
  }
  if (spec_.samples_sigma_eps()) {
    blocks_.push_back({"sigma_eps", Kind::sigma_centered, 0});
    blocks_.push_back({"sigma_eps_rescale", Kind::sigma_rescale, 0});
  }
  if (spec_.hierarchical_beta()) {
    blocks_.push_back({"mu_beta", Kind::mu_beta, 0});
    blocks_.push_back({"sigma_beta", Kind::sigma_beta, 0});
  }
}

double SubposteriorSampler::eps_prior(double sigma) const {
  return spec_.random_effect ? eps_log_density(eps_, sigma) : 0.0;
}

double SubposteriorSampler::evaluate_all(const Theta& theta, const std::vector<double>& eps, std::vector<double>& out) {
  const ConditionalLikelihood lik(spec_, theta);
  parallel_for(plans_.size(), [&](std::size_t j) { out[j] = lik.loglik(plans_[j], eps[j]); });
  evaluations_ += plans_.size();
  double acc = 0.0;
  for (const double v : out) acc += v;
  return acc;
}

void SubposteriorSampler::refresh_likelihood() { evaluate_all(theta_, eps_, ll_); }

void SubposteriorSampler::set_state(Theta theta, std::vector<double> eps) {
  validate_theta(spec_, num_occasions_, theta);
  if (eps.size() != plans_.size()) throw SamplerError("random effect vector has the wrong length");
  theta_ = std::move(theta);
  eps_ = std::move(eps);
  if (!spec_.random_effect) std::fill(eps_.begin(), eps_.end(), 0.0);
  refresh_likelihood();
}

void SubposteriorSampler::initialize() {
  Stream init(config_.seed, {tag(StreamDomain::init), subsample_, chain_});
  auto finite_start = [&] { return std::isfinite(log_posterior()); };

  if (config_.init == InitRule::standard) {
    Theta theta = default_theta(spec_, num_occasions_);
    std::fill(theta.p.begin(), theta.p.end(), empirical_resight_rate(plans_));
    if (spec_.samples_sigma_eps()) {
      theta.sigma_eps = 0.25 * (spec_.priors.sigma_eps.lower + spec_.priors.sigma_eps.upper);
    }
    if (spec_.hierarchical_beta()) {
      theta.sigma_beta = 0.25 * (spec_.priors.sigma_beta.lower + spec_.priors.sigma_beta.upper);
    }
    set_state(std::move(theta), std::vector<double>(plans_.size(), 0.0));
    if (finite_start()) return;
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    Theta theta = draw_from_prior(spec_, num_occasions_, init);
    if (spec_.samples_sigma_eps() && theta.sigma_eps <= 0.0) continue;
    set_state(std::move(theta), std::vector<double>(plans_.size(), 0.0));
    if (finite_start()) return;
  }
  throw SamplerError("non-finite log-posterior at initialization; try a different init rule");
}

void SubposteriorSampler::replace_histories(const std::vector<CaptureHistory>& individuals) {
  if (individuals.size() != plans_.size()) throw SamplerError("replacement data must keep the individual count");
  for (std::size_t j = 0; j < plans_.size(); ++j) plans_[j] = LinearPredictorPlan(spec_, individuals[j]);
  refresh_likelihood();
}

double SubposteriorSampler::log_posterior() const {
  double acc = 0.0;
  for (const double v : ll_) acc += v;
  return acc + eps_prior(theta_.sigma_eps) + prior_logpdf(theta_, spec_);
}

void SubposteriorSampler::adapt_scale(double& log_scale, double acceptance, std::uint64_t n) const {
  const double gain = std::min(0.5, 1.0 / std::pow(static_cast<double>(n) + 1.0, 0.6));
  log_scale = std::clamp(log_scale + gain * (acceptance - config_.target_accept), -12.0, 4.0);
}

void SubposteriorSampler::update_random_effects(bool adapt) {
  if (!spec_.random_effect || plans_.empty()) return;
  const double sigma = theta_.sigma_eps;
  if (!(sigma > 0.0)) return;
  const ConditionalLikelihood lik(spec_, theta_);
  const double step = std::exp(eps_log_scale_) * sigma;
  std::vector<std::uint8_t> accepted(plans_.size(), 0);
  parallel_for(plans_.size(), [&](std::size_t j) {
    Stream s(config_.seed, {tag(StreamDomain::random_effect), subsample_, chain_, iteration_, j});
    const double current = eps_[j];
    const double proposal = current + step * s.normal();
    const double ll = lik.loglik(plans_[j], proposal);
    const double log_ratio = ll - ll_[j] + normal_logpdf(proposal, 0.0, sigma) - normal_logpdf(current, 0.0, sigma);
    if (std::log(s.uniform()) < log_ratio) {
      eps_[j] = proposal;
      ll_[j] = ll;
      accepted[j] = 1;
    }
  });
  evaluations_ += plans_.size();
  std::uint64_t count = 0;
  for (const auto a : accepted) count += a;
  eps_proposed_ += plans_.size();
  eps_accepted_ += count;
  if (adapt) {
    adapt_scale(eps_log_scale_, static_cast<double>(count) / static_cast<double>(plans_.size()), iteration_);
  }
}

std::vector<double> SubposteriorSampler::joint_coordinates(const Theta& theta) const {
  std::vector<double> u;
  u.reserve(joint_members_.size());
  for (const std::size_t b : joint_members_) {
    const auto& m = blocks_[b];
    if (m.kind == Kind::alpha) u.push_back(theta.alpha[m.index]);
    if (m.kind == Kind::beta) u.push_back(theta.beta[m.index]);
    if (m.kind == Kind::p) u.push_back(logit(theta.p[m.index]));
  }
  return u;
}

void SubposteriorSampler::learn_joint_covariance() {
  const std::size_t d = joint_members_.size();
  const auto u = joint_coordinates(theta_);
  ++joint_samples_;
  const double n = static_cast<double>(joint_samples_);
  std::vector<double> delta(d);
  for (std::size_t i = 0; i < d; ++i) {
    delta[i] = u[i] - joint_mean_[i];
    joint_mean_[i] += delta[i] / n;
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) joint_m2_[i * d + k] += delta[i] * (u[k] - joint_mean_[k]);
  }
  if (joint_samples_ < std::max<std::uint64_t>(kJointRefresh, 10 * d) || joint_samples_ % kJointRefresh != 0) return;
  Eigen::MatrixXd cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) cov(i, k) = joint_m2_[i * d + k] / (n - 1.0);
    cov(i, i) += 1e-10;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return;
  const Eigen::MatrixXd L = llt.matrixL();
  const bool first = joint_chol_.empty();
  joint_chol_.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k <= i; ++k) joint_chol_[i * d + k] = L(i, k);
  }
  if (first) {
    // Scale semantics change once a covariance exists; restart from the usual d-dimensional value.
    for (auto& b : blocks_) {
      if (b.kind == Kind::fixed_joint) b.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    }
  }
}

void SubposteriorSampler::update_joint(Block& block, bool adapt) {
  const std::size_t d = joint_members_.size();
  std::vector<double> z(d);
  for (auto& v : z) v = stream_.normal();
  const double log_u = std::log(stream_.uniform());
  const double scale = std::exp(block.log_scale);
  // Until a covariance is learned, the single-site scales stand in for a diagonal one.
  std::vector<double> step(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (joint_chol_.empty()) {
      step[i] = scale * std::exp(blocks_[joint_members_[i]].log_scale) * z[i];
    } else {
      for (std::size_t k = 0; k <= i; ++k) step[i] += scale * joint_chol_[i * d + k] * z[k];
    }
  }
  Theta proposal = theta_;
  double log_ratio = 0.0;
  bool valid = true;
  for (std::size_t i = 0; i < d; ++i) {
    const auto& m = blocks_[joint_members_[i]];
    if (m.kind == Kind::alpha) proposal.alpha[m.index] += step[i];
    if (m.kind == Kind::beta) proposal.beta[m.index] += step[i];
    if (m.kind == Kind::p) {
      const double current = theta_.p[m.index];
      const double next = logistic(logit(current) + step[i]);
      if (!(next > 0.0 && next < 1.0)) valid = false;
      proposal.p[m.index] = next;
      log_ratio += std::log(next) + std::log1p(-next) - std::log(current) - std::log1p(-current);
    }
  }
  bool accepted = false;
  const double prior_diff = valid ? prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_) : kNegInf;
  if (std::isfinite(prior_diff)) {
    double ll_current = 0.0;
    for (const double v : ll_) ll_current += v;
    const double ll_proposal = evaluate_all(proposal, eps_, scratch_);
    log_ratio += ll_proposal - ll_current + prior_diff;
    if (log_u < log_ratio) {
      theta_ = std::move(proposal);
      ll_.swap(scratch_);
      accepted = true;
    }
  }
  ++block.proposed;
  if (accepted) ++block.accepted;
  if (adapt) {
    const double gain = std::min(0.5, 1.0 / std::pow(static_cast<double>(block.proposed) + 1.0, 0.6));
    block.log_scale = std::clamp(block.log_scale + gain * ((accepted ? 1.0 : 0.0) - kJointTarget), -12.0, 4.0);
  }
}

void SubposteriorSampler::update_block(Block& block, bool adapt) {
  if (block.kind == Kind::fixed_joint) {
    update_joint(block, adapt);
    return;
  }
  const double z = stream_.normal();
  const double step = std::exp(block.log_scale) * z;
  const double log_u = std::log(stream_.uniform());
  Theta proposal = theta_;
  double log_ratio = 0.0;
  bool accepted = false;

  switch (block.kind) {
    case Kind::alpha:
    case Kind::beta:
    case Kind::p: {
      if (block.kind == Kind::alpha) proposal.alpha[block.index] += step;
      if (block.kind == Kind::beta) proposal.beta[block.index] += step;
      if (block.kind == Kind::p) {
        const double current = theta_.p[block.index];
        const double next = logistic(logit(current) + step);
        if (!(next > 0.0 && next < 1.0)) break;
        proposal.p[block.index] = next;
        // Jacobian of the logit transform.
        log_ratio += std::log(next) + std::log1p(-next) - std::log(current) - std::log1p(-current);
      }
      const double prior_diff = prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_);
      if (!std::isfinite(prior_diff)) break;
      double ll_current = 0.0;
      for (const double v : ll_) ll_current += v;
      const double ll_proposal = evaluate_all(proposal, eps_, scratch_);
      log_ratio += ll_proposal - ll_current + prior_diff;
      if (log_u < log_ratio) {
        theta_ = std::move(proposal);
        ll_.swap(scratch_);
        accepted = true;
      }
      break;
    }
    case Kind::fixed_joint:
      break;
    case Kind::sigma_centered: {
      const double current = theta_.sigma_eps;
      const double next = current * std::exp(step);
      proposal.sigma_eps = next;
      const double prior_diff = prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_);
      if (!std::isfinite(prior_diff)) break;
      log_ratio = eps_prior(next) - eps_prior(current) + prior_diff + std::log(next) - std::log(current);
      if (log_u < log_ratio) {
        theta_ = std::move(proposal);
        accepted = true;
      }
      break;
    }
    case Kind::sigma_rescale: {
      // Moves sigma with eps / sigma fixed; the eps prior terms cancel against the Jacobian.
      const double current = theta_.sigma_eps;
      const double next = current * std::exp(step);
      proposal.sigma_eps = next;
      const double prior_diff = prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_);
      if (!std::isfinite(prior_diff)) break;
      std::vector<double> eps_next(eps_.size());
      const double ratio = next / current;
      for (std::size_t j = 0; j < eps_.size(); ++j) eps_next[j] = eps_[j] * ratio;
      double ll_current = 0.0;
      for (const double v : ll_) ll_current += v;
      const double ll_proposal = evaluate_all(proposal, eps_next, scratch_);
      log_ratio = ll_proposal - ll_current + prior_diff + std::log(next) - std::log(current);
      if (log_u < log_ratio) {
        theta_ = std::move(proposal);
        eps_ = std::move(eps_next);
        ll_.swap(scratch_);
        accepted = true;
      }
      break;
    }
    case Kind::mu_beta: {
      proposal.mu_beta += step;
      log_ratio = prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_);
      if (log_u < log_ratio) {
        theta_ = std::move(proposal);
        accepted = true;
      }
      break;
    }
    case Kind::sigma_beta: {
      const double current = theta_.sigma_beta;
      const double next = current * std::exp(step);
      proposal.sigma_beta = next;
      log_ratio = prior_logpdf(proposal, spec_) - prior_logpdf(theta_, spec_) + std::log(next) - std::log(current);
      if (std::isfinite(log_ratio) && log_u < log_ratio) {
        theta_ = std::move(proposal);
        accepted = true;
      }
      break;
    }
  }

  ++block.proposed;
  if (accepted) ++block.accepted;
  if (adapt) adapt_scale(block.log_scale, accepted ? 1.0 : 0.0, block.proposed);
}

void SubposteriorSampler::iterate(bool adapt) {
  update_random_effects(adapt);
  for (auto& block : blocks_) update_block(block, adapt);
  if (adapt && !joint_members_.empty()) learn_joint_covariance();
  ++iteration_;
}

std::vector<std::pair<std::string, double>> SubposteriorSampler::acceptance_rates() const {
  std::vector<std::pair<std::string, double>> out;
  auto rate = [](std::uint64_t a, std::uint64_t n) { return n == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(n); };
  if (spec_.random_effect) out.emplace_back("eps", rate(eps_accepted_, eps_proposed_));
  for (const auto& b : blocks_) out.emplace_back(b.name, rate(b.accepted, b.proposed));
  return out;
}

DrawSet run_subposterior_mcmc(const CompressedDataset& x1, const ModelSpec& spec, const ChainConfig& config,
                              int subsample) {
  config.validate();
  spec.validate();
  if (x1.empty()) throw SamplerError("cannot sample a subposterior without data");
  const int num_occasions = x1.num_occasions();
  const auto individuals = x1.expand();
  const int adapt_until = config.adaptation_window > 0 ? std::min(config.adaptation_window, config.burn_in) : config.burn_in;

  struct ChainOutput {
    std::vector<Theta> draws;
    std::vector<double> log_posterior;
    std::vector<std::vector<double>> eps;
    std::vector<std::pair<std::string, double>> acceptance;
    std::uint64_t evaluations = 0;
  };
  std::vector<ChainOutput> outputs(static_cast<std::size_t>(config.chains));
  parallel_for(outputs.size(), [&](std::size_t c) {
    SubposteriorSampler sampler(spec, num_occasions, individuals, config, static_cast<std::uint64_t>(subsample), c);
    sampler.initialize();
    auto& out = outputs[c];
    for (int it = 0; it < config.iterations; ++it) {
      sampler.iterate(it < adapt_until);
      if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
        out.draws.push_back(sampler.theta());
        out.log_posterior.push_back(sampler.log_posterior());
        if (config.keep_random_effects) out.eps.push_back(sampler.random_effects());
      }
    }
    out.acceptance = sampler.acceptance_rates();
    out.evaluations = sampler.likelihood_evaluations();
  });

  DrawSet set;
  set.spec = spec;
  set.num_occasions = num_occasions;
  set.names = parameter_names(spec, num_occasions);
  set.subsample = subsample;
  set.config_digest = config.digest();
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    auto& out = outputs[c];
    for (std::size_t k = 0; k < out.draws.size(); ++k) {
      set.draws.push_back(std::move(out.draws[k]));
      set.chain.push_back(static_cast<int>(c));
      set.log_posterior.push_back(out.log_posterior[k]);
      if (config.keep_random_effects) set.random_effects.push_back(std::move(out.eps[k]));
    }
    set.likelihood_evaluations += out.evaluations;
  }
  for (std::size_t i = 0; i < outputs.front().acceptance.size(); ++i) {
    double acc = 0.0;
    for (const auto& out : outputs) acc += out.acceptance[i].second;
    set.acceptance.emplace_back(outputs.front().acceptance[i].first, acc / static_cast<double>(outputs.size()));
  }
  for (std::size_t j = 0; j < set.names.size(); ++j) {
    const auto column = set.column(j);
    double ess = 0.0;
    std::size_t start = 0;
    for (const auto& out : outputs) {
      const std::span<const double> trace(column.data() + start, out.draws.size());
      ess += autocorrelation_ess(trace);
      start += out.draws.size();
    }
    set.ess.push_back(ess);
  }
  return set;
}

}  // namespace cjsis
