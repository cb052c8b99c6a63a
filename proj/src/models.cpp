#include "pollerr/models.hpp"

#include <cmath>
#include <unordered_map>

#include "pollerr/math.hpp"

namespace pollerr {

std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::Static: return "static";
    case ModelFamily::Linear: return "linear";
    case ModelFamily::RandomWalk: return "rw";
  }
  return "?";
}

ModelFamily family_from_name(const std::string& name) {
  if (name == "static" || name == "M1") return ModelFamily::Static;
  if (name == "linear" || name == "M2") return ModelFamily::Linear;
  if (name == "rw" || name == "random_walk" || name == "M3")
    return ModelFamily::RandomWalk;
  throw ConfigError("unknown model family: " + name);
}

ModelData ModelData::build(const PollDataset& data) {
  validate_dataset(data);
  ModelData md;
  md.contests.reserve(data.contests.size());
  std::unordered_map<std::string, int> index;
  for (const auto& c : data.contests) {
    index.emplace(c.contest_id, static_cast<int>(md.contests.size()));
    ContestData cd;
    cd.contest_id = c.contest_id;
    cd.v = c.v;
    md.contests.push_back(std::move(cd));
  }
  for (const auto& p : data.polls) {
    auto& cd = md.contests[index.at(p.contest_id)];
    cd.polls.push_back(p);
    cd.theta_len = std::max(cd.theta_len, p.t);
    ++md.n_polls;
  }
  for (auto& cd : md.contests) {
    cd.polls_by_day.assign(static_cast<std::size_t>(cd.theta_len) + 1, {});
    for (int i = 0; i < static_cast<int>(cd.polls.size()); ++i)
      cd.polls_by_day[cd.polls[i].t].push_back(i);
  }
  return md;
}

int ModelData::contest_index(const std::string& contest_id) const {
  for (int i = 0; i < static_cast<int>(contests.size()); ++i)
    if (contests[i].contest_id == contest_id) return i;
  return -1;
}

double poll_mean(const ModelSpec& spec, const ContestParams& params,
                 const Poll& poll, double v, long* clamp_hits) {
  long local = 0;
  long& hits = clamp_hits ? *clamp_hits : local;
  switch (spec.family) {
    case ModelFamily::Static:
      return clamp01_counted(v + params.alpha, hits);
    case ModelFamily::Linear:
      return inv_logit(logit(v) + params.alpha + params.beta * poll.t);
    case ModelFamily::RandomWalk: {
      const double theta_t =
          poll.t == 0 ? v : params.theta.at(static_cast<std::size_t>(poll.t) - 1);
      return clamp01_counted(theta_t + params.alpha, hits);
    }
  }
  return v;
}

double poll_variance(double p, long long n, double tau) {
  return p * (1.0 - p) / static_cast<double>(n) + tau * tau;
}

namespace {

double log_likelihood_impl(const ModelSpec& spec, const ParamState& params,
                           const ModelData& data, long* clamp_hits,
                           bool throw_on_degenerate) {
  double total = 0.0;
  for (std::size_t r = 0; r < data.contests.size(); ++r) {
    const auto& cd = data.contests[r];
    const auto& cp = params.contests[r];
    for (const auto& poll : cd.polls) {
      const double p = poll_mean(spec, cp, poll, cd.v, clamp_hits);
      const double binom_p = spec.plug_in_likelihood ? poll.y : p;
      const double var = poll_variance(binom_p, poll.n, cp.tau);
      if (!(var > 0.0)) {
        if (throw_on_degenerate)
          throw DegenerateLikelihoodError(
              "zero total variance for a poll in contest " + cd.contest_id);
        return neg_inf;
      }
      total += normal_lpdf_var(poll.y, p, var);
    }
  }
  return total;
}

}  // namespace

double log_likelihood(const ModelSpec& spec, const ParamState& params,
                      const ModelData& data, long* clamp_hits) {
  return log_likelihood_impl(spec, params, data, clamp_hits, true);
}

double log_likelihood_safe(const ModelSpec& spec, const ParamState& params,
                           const ModelData& data, long* clamp_hits) noexcept {
  return log_likelihood_impl(spec, params, data, clamp_hits, false);
}

double log_prior(const ModelSpec& spec, const ParamState& params,
                 const ModelData& data) {
  const auto& hp = spec.hyperpriors;
  const auto& fx = spec.fixed;

  if (params.sigma_alpha < 0.0 || params.sigma_tau < 0.0 ||
      params.sigma_gamma < 0.0 || params.sigma_beta < 0.0)
    return neg_inf;

  double total = 0.0;
  for (std::size_t r = 0; r < data.contests.size(); ++r) {
    const auto& cd = data.contests[r];
    const auto& cp = params.contests[r];
    if (cp.tau < 0.0 || cp.gamma < 0.0) return neg_inf;

    total += normal_lpdf(cp.alpha, params.mu_alpha, params.sigma_alpha);
    if (!fx.tau) total += half_normal_lpdf(cp.tau, params.sigma_tau);
    if (spec.family == ModelFamily::Linear && !fx.beta)
      total += normal_lpdf(cp.beta, params.mu_beta, params.sigma_beta);
    if (spec.family == ModelFamily::RandomWalk) {
      if (!fx.gamma) total += half_normal_lpdf(cp.gamma, params.sigma_gamma);
      const double g = std::max(cp.gamma, gamma_floor);
      double prev = cd.v;  // theta_{r,0} := v_r
      for (double th : cp.theta) {
        total += normal_lpdf(th, prev, g);
        prev = th;
      }
    }
    if (!std::isfinite(total)) return neg_inf;
  }

  if (!fx.mu_alpha) total += normal_lpdf(params.mu_alpha, 0.0, hp.mu_alpha_sd);
  if (!fx.sigma_alpha)
    total += half_normal_lpdf(params.sigma_alpha, hp.sigma_alpha_scale);
  if (!fx.sigma_tau)
    total += half_normal_lpdf(params.sigma_tau, hp.sigma_tau_scale);
  if (spec.family == ModelFamily::RandomWalk && !fx.sigma_gamma)
    total += half_normal_lpdf(params.sigma_gamma, hp.sigma_gamma_scale);
  if (spec.family == ModelFamily::Linear) {
    if (!fx.mu_beta) total += normal_lpdf(params.mu_beta, 0.0, hp.mu_beta_sd);
    if (!fx.sigma_beta)
      total += half_normal_lpdf(params.sigma_beta, hp.sigma_beta_scale);
  }
  return total;
}

double election_day_error(const ModelSpec& spec, double alpha, double v) {
  if (spec.family == ModelFamily::Linear)
    return 100.0 * (inv_logit(logit(v) + alpha) - v);
  return 100.0 * alpha;
}

double excess_moe(double tau) { return 100.0 * 2.0 * tau; }

}  // namespace pollerr
