#include "pollerr/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "pollerr/math.hpp"

namespace pollerr::sampler {

void SamplerConfig::validate() const {
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (warmup_iters < 1 || sampling_iters < 1)
    throw ConfigError("iteration counts must be positive");
  if (adapt_window < 1) throw ConfigError("adapt_window must be positive");
  if (warmup_iters < adapt_window)
    throw ConfigError("warmup_iters must be >= adapt_window");
  if (!(target_accept_scalar > 0.0 && target_accept_scalar < 1.0))
    throw ConfigError("target_accept_scalar must lie in (0,1)");
}

int ParameterLayout::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[i] == name) return i;
  return -1;
}

ParameterLayout ParameterLayout::build(const ModelSpec& spec,
                                       const ModelData& data) {
  ParameterLayout lay;
  const auto R = data.contests.size();
  lay.alpha_idx.assign(R, -1);
  lay.tau_idx.assign(R, -1);
  lay.beta_idx.assign(R, -1);
  lay.gamma_idx.assign(R, -1);
  lay.theta_start.assign(R, -1);
  lay.theta_len.assign(R, 0);

  auto add = [&lay](const std::string& n) {
    lay.names.push_back(n);
    return static_cast<int>(lay.names.size()) - 1;
  };
  const auto& fx = spec.fixed;
  for (std::size_t r = 0; r < R; ++r) {
    const auto& id = data.contests[r].contest_id;
    lay.alpha_idx[r] = add("alpha[" + id + "]");
    if (!fx.tau) lay.tau_idx[r] = add("tau[" + id + "]");
    if (spec.family == ModelFamily::Linear && !fx.beta)
      lay.beta_idx[r] = add("beta[" + id + "]");
    if (spec.family == ModelFamily::RandomWalk && !fx.gamma)
      lay.gamma_idx[r] = add("gamma[" + id + "]");
    if (spec.family == ModelFamily::RandomWalk &&
        data.contests[r].theta_len > 0) {
      lay.theta_len[r] = data.contests[r].theta_len;
      lay.theta_start[r] = static_cast<int>(lay.names.size());
      for (int t = 1; t <= lay.theta_len[r]; ++t)
        add("theta[" + id + "," + std::to_string(t) + "]");
    }
  }
  if (!fx.mu_alpha) lay.mu_alpha_idx = add("mu_alpha");
  if (!fx.sigma_alpha) lay.sigma_alpha_idx = add("sigma_alpha");
  if (!fx.tau && !fx.sigma_tau) lay.sigma_tau_idx = add("sigma_tau");
  if (spec.family == ModelFamily::RandomWalk && !fx.gamma && !fx.sigma_gamma)
    lay.sigma_gamma_idx = add("sigma_gamma");
  if (spec.family == ModelFamily::Linear && !fx.beta) {
    if (!fx.mu_beta) lay.mu_beta_idx = add("mu_beta");
    if (!fx.sigma_beta) lay.sigma_beta_idx = add("sigma_beta");
  }
  return lay;
}

void ParameterLayout::flatten(const ParamState& state, double* out) const {
  for (std::size_t r = 0; r < alpha_idx.size(); ++r) {
    const auto& cp = state.contests[r];
    if (alpha_idx[r] >= 0) out[alpha_idx[r]] = cp.alpha;
    if (tau_idx[r] >= 0) out[tau_idx[r]] = cp.tau;
    if (beta_idx[r] >= 0) out[beta_idx[r]] = cp.beta;
    if (gamma_idx[r] >= 0) out[gamma_idx[r]] = cp.gamma;
    if (theta_start[r] >= 0)
      for (int t = 0; t < theta_len[r]; ++t)
        out[theta_start[r] + t] = cp.theta[t];
  }
  if (mu_alpha_idx >= 0) out[mu_alpha_idx] = state.mu_alpha;
  if (sigma_alpha_idx >= 0) out[sigma_alpha_idx] = state.sigma_alpha;
  if (sigma_tau_idx >= 0) out[sigma_tau_idx] = state.sigma_tau;
  if (sigma_gamma_idx >= 0) out[sigma_gamma_idx] = state.sigma_gamma;
  if (mu_beta_idx >= 0) out[mu_beta_idx] = state.mu_beta;
  if (sigma_beta_idx >= 0) out[sigma_beta_idx] = state.sigma_beta;
}

ParamState ParameterLayout::unflatten(const double* in,
                                      const ParamState& base) const {
  ParamState st = base;
  for (std::size_t r = 0; r < alpha_idx.size(); ++r) {
    auto& cp = st.contests[r];
    if (alpha_idx[r] >= 0) cp.alpha = in[alpha_idx[r]];
    if (tau_idx[r] >= 0) cp.tau = in[tau_idx[r]];
    if (beta_idx[r] >= 0) cp.beta = in[beta_idx[r]];
    if (gamma_idx[r] >= 0) cp.gamma = in[gamma_idx[r]];
    if (theta_start[r] >= 0)
      for (int t = 0; t < theta_len[r]; ++t)
        cp.theta[t] = in[theta_start[r] + t];
  }
  if (mu_alpha_idx >= 0) st.mu_alpha = in[mu_alpha_idx];
  if (sigma_alpha_idx >= 0) st.sigma_alpha = in[sigma_alpha_idx];
  if (sigma_tau_idx >= 0) st.sigma_tau = in[sigma_tau_idx];
  if (sigma_gamma_idx >= 0) st.sigma_gamma = in[sigma_gamma_idx];
  if (mu_beta_idx >= 0) st.mu_beta = in[mu_beta_idx];
  if (sigma_beta_idx >= 0) st.sigma_beta = in[sigma_beta_idx];
  return st;
}

const FitSummary* FitResult::find(const std::string& name) const {
  for (const auto& s : summaries)
    if (s.name == name) return &s;
  return nullptr;
}

const FitSummary& FitResult::at(const std::string& name) const {
  const auto* s = find(name);
  if (!s) throw ConfigError("no such parameter in fit: " + name);
  return *s;
}

std::vector<double> FitResult::chain_series(int chain, int param) const {
  const int P = layout.size();
  std::vector<double> out(static_cast<std::size_t>(n_iters));
  for (int i = 0; i < n_iters; ++i)
    out[i] = draws[chain][static_cast<std::size_t>(i) * P + param];
  return out;
}

std::vector<double> FitResult::pooled_draws(int param) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_chains) * n_iters);
  for (int c = 0; c < n_chains; ++c) {
    const int P = layout.size();
    for (int i = 0; i < n_iters; ++i)
      out.push_back(draws[c][static_cast<std::size_t>(i) * P + param]);
  }
  return out;
}

ParamState FitResult::state_at(int chain, int iter) const {
  const int P = layout.size();
  return layout.unflatten(&draws[chain][static_cast<std::size_t>(iter) * P],
                          base_state);
}

bool FitResult::any_rhat_above(double threshold) const {
  for (const auto& s : summaries)
    if (!s.degenerate && s.rhat > threshold) return true;
  return false;
}

namespace {

struct AdaptiveScale {
  double log_scale = std::log(0.1);
  int accepts = 0;
  int proposals = 0;
  int windows_done = 0;

  double scale() const { return std::exp(log_scale); }
  void record(bool accepted) {
    ++proposals;
    if (accepted) ++accepts;
  }
  // Robbins-Monro step toward the target rate; frozen after warmup.
  void adapt(double target) {
    if (proposals == 0) return;
    const double rate = static_cast<double>(accepts) / proposals;
    ++windows_done;
    log_scale += (rate - target) / std::sqrt(static_cast<double>(windows_done));
    log_scale = std::clamp(log_scale, std::log(1e-8), std::log(100.0));
    accepts = 0;
    proposals = 0;
  }
};

double contest_loglik(const ModelSpec& spec, const ContestData& cd,
                      const ContestParams& cp) noexcept {
  double total = 0.0;
  for (const auto& poll : cd.polls) {
    const double p = poll_mean(spec, cp, poll, cd.v);
    const double binom_p = spec.plug_in_likelihood ? poll.y : p;
    const double var = poll_variance(binom_p, poll.n, cp.tau);
    if (!(var > 0.0)) return neg_inf;
    total += normal_lpdf_var(poll.y, p, var);
  }
  return total;
}

// Likelihood restricted to election-day polls, as a function of alpha.
double day0_loglik(const ModelSpec& spec, const ContestData& cd, double alpha,
                   double tau, bool plug_in) noexcept {
  if (cd.polls_by_day.empty()) return 0.0;
  double total = 0.0;
  for (int i : cd.polls_by_day[0]) {
    const auto& poll = cd.polls[i];
    const double p = clamp01(cd.v + alpha);
    const double binom_p = plug_in ? poll.y : p;
    const double var = poll_variance(binom_p, poll.n, tau);
    if (!(var > 0.0)) return neg_inf;
    total += normal_lpdf_var(poll.y, p, var);
  }
  return total;
}

double walk_prior(const ContestData& cd, const ContestParams& cp) noexcept {
  const double g = std::max(cp.gamma, gamma_floor);
  double total = 0.0;
  double prev = cd.v;
  for (double th : cp.theta) {
    total += normal_lpdf(th, prev, g);
    prev = th;
  }
  return total;
}

// Forward Kalman filter over one contest's latent walk using the plug-in
// observation variances y(1-y)/n + tau^2. Polls are absorbed one at a time
// in dataset order; `marginal` accumulates the plug-in marginal
// log-likelihood of all t >= 1 polls with theta integrated out.
struct LatentFilter {
  std::vector<double> mean, var;  // filtered moments; index 0 is the anchor
  double marginal = 0.0;
};

LatentFilter forward_filter(const ContestData& cd, double alpha, double tau,
                            double gamma_eff) {
  const int len = cd.theta_len;
  const double g2 = gamma_eff * gamma_eff;
  if (!(g2 > 0.0) || !std::isfinite(g2))
    throw SamplerNumericalError(
        "non-positive innovation variance in contest " + cd.contest_id);
  LatentFilter f;
  f.mean.assign(static_cast<std::size_t>(len) + 1, cd.v);
  f.var.assign(static_cast<std::size_t>(len) + 1, 0.0);
  double m = cd.v, P = 0.0;
  for (int t = 1; t <= len; ++t) {
    P += g2;
    for (int i : cd.polls_by_day[static_cast<std::size_t>(t)]) {
      const auto& poll = cd.polls[static_cast<std::size_t>(i)];
      const double V =
          poll.y * (1.0 - poll.y) / static_cast<double>(poll.n) + tau * tau;
      if (!(V > 0.0))
        throw SamplerNumericalError(
            "non-positive plug-in observation variance in contest " +
            cd.contest_id);
      f.marginal += normal_lpdf_var(poll.y - alpha, m, P + V);
      const double K = P / (P + V);
      m += K * (poll.y - alpha - m);
      P *= 1.0 - K;
    }
    if (!std::isfinite(m) || !(P >= 0.0))
      throw SamplerNumericalError("filter breakdown in contest " +
                                  cd.contest_id);
    f.mean[static_cast<std::size_t>(t)] = m;
    f.var[static_cast<std::size_t>(t)] = P;
  }
  return f;
}

std::vector<double> backward_sample(const LatentFilter& f, double gamma_eff,
                                    RngStream& rng) {
  const int len = static_cast<int>(f.mean.size()) - 1;
  const double g2 = gamma_eff * gamma_eff;
  std::vector<double> theta(static_cast<std::size_t>(len));
  theta[static_cast<std::size_t>(len) - 1] =
      rng.normal(f.mean[static_cast<std::size_t>(len)],
                 std::sqrt(f.var[static_cast<std::size_t>(len)]));
  for (int t = len - 1; t >= 1; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const double c = f.var[ti] / (f.var[ti] + g2);
    const double m = f.mean[ti] + c * (theta[ti] - f.mean[ti]);
    const double v = (1.0 - c) * f.var[ti];
    theta[ti - 1] = rng.normal(m, std::sqrt(v));
  }
  return theta;
}

// log p_target(y | theta, ...) - log p_plug(y | theta, ...) over t >= 1
// polls: the clamp correction plus, in exact mode, the model-variance
// correction. -inf when an exact-mode variance collapses.
double plug_gap(const ModelSpec& spec, const ContestData& cd, double alpha,
                double tau, const std::vector<double>& theta) {
  double d = 0.0;
  for (int t = 1; t <= cd.theta_len; ++t) {
    for (int i : cd.polls_by_day[static_cast<std::size_t>(t)]) {
      const auto& poll = cd.polls[static_cast<std::size_t>(i)];
      const double raw = theta[static_cast<std::size_t>(t) - 1] + alpha;
      const double p = clamp01(raw);
      const double plug_var =
          poll.y * (1.0 - poll.y) / static_cast<double>(poll.n) + tau * tau;
      const double binom_p = spec.plug_in_likelihood ? poll.y : p;
      const double target_var = poll_variance(binom_p, poll.n, tau);
      if (!(target_var > 0.0)) return neg_inf;
      d += normal_lpdf_var(poll.y, p, target_var) -
           normal_lpdf_var(poll.y, raw, plug_var);
    }
  }
  return d;
}

ParamState initial_state(const ModelSpec& spec, const ModelData& data) {
  const auto& hp = spec.hyperpriors;
  const auto& fx = spec.fixed;
  ParamState st;
  st.mu_alpha = fx.mu_alpha.value_or(0.0);
  st.sigma_alpha = fx.sigma_alpha.value_or(hp.sigma_alpha_scale *
                                           half_normal_median_factor);
  st.sigma_tau =
      fx.sigma_tau.value_or(hp.sigma_tau_scale * half_normal_median_factor);
  st.sigma_gamma = fx.sigma_gamma.value_or(hp.sigma_gamma_scale *
                                           half_normal_median_factor);
  st.mu_beta = fx.mu_beta.value_or(0.0);
  st.sigma_beta =
      fx.sigma_beta.value_or(hp.sigma_beta_scale * half_normal_median_factor);

  st.contests.resize(data.contests.size());
  for (std::size_t r = 0; r < data.contests.size(); ++r) {
    const auto& cd = data.contests[r];
    auto& cp = st.contests[r];
    double ybar = cd.v;
    if (!cd.polls.empty()) {
      double s = 0.0;
      for (const auto& p : cd.polls) s += p.y;
      ybar = s / static_cast<double>(cd.polls.size());
    }
    cp.alpha = cd.polls.empty() ? 0.0 : ybar - cd.v;
    cp.tau = fx.tau.value_or(0.02);
    cp.gamma = fx.gamma.value_or(0.005);
    cp.beta = fx.beta.value_or(0.0);
    if (spec.family == ModelFamily::RandomWalk && cd.theta_len > 0) {
      cp.theta.resize(cd.theta_len);
      for (int t = 1; t <= cd.theta_len; ++t)
        cp.theta[t - 1] =
            cd.v + (ybar - cd.v) * static_cast<double>(t) / cd.theta_len;
    }
  }
  return st;
}

class Chain {
 public:
  Chain(const ModelSpec& spec, const ModelData& data,
        const SamplerConfig& cfg, const ParameterLayout& layout,
        const ParamState& init, std::uint64_t seed)
      : spec_(spec),
        data_(data),
        cfg_(cfg),
        layout_(layout),
        state_(init),
        rng_(seed),
        stall_(5) {
    const auto R = data.contests.size();
    marginal_cache_.assign(R, std::numeric_limits<double>::quiet_NaN());
    scale_alpha_.assign(R, AdaptiveScale{std::log(0.02)});
    scale_tau_.assign(R, AdaptiveScale{std::log(0.5)});
    scale_gamma_.assign(R, AdaptiveScale{std::log(0.5)});
    scale_beta_.assign(R, AdaptiveScale{std::log(0.01)});
    scale_sigma_alpha_.log_scale = std::log(0.5);
    scale_sigma_tau_.log_scale = std::log(0.5);
    scale_sigma_gamma_.log_scale = std::log(0.5);
    scale_sigma_beta_.log_scale = std::log(0.5);
  }

  void run() {
    const int P = layout_.size();
    draws_.resize(static_cast<std::size_t>(cfg_.sampling_iters) * P);
    const int total = cfg_.warmup_iters + cfg_.sampling_iters;
    for (int iter = 0; iter < total; ++iter) {
      const bool warm = iter < cfg_.warmup_iters;
      sweep();
      if (warm) {
        if ((iter + 1) % cfg_.adapt_window == 0) end_adaptation_window(iter);
      } else {
        const int k = iter - cfg_.warmup_iters;
        layout_.flatten(state_, &draws_[static_cast<std::size_t>(k) * P]);
        count_clamps();
      }
    }
  }

  std::vector<double> draws_;
  long clamp_hits_ = 0;

 private:
  void sweep() {
    for (std::size_t r = 0; r < data_.contests.size(); ++r) {
      update_alpha(r);
      if (spec_.family == ModelFamily::Linear && !spec_.fixed.beta)
        update_beta(r);
      if (!spec_.fixed.tau) update_tau(r);
      if (spec_.family == ModelFamily::RandomWalk) {
        if (!spec_.fixed.gamma) update_gamma(r);
        if (data_.contests[r].theta_len > 0)
          update_latent_block(spec_, data_.contests[r], state_.contests[r],
                              rng_);
      }
    }
    update_hypers();
  }

  enum class RwScalar { Alpha, Tau, Gamma };

  bool use_collapsed(std::size_t r) const {
    return cfg_.reparameterize && spec_.family == ModelFamily::RandomWalk &&
           data_.contests[r].theta_len > 0;
  }

  // Joint move (x, theta) -> (x', theta' ~ FFBS(x')) for one of the RW
  // scalars x in {alpha, tau, gamma}. Because the FFBS proposal density is
  // the plug-in conditional, the acceptance ratio collapses to
  //   prior(x') + plug-in marginal(x') + day-0 terms + plug_gap(x', theta')
  // minus the same at the current state (plus the log-scale Jacobian).
  // This samples x against its marginal posterior and so avoids both the
  // alpha-theta ridge and the gamma-theta funnel.
  void collapsed_update(std::size_t r, RwScalar which, AdaptiveScale& sc) {
    const auto& cd = data_.contests[r];
    auto& cp = state_.contests[r];
    const bool log_scale = which != RwScalar::Alpha;
    const double cur = which == RwScalar::Alpha ? cp.alpha
                       : which == RwScalar::Tau ? cp.tau
                                                : cp.gamma;
    const double z = rng_.normal();
    const double prop =
        log_scale ? cur * std::exp(sc.scale() * z) : cur + sc.scale() * z;
    const double jac = log_scale ? std::log(prop) - std::log(cur) : 0.0;

    double a = cp.alpha, tau = cp.tau, gamma = cp.gamma;
    switch (which) {
      case RwScalar::Alpha: a = prop; break;
      case RwScalar::Tau: tau = prop; break;
      case RwScalar::Gamma: gamma = prop; break;
    }
    auto prior_term = [&](double value) {
      switch (which) {
        case RwScalar::Alpha:
          return normal_lpdf(value, state_.mu_alpha, state_.sigma_alpha);
        case RwScalar::Tau:
          return half_normal_lpdf(value, state_.sigma_tau);
        case RwScalar::Gamma:
          return half_normal_lpdf(value, state_.sigma_gamma);
      }
      return neg_inf;
    };

    const double g_prop = std::max(gamma, gamma_floor);
    const auto f_prop = forward_filter(cd, a, tau, g_prop);
    const auto theta_prop = backward_sample(f_prop, g_prop, rng_);
    const double u = rng_.uniform();

    const double lp_prop = prior_term(prop) + f_prop.marginal +
                           day0_loglik(spec_, cd, a, tau,
                                       spec_.plug_in_likelihood) +
                           plug_gap(spec_, cd, a, tau, theta_prop);
    if (!std::isfinite(lp_prop)) {
      sc.record(false);
      return;
    }
    const double lp_cur =
        prior_term(cur) + contest_marginal(r) +
        day0_loglik(spec_, cd, cp.alpha, cp.tau, spec_.plug_in_likelihood) +
        plug_gap(spec_, cd, cp.alpha, cp.tau, cp.theta);
    if (std::log(u) < lp_prop - lp_cur + jac) {
      cp.alpha = a;
      cp.tau = tau;
      cp.gamma = gamma;
      cp.theta = theta_prop;
      marginal_cache_[r] = f_prop.marginal;
      sc.record(true);
    } else {
      sc.record(false);
    }
  }

  // Plug-in marginal log-likelihood at the current (alpha, tau, gamma);
  // cached until an accepted collapsed move changes them.
  double contest_marginal(std::size_t r) {
    if (std::isnan(marginal_cache_[r])) {
      const auto& cp = state_.contests[r];
      marginal_cache_[r] =
          forward_filter(data_.contests[r], cp.alpha, cp.tau,
                         std::max(cp.gamma, gamma_floor))
              .marginal;
    }
    return marginal_cache_[r];
  }

  void update_alpha(std::size_t r) {
    if (use_collapsed(r)) {
      collapsed_update(r, RwScalar::Alpha, scale_alpha_[r]);
      return;
    }
    const auto& cd = data_.contests[r];
    auto& cp = state_.contests[r];
    auto target = [&](double a) {
      const double save = cp.alpha;
      cp.alpha = a;
      const double ll = contest_loglik(spec_, cd, cp);
      cp.alpha = save;
      return ll + normal_lpdf(a, state_.mu_alpha, state_.sigma_alpha);
    };
    const auto res = update_scalar(ProposalKind::Gaussian, cp.alpha, target,
                                   scale_alpha_[r].scale(), rng_);
    cp.alpha = res.value;
    scale_alpha_[r].record(res.accepted);
  }

  void update_beta(std::size_t r) {
    const auto& cd = data_.contests[r];
    auto& cp = state_.contests[r];
    auto target = [&](double b) {
      const double save = cp.beta;
      cp.beta = b;
      const double ll = contest_loglik(spec_, cd, cp);
      cp.beta = save;
      return ll + normal_lpdf(b, state_.mu_beta, state_.sigma_beta);
    };
    const auto res = update_scalar(ProposalKind::Gaussian, cp.beta, target,
                                   scale_beta_[r].scale(), rng_);
    cp.beta = res.value;
    scale_beta_[r].record(res.accepted);
  }

  void update_tau(std::size_t r) {
    if (use_collapsed(r)) {
      collapsed_update(r, RwScalar::Tau, scale_tau_[r]);
      return;
    }
    const auto& cd = data_.contests[r];
    auto& cp = state_.contests[r];
    auto target = [&](double tau) {
      const double save = cp.tau;
      cp.tau = tau;
      const double ll = contest_loglik(spec_, cd, cp);
      cp.tau = save;
      return ll + half_normal_lpdf(tau, state_.sigma_tau);
    };
    const auto res = update_scalar(ProposalKind::LogScale, cp.tau, target,
                                   scale_tau_[r].scale(), rng_);
    cp.tau = res.value;
    scale_tau_[r].record(res.accepted);
  }

  void update_gamma(std::size_t r) {
    if (use_collapsed(r)) {
      collapsed_update(r, RwScalar::Gamma, scale_gamma_[r]);
      return;
    }
    const auto& cd = data_.contests[r];
    auto& cp = state_.contests[r];
    auto target = [&](double gamma) {
      const double save = cp.gamma;
      cp.gamma = gamma;
      const double lp = walk_prior(cd, cp);
      cp.gamma = save;
      return lp + half_normal_lpdf(gamma, state_.sigma_gamma);
    };
    const auto res = update_scalar(ProposalKind::LogScale, cp.gamma, target,
                                   scale_gamma_[r].scale(), rng_);
    cp.gamma = res.value;
    scale_gamma_[r].record(res.accepted);
  }

  void update_hypers() {
    const auto& hp = spec_.hyperpriors;
    const auto R = static_cast<double>(data_.contests.size());

    if (layout_.mu_alpha_idx >= 0) {
      // Conjugate normal draw given {alpha_r}.
      const double sa2 = state_.sigma_alpha * state_.sigma_alpha;
      double prec = 1.0 / (hp.mu_alpha_sd * hp.mu_alpha_sd) + R / sa2;
      double num = 0.0;
      for (const auto& cp : state_.contests) num += cp.alpha / sa2;
      state_.mu_alpha = rng_.normal(num / prec, std::sqrt(1.0 / prec));
    }
    if (layout_.sigma_alpha_idx >= 0) {
      auto target = [&](double s) {
        double lp = half_normal_lpdf(s, hp.sigma_alpha_scale);
        for (const auto& cp : state_.contests)
          lp += normal_lpdf(cp.alpha, state_.mu_alpha, s);
        return lp;
      };
      const auto res = update_scalar(ProposalKind::LogScale,
                                     state_.sigma_alpha, target,
                                     scale_sigma_alpha_.scale(), rng_);
      state_.sigma_alpha = res.value;
      scale_sigma_alpha_.record(res.accepted);
    }
    if (layout_.mu_beta_idx >= 0) {
      const double sb2 = state_.sigma_beta * state_.sigma_beta;
      double prec = 1.0 / (hp.mu_beta_sd * hp.mu_beta_sd) + R / sb2;
      double num = 0.0;
      for (const auto& cp : state_.contests) num += cp.beta / sb2;
      state_.mu_beta = rng_.normal(num / prec, std::sqrt(1.0 / prec));
    }
    if (layout_.sigma_beta_idx >= 0) {
      auto target = [&](double s) {
        double lp = half_normal_lpdf(s, hp.sigma_beta_scale);
        for (const auto& cp : state_.contests)
          lp += normal_lpdf(cp.beta, state_.mu_beta, s);
        return lp;
      };
      const auto res =
          update_scalar(ProposalKind::LogScale, state_.sigma_beta, target,
                        scale_sigma_beta_.scale(), rng_);
      state_.sigma_beta = res.value;
      scale_sigma_beta_.record(res.accepted);
    }
    if (layout_.sigma_tau_idx >= 0) {
      auto target = [&](double s) {
        double lp = half_normal_lpdf(s, hp.sigma_tau_scale);
        for (const auto& cp : state_.contests)
          lp += half_normal_lpdf(cp.tau, s);
        return lp;
      };
      const auto res =
          update_scalar(ProposalKind::LogScale, state_.sigma_tau, target,
                        scale_sigma_tau_.scale(), rng_);
      state_.sigma_tau = res.value;
      scale_sigma_tau_.record(res.accepted);
    }
    if (layout_.sigma_gamma_idx >= 0) {
      auto target = [&](double s) {
        double lp = half_normal_lpdf(s, hp.sigma_gamma_scale);
        for (const auto& cp : state_.contests)
          lp += half_normal_lpdf(cp.gamma, s);
        return lp;
      };
      const auto res =
          update_scalar(ProposalKind::LogScale, state_.sigma_gamma, target,
                        scale_sigma_gamma_.scale(), rng_);
      state_.sigma_gamma = res.value;
      scale_sigma_gamma_.record(res.accepted);
    }
  }

  void end_adaptation_window(int iter) {
    long accepts = 0, proposals = 0;
    auto drain = [&](AdaptiveScale& s) {
      accepts += s.accepts;
      proposals += s.proposals;
      s.adapt(cfg_.target_accept_scalar);
    };
    for (auto& s : scale_alpha_) drain(s);
    for (auto& s : scale_tau_) drain(s);
    for (auto& s : scale_gamma_) drain(s);
    for (auto& s : scale_beta_) drain(s);
    drain(scale_sigma_alpha_);
    drain(scale_sigma_tau_);
    drain(scale_sigma_gamma_);
    drain(scale_sigma_beta_);

    stall_.record_window(accepts, proposals);
    if (stall_.stalled())
      throw SamplerStalledError(
          "no scalar proposal accepted for 5 consecutive adaptation windows "
          "(warmup iteration " +
          std::to_string(iter + 1) + ")");
  }

  void count_clamps() {
    if (spec_.family == ModelFamily::Linear) return;
    for (std::size_t r = 0; r < data_.contests.size(); ++r) {
      const auto& cd = data_.contests[r];
      const auto& cp = state_.contests[r];
      for (const auto& poll : cd.polls) {
        const double theta_t =
            spec_.family == ModelFamily::Static || poll.t == 0
                ? cd.v
                : cp.theta[static_cast<std::size_t>(poll.t) - 1];
        const double x = theta_t + cp.alpha;
        if (x < 0.0 || x > 1.0) ++clamp_hits_;
      }
    }
  }

  const ModelSpec& spec_;
  const ModelData& data_;
  const SamplerConfig& cfg_;
  const ParameterLayout& layout_;
  ParamState state_;
  RngStream rng_;
  StallDetector stall_;
  std::vector<double> marginal_cache_;
  std::vector<AdaptiveScale> scale_alpha_, scale_tau_, scale_gamma_,
      scale_beta_;
  AdaptiveScale scale_sigma_alpha_, scale_sigma_tau_, scale_sigma_gamma_,
      scale_sigma_beta_;
};

}  // namespace

void run_parallel(int n_tasks, int workers,
                  const std::function<void(int)>& task) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n_tasks));
  if (workers == 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          task(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool update_latent_block(const ModelSpec& spec, const ContestData& contest,
                         ContestParams& params, RngStream& rng) {
  if (contest.theta_len <= 0) return true;
  const double g = std::max(params.gamma, gamma_floor);
  const auto filter = forward_filter(contest, params.alpha, params.tau, g);
  auto proposal = backward_sample(filter, g, rng);

  // The FFBS draw is the exact conditional of the unclamped plug-in model,
  // so the MH ratio reduces to the plug-gap difference; it is 1 in plug-in
  // mode unless the clamp binds.
  const double log_ratio =
      plug_gap(spec, contest, params.alpha, params.tau, proposal) -
      plug_gap(spec, contest, params.alpha, params.tau, params.theta);
  if (std::log(rng.uniform()) < log_ratio) {
    params.theta = std::move(proposal);
    return true;
  }
  return false;
}

FitResult fit(const ModelSpec& spec, const PollDataset& data,
              const WindowConfig& window, const SamplerConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  if (window.T < 1) throw ConfigError("window T must be >= 1");

  const PollDataset windowed = filter_window(data, window);
  const ModelData md = ModelData::build(windowed);
  const ParameterLayout layout = ParameterLayout::build(spec, md);
  const ParamState init = initial_state(spec, md);

  {
    long scratch = 0;
    const double t0 = log_prior(spec, init, md) +
                      log_likelihood_safe(spec, init, md, &scratch);
    if (!std::isfinite(t0))
      throw InitializationError(
          "target density non-finite at the initialization point");
  }

  FitResult fr;
  fr.spec = spec;
  fr.window = window;
  fr.seed = config.seed;
  fr.layout = layout;
  fr.base_state = init;
  fr.n_chains = config.chains;
  fr.n_iters = config.sampling_iters;
  fr.draws.resize(static_cast<std::size_t>(config.chains));

  std::vector<long> clamp_counts(static_cast<std::size_t>(config.chains), 0);
  run_parallel(config.chains, config.workers, [&](int c) {
    Chain chain(spec, md, config, layout, init,
                derive_seed(config.seed, static_cast<std::uint64_t>(c)));
    chain.run();
    fr.draws[static_cast<std::size_t>(c)] = std::move(chain.draws_);
    clamp_counts[static_cast<std::size_t>(c)] = chain.clamp_hits_;
  });
  for (long c : clamp_counts) fr.clamp_activations += c;

  const int P = layout.size();
  fr.summaries.resize(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j) {
    auto& s = fr.summaries[static_cast<std::size_t>(j)];
    s.name = layout.names[static_cast<std::size_t>(j)];
    std::vector<std::vector<double>> per_chain;
    per_chain.reserve(static_cast<std::size_t>(config.chains));
    for (int c = 0; c < config.chains; ++c)
      per_chain.push_back(fr.chain_series(c, j));
    std::vector<double> pooled = fr.pooled_draws(j);
    s.mean = mean_of(pooled);
    s.sd = sample_sd(pooled);
    std::sort(pooled.begin(), pooled.end());
    s.q025 = quantile_sorted(pooled, 0.025);
    s.q500 = quantile_sorted(pooled, 0.5);
    s.q975 = quantile_sorted(pooled, 0.975);
    const auto rh = split_rhat(per_chain);
    const auto es = ess(per_chain);
    s.rhat = rh.value;
    s.ess = es.value;
    s.degenerate = rh.degenerate || es.degenerate;
  }

  fr.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return fr;
}

DiagnosticValue split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) return {std::numeric_limits<double>::quiet_NaN(), true};
    halves.emplace_back(c.begin(), c.begin() + h);
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
  }
  const std::size_t m = halves.size();
  const std::size_t n = halves[0].size();

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(halves[j]);
    vars[j] = sample_variance(halves[j]);
  }
  const double W = mean_of(vars);
  if (!(W > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), true};
  const double var_of_means = sample_variance(means);
  const double var_plus =
      (static_cast<double>(n - 1) / n) * W + var_of_means;
  return {std::sqrt(var_plus / W), false};
}

namespace {

double autocov_at(const std::vector<double>& x, double mean, std::size_t lag) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i)
    s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}

}  // namespace

DiagnosticValue ess(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m == 0) return {std::numeric_limits<double>::quiet_NaN(), true};
  std::size_t n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) return {std::numeric_limits<double>::quiet_NaN(), true};

  std::vector<std::vector<double>> trimmed(m);
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    trimmed[j].assign(chains[j].begin(),
                      chains[j].begin() + static_cast<std::ptrdiff_t>(n));
    means[j] = mean_of(trimmed[j]);
    vars[j] = sample_variance(trimmed[j]);
  }
  const double W = mean_of(vars);
  const double var_of_means = m > 1 ? sample_variance(means) : 0.0;
  const double var_plus =
      (static_cast<double>(n - 1) / n) * W + var_of_means;
  if (!(var_plus > 0.0))
    return {std::numeric_limits<double>::quiet_NaN(), true};

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      acov += autocov_at(trimmed[j], means[j], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (W - acov) / var_plus;
  };

  // Geyer initial positive sequence with monotone correction over
  // successive pairs rho_{2k} + rho_{2k+1}.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  const std::size_t max_lag = n - 2;
  for (std::size_t k = 0;; ++k) {
    const std::size_t l0 = 2 * k, l1 = 2 * k + 1;
    if (l1 > max_lag) break;
    const double r0 = l0 == 0 ? 1.0 : rho(l0);
    const double r1 = rho(l1);
    double pair = r0 + r1;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau -= 1.0;  // rho_0 counted twice in the first pair
  tau = std::max(tau, 1e-12);
  const double total = static_cast<double>(m) * static_cast<double>(n);
  return {std::min(total / tau, total), false};
}

DiagnosticValue ess(const std::vector<double>& draws) {
  return ess(std::vector<std::vector<double>>{draws});
}

}  // namespace pollerr::sampler
