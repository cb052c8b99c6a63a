#include "pollerr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pollerr/math.hpp"
#include "pollerr/rng.hpp"

namespace pollerr::sim {

std::string dynamics_name(Dynamics d) {
  switch (d) {
    case Dynamics::RandomWalk: return "random_walk";
    case Dynamics::Static: return "static";
    case Dynamics::LinearDrift: return "linear_drift";
    case Dynamics::RegimeShift: return "regime_shift";
  }
  throw ConfigError("unknown dynamics");
}

Dynamics dynamics_from_name(const std::string& name) {
  if (name == "random_walk") return Dynamics::RandomWalk;
  if (name == "static") return Dynamics::Static;
  if (name == "linear_drift") return Dynamics::LinearDrift;
  if (name == "regime_shift") return Dynamics::RegimeShift;
  throw ConfigError("unknown dynamics: " + name);
}

void SimConfig::validate() const {
  if (contests < 1) throw ConfigError("contests must be >= 1");
  if (true_tau < 0.0 || true_gamma < 0.0)
    throw ConfigError("variance-like entries must be >= 0");
  if (schedule.empty()) throw ConfigError("schedule must be nonempty");
  for (const auto& slot : schedule) {
    if (slot.t < 0) throw ConfigError("poll day must be >= 0");
    if (slot.n < 1) throw ConfigError("sample size must be >= 1");
  }
  if (v.sd < 0.0 || true_alpha.sd < 0.0)
    throw ConfigError("draw-spec sd must be >= 0");
  if (v.sd == 0.0 && (v.value <= 0.0 || v.value >= 1.0))
    throw ConfigError("v must lie in (0,1)");
  if (dynamics == Dynamics::RegimeShift && shift_day < 0)
    throw ConfigError("shift_day must be >= 0");
}

std::vector<PollSlot> uniform_schedule(int polls, int max_t, long long n) {
  if (polls < 1 || max_t < 1) throw ConfigError("polls and max_t must be >= 1");
  std::vector<PollSlot> out;
  out.reserve(static_cast<std::size_t>(polls));
  for (int k = 0; k < polls; ++k) {
    const double frac =
        polls == 1 ? 0.5 : static_cast<double>(k) / (polls - 1);
    const int t = 1 + static_cast<int>(std::lround(frac * (max_t - 1)));
    out.push_back({t, n});
  }
  return out;
}

SimResult simulate_dataset(const SimConfig& config) {
  config.validate();
  int max_t = 0;
  for (const auto& slot : config.schedule) max_t = std::max(max_t, slot.t);

  SimResult out;
  out.data.contests.reserve(static_cast<std::size_t>(config.contests));
  out.truth.contests.resize(static_cast<std::size_t>(config.contests));
  out.truth.mu_alpha = config.true_alpha.value;
  out.truth.sigma_alpha = config.true_alpha.sd;

  for (int r = 0; r < config.contests; ++r) {
    RngStream rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));

    char state[16];
    std::snprintf(state, sizeof state, "S%03d", r + 1);
    const std::string contest_id =
        std::string(state) + "-" + std::to_string(config.year);

    double v = config.v.value;
    if (config.v.sd > 0.0)
      v = std::clamp(rng.normal(config.v.value, config.v.sd), 0.01, 0.99);
    double alpha = config.true_alpha.value;
    if (config.true_alpha.sd > 0.0)
      alpha = rng.normal(config.true_alpha.value, config.true_alpha.sd);

    // Latent path theta_1..theta_max_t; theta_0 = v by construction.
    std::vector<double> theta(static_cast<std::size_t>(max_t));
    double prev = v;
    for (int t = 1; t <= max_t; ++t) {
      double th = v;
      switch (config.dynamics) {
        case Dynamics::RandomWalk:
          th = prev;
          if (config.true_gamma > 0.0)
            th += rng.normal(0.0, config.true_gamma);
          break;
        case Dynamics::Static:
          th = v;
          break;
        case Dynamics::LinearDrift:
          th = inv_logit(logit(v) + config.drift_rate * t);
          break;
        case Dynamics::RegimeShift:
          th = v + (t >= config.shift_day ? config.shift_magnitude : 0.0);
          break;
      }
      theta[static_cast<std::size_t>(t) - 1] = th;
      prev = th;
    }

    auto poll_level = [&](int t) {
      if (config.dynamics == Dynamics::LinearDrift)
        return inv_logit(logit(v) + alpha + config.drift_rate * t);
      const double base = t == 0 ? v : theta[static_cast<std::size_t>(t) - 1];
      return clamp01(base + alpha);
    };

    for (const auto& slot : config.schedule) {
      const double p = poll_level(slot.t);
      const double var = p * (1.0 - p) / static_cast<double>(slot.n) +
                         config.true_tau * config.true_tau;
      double y = p;
      if (var > 0.0) y += rng.normal(0.0, std::sqrt(var));
      if (y < 0.0 || y > 1.0) {
        y = std::clamp(y, 0.0, 1.0);
        ++out.truncation_count;
      }
      out.data.polls.push_back({contest_id, slot.t, y, slot.n, "sim"});
    }

    out.data.contests.push_back({contest_id, state, config.year, v});
    auto& tp = out.truth.contests[static_cast<std::size_t>(r)];
    tp.alpha = alpha;
    tp.tau = config.true_tau;
    tp.gamma = config.true_gamma;
    tp.beta = config.dynamics == Dynamics::LinearDrift ? config.drift_rate : 0.0;
    tp.theta = std::move(theta);
  }
  return out;
}

RecoveryReport recovery_experiment(const SimConfig& sim, const ModelSpec& spec,
                                   const sampler::SamplerConfig& sampler_cfg,
                                   int reps) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  sim.validate();
  sampler_cfg.validate();

  RecoveryReport report;
  report.reps.resize(static_cast<std::size_t>(reps));

  sampler::run_parallel(reps, sampler_cfg.workers, [&](int k) {
    auto& rep = report.reps[static_cast<std::size_t>(k)];
    rep.rep = k;
    try {
      SimConfig sk = sim;
      sk.seed = derive_seed(sim.seed, static_cast<std::uint64_t>(k), 1);
      const SimResult simulated = simulate_dataset(sk);

      sampler::SamplerConfig sc = sampler_cfg;
      sc.seed = derive_seed(sampler_cfg.seed, static_cast<std::uint64_t>(k), 2);
      sc.workers = 1;  // reps are the parallel unit
      const auto fr =
          sampler::fit(spec, simulated.data, WindowConfig{}, sc);

      double bias = 0.0, width = 0.0, covered = 0.0, tau_bias = 0.0;
      int tau_n = 0;
      for (std::size_t r = 0; r < simulated.data.contests.size(); ++r) {
        const auto& id = simulated.data.contests[r].contest_id;
        const double truth = simulated.truth.contests[r].alpha;
        const auto& s = fr.at("alpha[" + id + "]");
        bias += s.mean - truth;
        width += s.q975 - s.q025;
        if (s.q025 <= truth && truth <= s.q975) covered += 1.0;
        if (const auto* ts = fr.find("tau[" + id + "]")) {
          tau_bias += ts->mean - simulated.truth.contests[r].tau;
          ++tau_n;
        }
      }
      const double R = static_cast<double>(simulated.data.contests.size());
      rep.alpha_bias = bias / R;
      rep.alpha_width = width / R;
      rep.alpha_covered = covered;
      rep.alpha_total = R;
      rep.tau_bias = tau_n > 0 ? tau_bias / tau_n : 0.0;
      if (const auto* mu = fr.find("mu_alpha")) rep.mu_alpha_mean = mu->mean;
      for (const auto& s : fr.summaries)
        if (!s.degenerate) rep.max_rhat = std::max(rep.max_rhat, s.rhat);
      rep.ok = true;
    } catch (const std::exception& e) {
      rep.ok = false;
      rep.error = e.what();
    }
  });

  double covered = 0.0, total = 0.0;
  for (const auto& rep : report.reps) {
    if (!rep.ok) {
      ++report.n_failed;
      continue;
    }
    ++report.n_ok;
    covered += rep.alpha_covered;
    total += rep.alpha_total;
    report.mean_alpha_bias += rep.alpha_bias;
    report.mean_alpha_width += rep.alpha_width;
    report.mean_tau_bias += rep.tau_bias;
    report.mean_mu_alpha += rep.mu_alpha_mean;
  }
  if (report.n_ok > 0) {
    report.mean_alpha_bias /= report.n_ok;
    report.mean_alpha_width /= report.n_ok;
    report.mean_tau_bias /= report.n_ok;
    report.mean_mu_alpha /= report.n_ok;
  }
  report.alpha_coverage = total > 0.0 ? covered / total : 0.0;
  return report;
}

}  // namespace pollerr::sim
