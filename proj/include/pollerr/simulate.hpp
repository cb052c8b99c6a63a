#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pollerr/models.hpp"
#include "pollerr/sampler.hpp"

namespace pollerr::sim {

enum class Dynamics { RandomWalk, Static, LinearDrift, RegimeShift };

std::string dynamics_name(Dynamics d);
Dynamics dynamics_from_name(const std::string& name);

// Per-contest normal draw; sd = 0 collapses to the constant `value`.
struct DrawSpec {
  double value = 0.0;
  double sd = 0.0;
};

struct PollSlot {
  int t = 1;           // days before election
  long long n = 1000;  // sample size
};

struct SimConfig {
  int contests = 1;
  DrawSpec true_alpha;       // directional error; logit-scale for LinearDrift
  double true_tau = 0.0;     // excess-variance sd
  double true_gamma = 0.0;   // walk innovation sd (RandomWalk only)
  Dynamics dynamics = Dynamics::RandomWalk;
  std::vector<PollSlot> schedule;  // identical slots for every contest
  DrawSpec v{0.5, 0.0};
  std::uint64_t seed = 0;
  int year = 2024;
  double drift_rate = 0.0;       // LinearDrift: logit-scale slope per day
  int shift_day = 0;             // RegimeShift: first day of the old regime
  double shift_magnitude = 0.0;  // RegimeShift: jump at shift_day

  void validate() const;  // throws ConfigError
};

struct SimResult {
  PollDataset data;
  ParamState truth;          // per-contest alpha/tau/beta/gamma + theta path
  long truncation_count = 0;  // y values truncated into [0,1]
};

// Deterministic given config.seed; each contest uses an independently
// derived substream so the result is invariant to contest count changes
// upstream of a given contest index.
SimResult simulate_dataset(const SimConfig& config);

// Uniform poll schedule helper: `polls` slots with days spread evenly over
// [1, max_t] (duplicates allowed when polls > max_t).
std::vector<PollSlot> uniform_schedule(int polls, int max_t, long long n);

struct RecoveryRep {
  int rep = 0;
  bool ok = false;
  std::string error;          // populated when !ok
  double alpha_bias = 0.0;    // mean over contests of (posterior mean - truth)
  double alpha_covered = 0.0;  // contests whose central 95% CI covers truth
  double alpha_total = 0.0;    // contests scored
  double alpha_width = 0.0;    // mean 95% interval width
  double tau_bias = 0.0;
  double mu_alpha_mean = 0.0;  // posterior mean of mu_alpha when sampled
  double max_rhat = 0.0;
};

struct RecoveryReport {
  std::vector<RecoveryRep> reps;
  int n_ok = 0;
  int n_failed = 0;
  double alpha_coverage = 0.0;  // pooled over reps and contests
  double mean_alpha_bias = 0.0;
  double mean_alpha_width = 0.0;
  double mean_tau_bias = 0.0;
  double mean_mu_alpha = 0.0;  // mean posterior mean across reps
};

// Simulate/fit/score loop. Rep k uses sim seed derive_seed(sim.seed, k, 1)
// and sampler seed derive_seed(sampler.seed, k, 2), so any rep reruns in
// isolation. Fit failures are recorded on the rep, not rethrown. Reps run
// in parallel across sampler.workers threads; aggregation is by rep index.
RecoveryReport recovery_experiment(const SimConfig& sim, const ModelSpec& spec,
                                   const sampler::SamplerConfig& sampler_cfg,
                                   int reps);

}  // namespace pollerr::sim
