#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pollerr/models.hpp"
#include "pollerr/rng.hpp"

namespace pollerr::sampler {

struct SamplerConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sampling_iters = 1000;
  std::uint64_t seed = 0;
  double target_accept_scalar = 0.44;
  int adapt_window = 50;
  bool reparameterize = true;
  int workers = 0;  // 0 = all available cores

  void validate() const;
};

// Flat indexing of the sampled parameter vector. Entries pinned by
// ModelSpec::fixed (and hyperparameters whose children are all pinned)
// are excluded; family-inactive blocks likewise.
struct ParameterLayout {
  std::vector<std::string> names;
  std::vector<int> alpha_idx, tau_idx, beta_idx, gamma_idx;
  std::vector<int> theta_start;  // -1 when the contest has no theta block
  std::vector<int> theta_len;
  int mu_alpha_idx = -1, sigma_alpha_idx = -1;
  int sigma_tau_idx = -1, sigma_gamma_idx = -1;
  int mu_beta_idx = -1, sigma_beta_idx = -1;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;

  static ParameterLayout build(const ModelSpec& spec, const ModelData& data);
  void flatten(const ParamState& state, double* out) const;
  // base supplies values for entries not present in the layout.
  ParamState unflatten(const double* in, const ParamState& base) const;
};

struct FitSummary {
  std::string name;
  double mean = 0, sd = 0, q025 = 0, q500 = 0, q975 = 0;
  double rhat = 0, ess = 0;
  bool degenerate = false;  // zero-variance draw sequence
};

struct FitResult {
  ModelSpec spec;
  WindowConfig window;
  std::uint64_t seed = 0;
  ParameterLayout layout;
  ParamState base_state;
  int n_chains = 0;
  int n_iters = 0;  // post-warmup iterations per chain
  std::vector<std::vector<double>> draws;  // [chain][iter * P + j]
  std::vector<FitSummary> summaries;
  long clamp_activations = 0;
  double wall_seconds = 0.0;

  const FitSummary* find(const std::string& name) const;
  const FitSummary& at(const std::string& name) const;
  std::vector<double> chain_series(int chain, int param) const;
  std::vector<double> pooled_draws(int param) const;
  ParamState state_at(int chain, int iter) const;
  bool any_rhat_above(double threshold) const;
};

// Draws from the posterior of (spec, windowed data) by adaptive
// Metropolis-within-Gibbs with FFBS latent blocks. Deterministic given
// (spec, data, window, config); chains run in parallel when
// config.workers > 1 and the merge is ordered by chain index.
FitResult fit(const ModelSpec& spec, const PollDataset& data,
              const WindowConfig& window, const SamplerConfig& config);

// Runs task(0..n_tasks-1) on up to `workers` threads (0 = all cores).
// Results must be written to per-index slots; the first failing index's
// exception is rethrown after all tasks finish.
void run_parallel(int n_tasks, int workers,
                  const std::function<void(int)>& task);

enum class ProposalKind { Gaussian, LogScale };

struct ScalarUpdate {
  double value;
  bool accepted;
};

// One random-walk Metropolis step. LogScale proposals multiply by
// exp(scale * z) and carry the log(x'/x) Jacobian in the ratio.
// Non-finite proposal densities are rejected.
template <typename F>
ScalarUpdate update_scalar(ProposalKind kind, double current, F&& log_target,
                           double scale, RngStream& rng) {
  const double z = rng.normal();
  double proposal, log_jacobian;
  if (kind == ProposalKind::LogScale) {
    proposal = current * std::exp(scale * z);
    log_jacobian = std::log(proposal) - std::log(current);
  } else {
    proposal = current + scale * z;
    log_jacobian = 0.0;
  }
  const double lp_prop = log_target(proposal);
  const double u = rng.uniform();
  if (!std::isfinite(lp_prop)) return {current, false};
  const double lp_cur = log_target(current);
  const double log_ratio = lp_prop - lp_cur + log_jacobian;
  if (std::log(u) < log_ratio) return {proposal, true};
  return {current, false};
}

// FFBS update of one contest's theta block. The forward pass uses the
// plug-in observation variances y(1-y)/n + tau^2, making the draw an exact
// Gaussian conditional in plug-in mode; in exact mode the draw serves as a
// Metropolis-Hastings proposal against the exact target. Returns whether
// the proposal was accepted. Throws SamplerNumericalError on non-positive
// innovation variance, naming the contest.
bool update_latent_block(const ModelSpec& spec, const ContestData& contest,
                         ContestParams& params, RngStream& rng);

struct DiagnosticValue {
  double value = 0.0;
  bool degenerate = false;
};

// Trips after `limit` consecutive adaptation windows in which every scalar
// proposal was rejected; fit() turns a trip into SamplerStalledError.
class StallDetector {
 public:
  explicit StallDetector(int limit) : limit_(limit) {}
  void record_window(long accepts, long proposals) {
    if (proposals > 0 && accepts == 0)
      ++consecutive_;
    else
      consecutive_ = 0;
  }
  bool stalled() const { return consecutive_ >= limit_; }

 private:
  int limit_;
  int consecutive_ = 0;
};

// Split-chain potential scale reduction factor.
DiagnosticValue split_rhat(const std::vector<std::vector<double>>& chains);

// Effective sample size via initial-positive-sequence truncation of the
// chain-combined autocorrelations; capped at the total draw count.
DiagnosticValue ess(const std::vector<std::vector<double>>& chains);
DiagnosticValue ess(const std::vector<double>& draws);

}  // namespace pollerr::sampler
