#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pollerr/domain.hpp"

namespace pollerr {

enum class ModelFamily { Static, Linear, RandomWalk };

std::string family_name(ModelFamily f);
ModelFamily family_from_name(const std::string& name);

// Scales of the weakly informative hyperpriors. mu/sigma _beta entries
// are only active for the Linear family (per-day drift on the logit scale).
struct HyperPriorConfig {
  double mu_alpha_sd = 0.05;
  double sigma_alpha_scale = 0.2;
  double sigma_tau_scale = 0.05;
  double sigma_gamma_scale = 0.01;
  double mu_beta_sd = 0.01;
  double sigma_beta_scale = 0.02;
};

// Optional point-mass conditioning used by oracle fixtures and fast paths:
// a set entry removes that parameter from sampling and from the prior.
struct FixedParams {
  std::optional<double> tau;
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<double> mu_alpha;
  std::optional<double> sigma_alpha;
  std::optional<double> sigma_tau;
  std::optional<double> sigma_gamma;
  std::optional<double> mu_beta;
  std::optional<double> sigma_beta;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::RandomWalk;
  HyperPriorConfig hyperpriors;
  FixedParams fixed;
  // Replaces p_i(1-p_i)/n_i with y_i(1-y_i)/n_i in the likelihood,
  // restoring linear-Gaussian structure for the RandomWalk family.
  bool plug_in_likelihood = false;
};

// Per-contest parameter block. theta[k] holds theta_{r, k+1}; theta_{r,0}
// is pinned to the contest result and never stored.
struct ContestParams {
  double alpha = 0.0;
  double tau = 0.02;
  double beta = 0.0;    // Linear only
  double gamma = 0.005; // RandomWalk only
  std::vector<double> theta;
};

struct ParamState {
  std::vector<ContestParams> contests;
  double mu_alpha = 0.0;
  double sigma_alpha = 0.1;
  double sigma_tau = 0.03;
  double sigma_gamma = 0.007;
  double mu_beta = 0.0;
  double sigma_beta = 0.01;
};

// Indexed, read-only view of a windowed dataset. Contest order follows the
// dataset; polls are grouped per contest and, within a contest, per day
// (the FFBS pass consumes the per-day grouping).
struct ContestData {
  std::string contest_id;
  double v = 0.5;
  std::vector<Poll> polls;
  int theta_len = 0;  // max poll t in the window; length of the theta block
  std::vector<std::vector<int>> polls_by_day;  // index 0 = election day
};

struct ModelData {
  std::vector<ContestData> contests;
  std::size_t n_polls = 0;

  static ModelData build(const PollDataset& data);
  int contest_index(const std::string& contest_id) const;
};

// gamma values below this floor are evaluated at the floor, so a
// degenerate walk stays a proper density during sampling.
inline constexpr double gamma_floor = 1e-6;

// Expected poll share under the family's decomposition. theta_t resolves
// from params.theta (t >= 1) or v (t == 0). clamp_hits, when given,
// counts boundary activations of the [0,1] clamp.
double poll_mean(const ModelSpec& spec, const ContestParams& params,
                 const Poll& poll, double v, long* clamp_hits = nullptr);

// Binomial sampling variance plus additive excess variance.
double poll_variance(double p, long long n, double tau);

// Sum over polls of the normal log density. Throws
// DegenerateLikelihoodError when some poll's total variance is zero.
double log_likelihood(const ModelSpec& spec, const ParamState& params,
                      const ModelData& data, long* clamp_hits = nullptr);

// Non-throwing variant: degenerate polls yield -inf (used for proposals).
double log_likelihood_safe(const ModelSpec& spec, const ParamState& params,
                           const ModelData& data,
                           long* clamp_hits = nullptr) noexcept;

// Hierarchical prior: contest-level terms, random-walk increments
// anchored at theta_{r,0} = v_r, and the hyperpriors. Parameters pinned
// by spec.fixed contribute nothing. Negative variance-like values give -inf.
double log_prior(const ModelSpec& spec, const ParamState& params,
                 const ModelData& data);

// Election-day error in percentage points; positive = Republican support
// overstated. Static/RandomWalk: 100*alpha. Linear:
// 100*(inv_logit(logit(v)+alpha) - v), which depends on the result v.
double election_day_error(const ModelSpec& spec, double alpha, double v);

// Margin of error retained by an arbitrarily large poll, in points.
double excess_moe(double tau);

}  // namespace pollerr
