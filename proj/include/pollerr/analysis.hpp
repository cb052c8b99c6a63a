#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pollerr/models.hpp"
#include "pollerr/sampler.hpp"

namespace pollerr::analysis {

// Posterior summary of a scalar quantity (percentage-point units here).
struct QuantitySummary {
  double mean = 0, sd = 0, q025 = 0, q500 = 0, q975 = 0;
};

QuantitySummary summarize_draws(std::vector<double> draws);

// Election-day error posterior for one contest, in percentage points,
// computed by transforming each stored draw (exact for nonlinear M2).
QuantitySummary error_summary(const sampler::FitResult& fit,
                              const std::string& contest_id, double v);

// Excess margin of error 200*tau in percentage points; collapses to a
// point mass when tau was fixed.
QuantitySummary moe_summary(const sampler::FitResult& fit,
                            const std::string& contest_id);

struct FitDiagnostics {
  double max_rhat = 0.0;
  double min_ess = 0.0;
  long clamp_activations = 0;
  bool converged = true;  // max_rhat <= 1.05 over non-degenerate params
};

FitDiagnostics diagnostics_of(const sampler::FitResult& fit);

struct SweepCell {
  std::string contest_id;
  ModelFamily family = ModelFamily::Static;
  int T = 0;
  bool ok = false;
  std::string error;  // failure reason when !ok
  QuantitySummary error_pp;
  QuantitySummary excess_moe_pp;
  FitDiagnostics diag;
};

struct SweepResult {
  std::uint64_t root_seed = 0;
  std::vector<int> Ts;
  std::vector<ModelFamily> families;
  std::vector<SweepCell> cells;  // ordered by (family, T, contest)

  const SweepCell* find(const std::string& contest_id, ModelFamily family,
                        int T) const;
  // Concatenates another sweep over the same data (per-model T grids).
  void absorb(SweepResult other);
};

// Fits every spec at every T over filter_window(data, T). Each (spec, T)
// cell runs with seed derive_seed(root, family+1, T) so it reruns in
// isolation; cell failures are recorded, not rethrown. Cells run in
// parallel across config.workers threads; merge order is deterministic.
SweepResult window_sweep(const PollDataset& data,
                         const std::vector<ModelSpec>& specs,
                         const std::vector<int>& Ts,
                         const sampler::SamplerConfig& config);

// (min, max) posterior-mean error over the T grid; ConfigError when the
// (contest, model) pair has no successful cells.
std::pair<double, double> estimate_range(const SweepResult& sweep,
                                         const std::string& contest_id,
                                         ModelFamily family);

// True when a contest's posterior-mean error changes sign across T.
std::map<std::string, bool> sign_flips(const SweepResult& sweep,
                                       ModelFamily family);

// Posterior summary of 100*mu_alpha, the population directional error.
// Requires a hierarchical fit (mu_alpha sampled, >= 2 contests).
QuantitySummary pooled_bias(const sampler::FitResult& fit);

// Tidy table: one row per (contest, model, T, quantity, statistic).
void write_sweep_csv(const std::string& path, const SweepResult& sweep);
// Full cell detail plus run metadata.
void write_sweep_json(const std::string& path, const SweepResult& sweep);

}  // namespace pollerr::analysis
