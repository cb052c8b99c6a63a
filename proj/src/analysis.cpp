#include "pollerr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pollerr/math.hpp"
#include "pollerr/rng.hpp"

namespace pollerr::analysis {

using json = nlohmann::json;

QuantitySummary summarize_draws(std::vector<double> draws) {
  if (draws.empty()) throw ConfigError("cannot summarize zero draws");
  QuantitySummary s;
  s.mean = mean_of(draws);
  s.sd = sample_sd(draws);
  std::sort(draws.begin(), draws.end());
  s.q025 = quantile_sorted(draws, 0.025);
  s.q500 = quantile_sorted(draws, 0.5);
  s.q975 = quantile_sorted(draws, 0.975);
  return s;
}

QuantitySummary error_summary(const sampler::FitResult& fit,
                              const std::string& contest_id, double v) {
  const int idx = fit.layout.index_of("alpha[" + contest_id + "]");
  if (idx < 0)
    throw ConfigError("no alpha draws for contest " + contest_id);
  std::vector<double> draws = fit.pooled_draws(idx);
  for (double& a : draws) a = election_day_error(fit.spec, a, v);
  return summarize_draws(std::move(draws));
}

QuantitySummary moe_summary(const sampler::FitResult& fit,
                            const std::string& contest_id) {
  const int idx = fit.layout.index_of("tau[" + contest_id + "]");
  if (idx >= 0) {
    std::vector<double> draws = fit.pooled_draws(idx);
    for (double& t : draws) t = excess_moe(t);
    return summarize_draws(std::move(draws));
  }
  if (!fit.spec.fixed.tau)
    throw ConfigError("no tau draws for contest " + contest_id);
  const double m = excess_moe(*fit.spec.fixed.tau);
  return {m, 0.0, m, m, m};
}

FitDiagnostics diagnostics_of(const sampler::FitResult& fit) {
  FitDiagnostics d;
  d.min_ess = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s : fit.summaries) {
    if (s.degenerate) continue;
    any = true;
    d.max_rhat = std::max(d.max_rhat, s.rhat);
    d.min_ess = std::min(d.min_ess, s.ess);
  }
  if (!any) d.min_ess = 0.0;
  d.clamp_activations = fit.clamp_activations;
  d.converged = d.max_rhat <= 1.05;
  return d;
}

const SweepCell* SweepResult::find(const std::string& contest_id,
                                   ModelFamily family, int T) const {
  for (const auto& c : cells)
    if (c.contest_id == contest_id && c.family == family && c.T == T)
      return &c;
  return nullptr;
}

void SweepResult::absorb(SweepResult other) {
  for (int t : other.Ts)
    if (std::find(Ts.begin(), Ts.end(), t) == Ts.end()) Ts.push_back(t);
  for (auto f : other.families)
    if (std::find(families.begin(), families.end(), f) == families.end())
      families.push_back(f);
  cells.insert(cells.end(), std::make_move_iterator(other.cells.begin()),
               std::make_move_iterator(other.cells.end()));
}

SweepResult window_sweep(const PollDataset& data,
                         const std::vector<ModelSpec>& specs,
                         const std::vector<int>& Ts,
                         const sampler::SamplerConfig& config) {
  if (Ts.empty()) throw ConfigError("T grid must be nonempty");
  if (!std::is_sorted(Ts.begin(), Ts.end()) ||
      std::adjacent_find(Ts.begin(), Ts.end()) != Ts.end())
    throw ConfigError("T grid must be strictly ascending");
  if (specs.empty()) throw ConfigError("no model specs given");
  validate_dataset(data);

  SweepResult out;
  out.root_seed = config.seed;
  out.Ts = Ts;
  for (const auto& s : specs) out.families.push_back(s.family);

  std::map<std::string, double> v_of;
  for (const auto& c : data.contests) v_of[c.contest_id] = c.v;

  // One fit job per (spec, T); contests share the fit.
  struct Job {
    std::size_t spec_idx;
    int T;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < specs.size(); ++s)
    for (int T : Ts) jobs.push_back({s, T});
  std::vector<std::vector<SweepCell>> job_cells(jobs.size());

  sampler::run_parallel(
      static_cast<int>(jobs.size()), config.workers, [&](int j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        const ModelSpec& spec = specs[job.spec_idx];
        auto& cells = job_cells[static_cast<std::size_t>(j)];
        sampler::SamplerConfig cfg = config;
        cfg.seed = derive_seed(config.seed,
                               static_cast<std::uint64_t>(spec.family) + 1,
                               static_cast<std::uint64_t>(job.T));
        cfg.workers = 1;  // sweep cells are the parallel unit
        try {
          const auto fit =
              sampler::fit(spec, data, WindowConfig{job.T}, cfg);
          const auto diag = diagnostics_of(fit);
          for (const auto& c : data.contests) {
            SweepCell cell;
            cell.contest_id = c.contest_id;
            cell.family = spec.family;
            cell.T = job.T;
            cell.ok = true;
            cell.error_pp = error_summary(fit, c.contest_id, c.v);
            cell.excess_moe_pp = moe_summary(fit, c.contest_id);
            cell.diag = diag;
            cells.push_back(std::move(cell));
          }
        } catch (const std::exception& e) {
          for (const auto& c : data.contests) {
            SweepCell cell;
            cell.contest_id = c.contest_id;
            cell.family = spec.family;
            cell.T = job.T;
            cell.ok = false;
            cell.error = e.what();
            cells.push_back(std::move(cell));
          }
        }
      });

  for (auto& cells : job_cells)
    out.cells.insert(out.cells.end(),
                     std::make_move_iterator(cells.begin()),
                     std::make_move_iterator(cells.end()));
  return out;
}

std::pair<double, double> estimate_range(const SweepResult& sweep,
                                         const std::string& contest_id,
                                         ModelFamily family) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& c : sweep.cells) {
    if (!c.ok || c.contest_id != contest_id || c.family != family) continue;
    lo = std::min(lo, c.error_pp.mean);
    hi = std::max(hi, c.error_pp.mean);
    any = true;
  }
  if (!any)
    throw ConfigError("no successful sweep cells for " + contest_id + "/" +
                      family_name(family));
  return {lo, hi};
}

std::map<std::string, bool> sign_flips(const SweepResult& sweep,
                                       ModelFamily family) {
  std::map<std::string, std::pair<double, double>> ranges;
  for (const auto& c : sweep.cells) {
    if (!c.ok || c.family != family) continue;
    auto it = ranges.find(c.contest_id);
    if (it == ranges.end()) {
      ranges.emplace(c.contest_id,
                     std::make_pair(c.error_pp.mean, c.error_pp.mean));
    } else {
      it->second.first = std::min(it->second.first, c.error_pp.mean);
      it->second.second = std::max(it->second.second, c.error_pp.mean);
    }
  }
  std::map<std::string, bool> out;
  for (const auto& [id, range] : ranges)
    out[id] = range.first < 0.0 && range.second > 0.0;
  return out;
}

QuantitySummary pooled_bias(const sampler::FitResult& fit) {
  if (fit.layout.mu_alpha_idx < 0)
    throw ConfigError("pooled bias requires mu_alpha to be sampled");
  if (fit.layout.alpha_idx.size() < 2)
    throw ConfigError("pooled bias requires a fit across >= 2 contests");
  std::vector<double> draws = fit.pooled_draws(fit.layout.mu_alpha_idx);
  for (double& d : draws) d *= 100.0;
  return summarize_draws(std::move(draws));
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void tidy_rows(std::string& out, const SweepCell& c, const char* quantity,
               const QuantitySummary& q) {
  const std::string prefix = c.contest_id + "," + family_name(c.family) +
                             "," + std::to_string(c.T) + "," + quantity + ",";
  out += prefix + "mean," + fmt(q.mean) + "\n";
  out += prefix + "sd," + fmt(q.sd) + "\n";
  out += prefix + "q025," + fmt(q.q025) + "\n";
  out += prefix + "q500," + fmt(q.q500) + "\n";
  out += prefix + "q975," + fmt(q.q975) + "\n";
}

}  // namespace

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  std::string out = "contest,model,T,quantity,statistic,value\n";
  for (const auto& c : sweep.cells) {
    const std::string prefix = c.contest_id + "," + family_name(c.family) +
                               "," + std::to_string(c.T) + ",";
    out += prefix + "fit,ok," + (c.ok ? "1" : "0") + "\n";
    if (!c.ok) continue;
    tidy_rows(out, c, "error_pp", c.error_pp);
    tidy_rows(out, c, "excess_moe_pp", c.excess_moe_pp);
    out += prefix + "diag,max_rhat," + fmt(c.diag.max_rhat) + "\n";
    out += prefix + "diag,min_ess," + fmt(c.diag.min_ess) + "\n";
    out += prefix + "diag,clamp_activations," +
           std::to_string(c.diag.clamp_activations) + "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << out;
}

namespace {

json summary_json(const QuantitySummary& q) {
  return {{"mean", q.mean},
          {"sd", q.sd},
          {"q025", q.q025},
          {"q500", q.q500},
          {"q975", q.q975}};
}

}  // namespace

void write_sweep_json(const std::string& path, const SweepResult& sweep) {
  json cells = json::array();
  for (const auto& c : sweep.cells) {
    json jc = {{"contest", c.contest_id},
               {"model", family_name(c.family)},
               {"T", c.T},
               {"ok", c.ok}};
    if (c.ok) {
      jc["error_pp"] = summary_json(c.error_pp);
      jc["excess_moe_pp"] = summary_json(c.excess_moe_pp);
      jc["diagnostics"] = {{"max_rhat", c.diag.max_rhat},
                           {"min_ess", c.diag.min_ess},
                           {"clamp_activations", c.diag.clamp_activations},
                           {"converged", c.diag.converged}};
    } else {
      jc["error"] = c.error;
    }
    cells.push_back(std::move(jc));
  }
  std::vector<std::string> family_names;
  for (auto f : sweep.families) family_names.push_back(family_name(f));
  const json j = {{"seed", sweep.root_seed},
                  {"T_grid", sweep.Ts},
                  {"models", family_names},
                  {"cells", cells}};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace pollerr::analysis
