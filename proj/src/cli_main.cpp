#include <string>

#include <CLI11.hpp>

#include "pollerr/cli.hpp"
#include "pollerr/errors.hpp"

namespace pollerr::cli {

int run_main(int argc, const char* const* argv) {
  CLI::App app{"pollerr: directional polling error and excess variance"};
  app.require_subcommand(1);

  int rc = exit_ok;

  // --- ingest ---------------------------------------------------------
  IngestOptions ing;
  auto* ing_cmd =
      app.add_subcommand("ingest", "Parse poll and result files");
  ing_cmd->add_option("--polls", ing.polls_path, "Poll CSV file")->required();
  ing_cmd->add_option("--results", ing.results_path, "Results CSV file")
      ->required();
  ing_cmd->add_option("--mapping", ing.mapping_path,
                      "Column-mapping JSON file");
  ing_cmd->add_option("--out", ing.out_dir, "Output parent directory");
  ing_cmd->callback([&]() { rc = cmd_ingest(ing); });

  auto add_sampler_flags = [](CLI::App* cmd, SamplerOptions& s) {
    cmd->add_option("--chains", s.chains, "MCMC chains");
    cmd->add_option("--iters", s.iters, "Post-warmup iterations per chain");
    cmd->add_option("--warmup", s.warmup, "Warmup iterations per chain");
    cmd->add_option("--seed", s.seed, "Root RNG seed");
    cmd->add_option("--workers", s.workers, "Worker threads (0 = all cores)");
  };

  // --- fit ------------------------------------------------------------
  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model at one window");
  fit_cmd->add_option("--dataset", fit.dataset_path, "Canonical dataset JSON")
      ->required();
  fit_cmd->add_option("--model", fit.model, "static | linear | rw | all");
  fit_cmd->add_option("--window", fit.T, "Inclusion window T in days");
  fit_cmd->add_flag("--plug-in-likelihood", fit.plug_in,
                    "Use observed-share binomial variance");
  fit_cmd->add_option("--year", fit.year, "Keep only contests of this year");
  fit_cmd->add_option("--out", fit.out_dir, "Output parent directory");
  add_sampler_flags(fit_cmd, fit.sampler);
  fit_cmd->callback([&]() { rc = cmd_fit(fit); });

  // --- sweep ----------------------------------------------------------
  SweepOptions sweep;
  std::string grid_text;
  std::string per_model_text;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Refit across an inclusion-window grid");
  sweep_cmd
      ->add_option("--dataset", sweep.dataset_path, "Canonical dataset JSON")
      ->required();
  sweep_cmd->add_option("--models", sweep.models,
                        "static | linear | rw | all");
  sweep_cmd->add_option("--grid", grid_text, "T grid as a:b:step");
  sweep_cmd->add_option("--per-model-T", per_model_text,
                        "Per-model overrides, e.g. M2=20,M3=50");
  sweep_cmd->add_flag("--plug-in-likelihood", sweep.plug_in,
                      "Use observed-share binomial variance");
  sweep_cmd->add_option("--year", sweep.year,
                        "Keep only contests of this year");
  sweep_cmd->add_option("--out", sweep.out_dir, "Output parent directory");
  add_sampler_flags(sweep_cmd, sweep.sampler);
  sweep_cmd->callback([&]() {
    try {
      if (!grid_text.empty()) sweep.grid = parse_grid(grid_text);
      sweep.per_model_T = parse_per_model_T(per_model_text);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      rc = exit_fatal;
      return;
    }
    rc = cmd_sweep(sweep);
  });

  // --- simulate -------------------------------------------------------
  SimulateOptions sim;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim_cmd->add_option("--contests", sim.contests, "Number of contests");
  sim_cmd->add_option("--alpha", sim.alpha, "True directional error");
  sim_cmd->add_option("--alpha-sd", sim.alpha_sd,
                      "Per-contest sd of the true error");
  sim_cmd->add_option("--tau", sim.tau, "True excess-variance sd");
  sim_cmd->add_option("--gamma", sim.gamma, "True walk innovation sd");
  sim_cmd->add_option(
      "--dynamics", sim.dynamics,
      "random_walk | static | linear_drift | regime_shift");
  sim_cmd->add_option("--polls", sim.polls, "Polls per contest");
  sim_cmd->add_option("--max-t", sim.max_t, "Latest poll day");
  sim_cmd->add_option("--n", sim.n, "Sample size per poll");
  sim_cmd->add_option("--v", sim.v, "True final share");
  sim_cmd->add_option("--v-sd", sim.v_sd, "Per-contest sd of v");
  sim_cmd->add_option("--year", sim.year, "Contest year label");
  sim_cmd->add_option("--drift-rate", sim.drift_rate,
                      "linear_drift: logit-scale slope per day");
  sim_cmd->add_option("--shift-day", sim.shift_day,
                      "regime_shift: first day of the old regime");
  sim_cmd->add_option("--shift-magnitude", sim.shift_magnitude,
                      "regime_shift: jump size");
  sim_cmd->add_flag("--emit-csv", sim.emit_csv,
                    "Also write source-format polls.csv/results.csv");
  sim_cmd->add_option("--seed", sim.seed, "Root RNG seed");
  sim_cmd->add_option("--out", sim.out_dir, "Output parent directory");
  sim_cmd->callback([&]() { rc = cmd_simulate(sim); });

  // --- replay ---------------------------------------------------------
  std::string manifest_path;
  std::string replay_out;
  int replay_workers = 0;
  auto* replay_cmd =
      app.add_subcommand("replay", "Re-execute a run from its manifest");
  replay_cmd->add_option("manifest", manifest_path, "manifest.json path")
      ->required();
  replay_cmd->add_option("--out", replay_out, "Override output parent");
  replay_cmd->add_option("--workers", replay_workers,
                         "Override worker count");
  replay_cmd->callback(
      [&]() { rc = cmd_replay(manifest_path, replay_out, replay_workers); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_fatal;
  }
  return rc;
}

}  // namespace pollerr::cli
