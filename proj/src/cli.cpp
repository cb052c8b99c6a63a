#include "pollerr/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pollerr/analysis.hpp"
#include "pollerr/ingest.hpp"
#include "pollerr/models.hpp"
#include "pollerr/sampler.hpp"
#include "pollerr/simulate.hpp"

namespace pollerr::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file for digest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_stamp(const char* format) {
  const std::time_t tt =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, format, &tm);
  return buf;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

void write_manifest(const std::string& run_dir, const std::string& subcommand,
                    json config, const std::map<std::string, std::string>& inputs,
                    double wall_seconds) {
  json in = json::object();
  for (const auto& [name, path] : inputs)
    in[name] = {{"path", path}, {"fnv1a64", hex64(fnv1a64_file(path))}};
  const json manifest = {{"tool", "pollerr"},
                         {"version", tool_version},
                         {"subcommand", subcommand},
                         {"created_utc", utc_stamp("%Y-%m-%dT%H:%M:%SZ")},
                         {"wall_seconds", wall_seconds},
                         {"inputs", in},
                         {"config", std::move(config)}};
  write_text(run_dir + "/manifest.json", manifest.dump(2) + "\n");
}

PollDataset filter_year(const PollDataset& data, int year) {
  PollDataset out;
  std::set<std::string> keep;
  for (const auto& c : data.contests)
    if (c.year == year) {
      keep.insert(c.contest_id);
      out.contests.push_back(c);
    }
  for (const auto& p : data.polls)
    if (keep.count(p.contest_id)) out.polls.push_back(p);
  return out;
}

std::vector<ModelFamily> families_from_flag(const std::string& flag) {
  if (flag == "all")
    return {ModelFamily::Static, ModelFamily::Linear, ModelFamily::RandomWalk};
  return {family_from_name(flag)};
}

sampler::SamplerConfig sampler_config_of(const SamplerOptions& s) {
  sampler::SamplerConfig cfg;
  cfg.chains = s.chains;
  cfg.sampling_iters = s.iters;
  cfg.warmup_iters = s.warmup;
  cfg.seed = s.seed;
  cfg.workers = s.workers;
  return cfg;
}

json sampler_json(const SamplerOptions& s) {
  return {{"chains", s.chains},
          {"iters", s.iters},
          {"warmup", s.warmup},
          {"seed", s.seed},
          {"workers", s.workers}};
}

SamplerOptions sampler_from_json(const json& j) {
  SamplerOptions s;
  s.chains = j.at("chains").get<int>();
  s.iters = j.at("iters").get<int>();
  s.warmup = j.at("warmup").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.workers = j.at("workers").get<int>();
  return s;
}

void write_fit_summary_csv(const std::string& path,
                           const sampler::FitResult& fr) {
  std::string out = "name,mean,sd,q025,q500,q975,rhat,ess,degenerate\n";
  for (const auto& s : fr.summaries) {
    // Latent-path names such as theta[S001-2024,3] contain commas.
    out += ingest::csv_escape(s.name) + "," + fmt(s.mean) + "," + fmt(s.sd) +
           "," + fmt(s.q025) + "," + fmt(s.q500) + "," + fmt(s.q975) + ",";
    if (s.degenerate)
      out += ",,1\n";
    else
      out += fmt(s.rhat) + "," + fmt(s.ess) + ",0\n";
  }
  write_text(path, out);
}

void write_fit_errors_csv(const std::string& path,
                          const sampler::FitResult& fr,
                          const PollDataset& data) {
  std::string out = "contest,quantity,statistic,value\n";
  auto rows = [&out](const std::string& id, const char* quantity,
                     const analysis::QuantitySummary& q) {
    const std::string prefix = id + "," + quantity + ",";
    out += prefix + "mean," + fmt(q.mean) + "\n";
    out += prefix + "sd," + fmt(q.sd) + "\n";
    out += prefix + "q025," + fmt(q.q025) + "\n";
    out += prefix + "q500," + fmt(q.q500) + "\n";
    out += prefix + "q975," + fmt(q.q975) + "\n";
  };
  for (const auto& c : data.contests) {
    rows(c.contest_id, "error_pp",
         analysis::error_summary(fr, c.contest_id, c.v));
    rows(c.contest_id, "excess_moe_pp",
         analysis::moe_summary(fr, c.contest_id));
  }
  write_text(path, out);
}

int fatal(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return exit_fatal;
}

}  // namespace

std::string make_run_dir(const std::string& out_parent, std::uint64_t seed) {
  fs::create_directories(out_parent);
  const std::string base = utc_stamp("%Y%m%dT%H%M%S") + std::string("-seed") +
                           std::to_string(seed);
  for (int k = 0;; ++k) {
    std::string candidate = out_parent + "/" + base;
    if (k > 0) candidate += "-" + std::to_string(k);
    std::error_code ec;
    if (fs::create_directory(candidate, ec) && !ec) return candidate;
    if (k > 10000) throw ConfigError("cannot create run directory under " +
                                     out_parent);
  }
}

std::vector<int> parse_grid(const std::string& text) {
  int a = 0, b = 0, step = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d:%d:%d%c", &a, &b, &step, &tail) != 3)
    throw ConfigError("grid must look like a:b:step, got '" + text + "'");
  if (a < 1 || b < a || step < 1)
    throw ConfigError("grid a:b:step needs 1 <= a <= b and step >= 1");
  std::vector<int> out;
  for (int t = a; t <= b; t += step) out.push_back(t);
  return out;
}

std::map<std::string, int> parse_per_model_T(const std::string& text) {
  std::map<std::string, int> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ConfigError("per-model T entries look like M2=20, got '" + tok +
                        "'");
    const std::string name = family_name(family_from_name(tok.substr(0, eq)));
    int T = 0;
    char tail = 0;
    if (std::sscanf(tok.c_str() + eq + 1, "%d%c", &T, &tail) != 1 || T < 1)
      throw ConfigError("bad T in per-model entry '" + tok + "'");
    out[name] = T;
  }
  return out;
}

int cmd_ingest(const IngestOptions& opts) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    ingest::ColumnMapping mapping;
    if (!opts.mapping_path.empty())
      mapping = ingest::ColumnMapping::from_json_file(opts.mapping_path);
    const auto parsed = ingest::parse_polls(opts.polls_path, mapping);
    const auto results = ingest::parse_results(opts.results_path);
    const PollDataset ds = ingest::build_dataset(parsed.records, results);

    const std::string run_dir = make_run_dir(opts.out_dir, 0);
    ingest::save_dataset(run_dir + "/dataset.json", ds);
    ingest::write_issues_csv(run_dir + "/issues.csv", parsed.issues);

    json config = {{"polls", opts.polls_path},
                   {"results", opts.results_path},
                   {"mapping", opts.mapping_path},
                   {"out_dir", opts.out_dir}};
    std::map<std::string, std::string> inputs = {
        {"polls", opts.polls_path}, {"results", opts.results_path}};
    if (!opts.mapping_path.empty()) inputs["mapping"] = opts.mapping_path;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(run_dir, "ingest", std::move(config), inputs, wall);

    std::cout << "run directory: " << run_dir << "\n";
    std::cout << "polls ingested: " << ds.polls.size()
              << ", rows with issues: " << parsed.issues.size() << "\n";
    if (opts.created_dir) *opts.created_dir = run_dir;
    return exit_ok;
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}

int cmd_fit(const FitOptions& opts) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    PollDataset data = ingest::load_dataset(opts.dataset_path);
    if (opts.year != 0) data = filter_year(data, opts.year);
    if (data.contests.empty())
      return fatal("no contests in dataset" +
                   (opts.year ? " for year " + std::to_string(opts.year)
                              : std::string{}));
    const PollDataset windowed = filter_window(data, WindowConfig{opts.T});
    if (windowed.polls.empty())
      return fatal("no polls within window T=" + std::to_string(opts.T));

    const auto families = families_from_flag(opts.model);
    const std::string run_dir = make_run_dir(opts.out_dir, opts.sampler.seed);

    json diag_json = json::object();
    bool advisory = false;
    for (const auto family : families) {
      ModelSpec spec;
      spec.family = family;
      spec.plug_in_likelihood = opts.plug_in;
      const auto fr = sampler::fit(spec, data, WindowConfig{opts.T},
                                   sampler_config_of(opts.sampler));
      const std::string name = family_name(family);
      write_fit_summary_csv(run_dir + "/summary-" + name + ".csv", fr);
      write_fit_errors_csv(run_dir + "/errors-" + name + ".csv", fr, windowed);
      const auto d = analysis::diagnostics_of(fr);
      diag_json[name] = {{"max_rhat", d.max_rhat},
                         {"min_ess", d.min_ess},
                         {"clamp_activations", d.clamp_activations},
                         {"converged", d.converged}};
      if (!d.converged) advisory = true;
    }
    diag_json["advisory"] = advisory;
    write_text(run_dir + "/diagnostics.json", diag_json.dump(2) + "\n");

    json config = {{"dataset", opts.dataset_path},
                   {"model", opts.model},
                   {"T", opts.T},
                   {"plug_in", opts.plug_in},
                   {"year", opts.year},
                   {"sampler", sampler_json(opts.sampler)},
                   {"out_dir", opts.out_dir}};
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(run_dir, "fit", std::move(config),
                   {{"dataset", opts.dataset_path}}, wall);

    std::cout << "run directory: " << run_dir << "\n";
    if (advisory)
      std::cout << "warning: R-hat above 1.05 on at least one parameter\n";
    if (opts.created_dir) *opts.created_dir = run_dir;
    return advisory ? exit_advisory : exit_ok;
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}

int cmd_sweep(const SweepOptions& opts) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    PollDataset data = ingest::load_dataset(opts.dataset_path);
    if (opts.year != 0) data = filter_year(data, opts.year);
    if (data.contests.empty())
      return fatal("no contests in dataset" +
                   (opts.year ? " for year " + std::to_string(opts.year)
                              : std::string{}));

    std::vector<int> grid = opts.grid;
    if (grid.empty()) grid = parse_grid("10:100:10");

    // Group model families by their T grid (per-model overrides).
    const auto families = families_from_flag(opts.models);
    std::map<std::vector<int>, std::vector<ModelSpec>> groups;
    for (const auto family : families) {
      ModelSpec spec;
      spec.family = family;
      spec.plug_in_likelihood = opts.plug_in;
      const auto it = opts.per_model_T.find(family_name(family));
      const std::vector<int> Ts =
          it != opts.per_model_T.end() ? std::vector<int>{it->second} : grid;
      groups[Ts].push_back(spec);
    }

    analysis::SweepResult sweep;
    sweep.root_seed = opts.sampler.seed;
    bool first = true;
    for (const auto& [Ts, specs] : groups) {
      auto part =
          analysis::window_sweep(data, specs, Ts, sampler_config_of(opts.sampler));
      if (first) {
        sweep = std::move(part);
        first = false;
      } else {
        sweep.absorb(std::move(part));
      }
    }

    const std::string run_dir = make_run_dir(opts.out_dir, opts.sampler.seed);
    analysis::write_sweep_csv(run_dir + "/sweep.csv", sweep);
    analysis::write_sweep_json(run_dir + "/sweep.json", sweep);

    json config = {{"dataset", opts.dataset_path},
                   {"models", opts.models},
                   {"grid", grid},
                   {"per_model_T", opts.per_model_T},
                   {"plug_in", opts.plug_in},
                   {"year", opts.year},
                   {"sampler", sampler_json(opts.sampler)},
                   {"out_dir", opts.out_dir}};
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(run_dir, "sweep", std::move(config),
                   {{"dataset", opts.dataset_path}}, wall);

    std::size_t ok_cells = 0;
    bool advisory = false;
    for (const auto& c : sweep.cells) {
      if (!c.ok) continue;
      ++ok_cells;
      if (!c.diag.converged) advisory = true;
    }
    std::cout << "run directory: " << run_dir << "\n";
    std::cout << "cells: " << sweep.cells.size() << ", failed: "
              << sweep.cells.size() - ok_cells << "\n";
    if (opts.created_dir) *opts.created_dir = run_dir;
    if (ok_cells == 0) return fatal("every sweep cell failed");
    if (advisory) {
      std::cout << "warning: R-hat above 1.05 in at least one cell\n";
      return exit_advisory;
    }
    return exit_ok;
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}

namespace {

json truth_json(const sim::SimResult& result) {
  json contests = json::array();
  for (std::size_t r = 0; r < result.truth.contests.size(); ++r) {
    const auto& tp = result.truth.contests[r];
    contests.push_back({{"contest_id", result.data.contests[r].contest_id},
                        {"alpha", tp.alpha},
                        {"tau", tp.tau},
                        {"gamma", tp.gamma},
                        {"beta", tp.beta},
                        {"theta", tp.theta}});
  }
  return {{"mu_alpha", result.truth.mu_alpha},
          {"sigma_alpha", result.truth.sigma_alpha},
          {"truncations", result.truncation_count},
          {"contests", contests}};
}

}  // namespace

int cmd_simulate(const SimulateOptions& opts) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    sim::SimConfig cfg;
    cfg.contests = opts.contests;
    cfg.true_alpha = {opts.alpha, opts.alpha_sd};
    cfg.true_tau = opts.tau;
    cfg.true_gamma = opts.gamma;
    cfg.dynamics = sim::dynamics_from_name(opts.dynamics);
    cfg.schedule = sim::uniform_schedule(opts.polls, opts.max_t, opts.n);
    cfg.v = {opts.v, opts.v_sd};
    cfg.seed = opts.seed;
    cfg.year = opts.year;
    cfg.drift_rate = opts.drift_rate;
    cfg.shift_day = opts.shift_day;
    cfg.shift_magnitude = opts.shift_magnitude;

    const auto result = sim::simulate_dataset(cfg);
    const std::string run_dir = make_run_dir(opts.out_dir, opts.seed);
    ingest::save_dataset(run_dir + "/dataset.json", result.data);
    write_text(run_dir + "/truth.json", truth_json(result).dump(2) + "\n");
    if (opts.emit_csv)
      ingest::write_dataset_as_source_csv(run_dir + "/polls.csv",
                                          run_dir + "/results.csv",
                                          result.data);

    json config = {{"contests", opts.contests},
                   {"alpha", opts.alpha},
                   {"alpha_sd", opts.alpha_sd},
                   {"tau", opts.tau},
                   {"gamma", opts.gamma},
                   {"dynamics", opts.dynamics},
                   {"polls", opts.polls},
                   {"max_t", opts.max_t},
                   {"n", opts.n},
                   {"v", opts.v},
                   {"v_sd", opts.v_sd},
                   {"year", opts.year},
                   {"drift_rate", opts.drift_rate},
                   {"shift_day", opts.shift_day},
                   {"shift_magnitude", opts.shift_magnitude},
                   {"emit_csv", opts.emit_csv},
                   {"seed", opts.seed},
                   {"out_dir", opts.out_dir}};
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(run_dir, "simulate", std::move(config), {}, wall);

    std::cout << "run directory: " << run_dir << "\n";
    std::cout << "polls: " << result.data.polls.size()
              << ", truncations: " << result.truncation_count << "\n";
    if (opts.created_dir) *opts.created_dir = run_dir;
    return exit_ok;
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}

int cmd_replay(const std::string& manifest_path,
               const std::string& out_dir_override, int workers_override,
               std::string* created_dir) {
  json manifest;
  try {
    std::ifstream in(manifest_path);
    if (!in) return fatal("cannot open manifest: " + manifest_path);
    in >> manifest;
  } catch (const std::exception& e) {
    return fatal(std::string("bad manifest: ") + e.what());
  }

  try {
    const auto& config = manifest.at("config");
    // Refuse to replay against inputs that changed since the run.
    for (const auto& [name, entry] : manifest.at("inputs").items()) {
      const std::string path = entry.at("path").get<std::string>();
      const std::string want = entry.at("fnv1a64").get<std::string>();
      if (hex64(fnv1a64_file(path)) != want)
        return fatal("input '" + name + "' (" + path +
                     ") no longer matches the manifest digest");
    }
    const std::string sub = manifest.at("subcommand").get<std::string>();
    auto out_dir = [&](const std::string& recorded) {
      return out_dir_override.empty() ? recorded : out_dir_override;
    };

    if (sub == "ingest") {
      IngestOptions o;
      o.polls_path = config.at("polls").get<std::string>();
      o.results_path = config.at("results").get<std::string>();
      o.mapping_path = config.at("mapping").get<std::string>();
      o.out_dir = out_dir(config.at("out_dir").get<std::string>());
      o.created_dir = created_dir;
      return cmd_ingest(o);
    }
    if (sub == "fit") {
      FitOptions o;
      o.dataset_path = config.at("dataset").get<std::string>();
      o.model = config.at("model").get<std::string>();
      o.T = config.at("T").get<int>();
      o.plug_in = config.at("plug_in").get<bool>();
      o.year = config.at("year").get<int>();
      o.sampler = sampler_from_json(config.at("sampler"));
      if (workers_override > 0) o.sampler.workers = workers_override;
      o.out_dir = out_dir(config.at("out_dir").get<std::string>());
      o.created_dir = created_dir;
      return cmd_fit(o);
    }
    if (sub == "sweep") {
      SweepOptions o;
      o.dataset_path = config.at("dataset").get<std::string>();
      o.models = config.at("models").get<std::string>();
      o.grid = config.at("grid").get<std::vector<int>>();
      o.per_model_T =
          config.at("per_model_T").get<std::map<std::string, int>>();
      o.plug_in = config.at("plug_in").get<bool>();
      o.year = config.at("year").get<int>();
      o.sampler = sampler_from_json(config.at("sampler"));
      if (workers_override > 0) o.sampler.workers = workers_override;
      o.out_dir = out_dir(config.at("out_dir").get<std::string>());
      o.created_dir = created_dir;
      return cmd_sweep(o);
    }
    if (sub == "simulate") {
      SimulateOptions o;
      o.contests = config.at("contests").get<int>();
      o.alpha = config.at("alpha").get<double>();
      o.alpha_sd = config.at("alpha_sd").get<double>();
      o.tau = config.at("tau").get<double>();
      o.gamma = config.at("gamma").get<double>();
      o.dynamics = config.at("dynamics").get<std::string>();
      o.polls = config.at("polls").get<int>();
      o.max_t = config.at("max_t").get<int>();
      o.n = config.at("n").get<long long>();
      o.v = config.at("v").get<double>();
      o.v_sd = config.at("v_sd").get<double>();
      o.year = config.at("year").get<int>();
      o.drift_rate = config.at("drift_rate").get<double>();
      o.shift_day = config.at("shift_day").get<int>();
      o.shift_magnitude = config.at("shift_magnitude").get<double>();
      o.emit_csv = config.at("emit_csv").get<bool>();
      o.seed = config.at("seed").get<std::uint64_t>();
      o.out_dir = out_dir(config.at("out_dir").get<std::string>());
      o.created_dir = created_dir;
      return cmd_simulate(o);
    }
    return fatal("unknown subcommand in manifest: " + sub);
  } catch (const json::exception& e) {
    return fatal(std::string("manifest missing fields: ") + e.what());
  } catch (const std::exception& e) {
    return fatal(e.what());
  }
}

}  // namespace pollerr::cli
