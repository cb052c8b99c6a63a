#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pollerr::cli {

inline constexpr const char* tool_version = "1.0.0";

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_fatal = 2;      // input/config error
inline constexpr int exit_advisory = 3;   // completed, R-hat > 1.05 somewhere

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);

// Creates out_parent/<UTC stamp>-seed<seed>[-k], never reusing an existing
// directory.
std::string make_run_dir(const std::string& out_parent, std::uint64_t seed);

struct IngestOptions {
  std::string polls_path;
  std::string results_path;
  std::string mapping_path;  // empty = identity mapping
  std::string out_dir = ".";
  std::string* created_dir = nullptr;  // set to the run directory on success
};

struct SamplerOptions {
  int chains = 4;
  int iters = 1000;   // post-warmup draws per chain
  int warmup = 1000;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = all cores
};

struct FitOptions {
  std::string dataset_path;
  std::string model = "rw";  // static | linear | rw | all
  int T = 100;
  bool plug_in = false;
  int year = 0;  // 0 = no year filter
  SamplerOptions sampler;
  std::string out_dir = ".";
  std::string* created_dir = nullptr;
};

struct SweepOptions {
  std::string dataset_path;
  std::string models = "all";
  std::vector<int> grid;              // default 10,20,...,100
  std::map<std::string, int> per_model_T;  // family name -> single T
  bool plug_in = false;
  int year = 0;
  SamplerOptions sampler;
  std::string out_dir = ".";
  std::string* created_dir = nullptr;
};

struct SimulateOptions {
  int contests = 10;
  double alpha = 0.0;
  double alpha_sd = 0.0;
  double tau = 0.02;
  double gamma = 0.005;
  std::string dynamics = "random_walk";
  int polls = 20;
  int max_t = 100;
  long long n = 1000;
  double v = 0.5;
  double v_sd = 0.0;
  int year = 2024;
  double drift_rate = 0.0;
  int shift_day = 0;
  double shift_magnitude = 0.0;
  bool emit_csv = false;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string* created_dir = nullptr;
};

// Each command writes its outputs plus manifest.json into a fresh run
// directory and returns an exit code; errors are reported on stderr.
int cmd_ingest(const IngestOptions& opts);
int cmd_fit(const FitOptions& opts);
int cmd_sweep(const SweepOptions& opts);
int cmd_simulate(const SimulateOptions& opts);

// Re-executes the run described by a manifest into a new run directory
// (same parent unless out_dir_override is nonempty). workers_override > 0
// replaces the recorded worker count; outputs are identical either way.
int cmd_replay(const std::string& manifest_path,
               const std::string& out_dir_override = "",
               int workers_override = 0,
               std::string* created_dir = nullptr);

// "a:b:step" -> {a, a+step, ..., <= b}; throws ConfigError on bad shape.
std::vector<int> parse_grid(const std::string& text);
// "M2=20,M3=50" -> {"linear": 20, "rw": 50}; keys accept family aliases.
std::map<std::string, int> parse_per_model_T(const std::string& text);

// Full argv interface used by the binary; returns the process exit code.
int run_main(int argc, const char* const* argv);

}  // namespace pollerr::cli
