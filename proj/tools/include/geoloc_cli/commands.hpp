#pragma once

// Subcommands of the geoloc tool. Each returns a process exit code and writes
// human-readable output to `out`, diagnostics to `err`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "geoloc/sim.hpp"

namespace geoloc::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNoSolution = 2 };

struct SolveOptions {
  std::filesystem::path scenario;
  std::string mode = "auto";  // auto, fdoa, tdoa, joint
  int dimension = 3;
  std::optional<double> altitude;
  std::string altitude_model = "flat";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double real_tolerance = 1e-6;
  bool verbose = false;
  std::optional<std::filesystem::path> output;  // CSV of distinct solutions
};

struct FdoarOptions {
  std::filesystem::path scenario;
  int maxiter = 20;
  double epsilon = 0.03;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double bound_slack = 0.0;
  std::optional<std::filesystem::path> trace;  // CSV
};

struct SweepOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> trials;
  std::optional<std::vector<double>> levels;
  std::filesystem::path out_dir = ".";
  bool quiet = false;
};

struct BoundsOptions {
  std::string mode = "fdoa";
  int dimension = 3;
  bool altitude = false;
  bool all = false;
  int repeats = 5;
  std::uint64_t seed = 1;
};

struct SimulateOptions {
  std::filesystem::path output;
  int pairs = 40;
  double cube_side = 100.0;
  double noise = 0.0;  // % relative FDOA error
  std::uint64_t seed = 0;
};

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err);
int cmd_fdoar(const FdoarOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err);
int cmd_bounds(const BoundsOptions& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);

/// Experiment settings from a JSON object. Keys: cube_side, n_pairs,
/// velocity_range [lo, hi], noise_levels, trials_per_level, maxiter, epsilon,
/// seed, threads, edge_margin. Missing keys keep their defaults; unknown keys
/// are rejected.
sim::ExperimentConfig load_experiment_config(const std::filesystem::path& path);
sim::ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Full command line, including argv[0].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geoloc::cli
