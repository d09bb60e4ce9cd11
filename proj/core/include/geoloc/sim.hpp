#pragma once

// Monte Carlo harness: random cube scenarios, relative FDOA noise, the FDOAR
// noise sweep, and the measurement-count (finiteness) verification.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geoloc/geometry.hpp"
#include "geoloc/ransac.hpp"
#include "geoloc/system_builder.hpp"

namespace geoloc::sim {

struct ExperimentConfig {
  double cube_side = 100.0;  // m
  int n_pairs = 40;
  double velocity_min = -2.0;  // m/s, per component
  double velocity_max = 2.0;
  std::vector<double> noise_levels = {0.0, 5.0, 10.0, 20.0, 40.0};  // % relative FDOA error
  int trials_per_level = 50;
  RansacConfig ransac;  // rng_seed is ignored; trial seeds come from rng_seed below
  std::uint64_t rng_seed = 1;
  unsigned threads = 1;     // trials run concurrently (0 = auto)
  double edge_margin = 5.0;  // m; truths closer than this to a face count as edge trials

  void validate() const;
};

/// splitmix64 finalizer; used to derive independent seeds from counters.
std::uint64_t mix_seed(std::uint64_t x);

/// Emitter uniform in the cube, one receiver pair per epoch (ids rx1/rx2),
/// positions uniform in the cube, velocity components uniform in the range,
/// noiseless FDOA values.
Scenario generate_scenario(const ExperimentConfig& config, std::uint64_t seed);

/// Outlier fixture: one emitter explains `majority` measurements, a second
/// independent emitter the remaining n_pairs - majority, in shuffled order.
/// truth is the majority emitter.
struct TwoEmitterScenario {
  Scenario scenario;
  Vec3 majority = Vec3::Zero();
  Vec3 minority = Vec3::Zero();
  std::vector<bool> from_majority;
};
TwoEmitterScenario generate_two_emitter_scenario(const ExperimentConfig& config, int majority,
                                                 std::uint64_t seed);

/// Adds N(0, level/100 * s^2) to every FDOA value, s^2 the sample variance of
/// the scenario's FDOA values. Throws invalid_argument with < 2 measurements.
Scenario add_noise(const Scenario& scenario, double level_pct, std::uint64_t seed);

struct TrialRecord {
  double noise_level = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;  // scenario seed
  Vec3 truth = Vec3::Zero();
  Vec3 estimate = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  double error = std::numeric_limits<double>::infinity();  // inf when FDOAR gave no estimate
  std::size_t score = 0;
  int best_iteration = -1;
  int fallbacks = 0;
  bool edge = false;
};

struct LevelSummary {
  double noise_level = 0.0;
  double median_error = 0.0;  // lower median
  int trials = 0;
  int failures = 0;  // trials without an estimate
};

struct EdgeSummary {
  double noise_level = 0.0;
  double edge_median = 0.0;
  int edge_trials = 0;
  double interior_median = 0.0;
  int interior_trials = 0;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // level-major, trial-minor
  std::vector<LevelSummary> summary;
  std::vector<EdgeSummary> edges;
};

/// Lower median (element (n-1)/2 of the sorted values); NaN when empty.
double lower_median(std::vector<double> values);

/// Seeds of trial `trial` at `level`: the scenario depends on the trial only,
/// so every level sees the same geometry.
std::uint64_t scenario_seed(std::uint64_t master, int trial);
std::uint64_t noise_seed(std::uint64_t master, double level, int trial);

/// One generate -> noise -> FDOAR trial. Pure function of its arguments.
TrialRecord run_trial(const ExperimentConfig& config, double level, int trial,
                      const homotopy::ParameterBasis& basis);

using Progress = std::function<void(const TrialRecord&)>;

SweepResult run_noise_sweep(const ExperimentConfig& config, const Progress& progress = {});

/// noise_level_pct,trial,seed,truth_x,...,error_m,score
void write_records_csv(std::ostream& os, std::span<const TrialRecord> records);
/// noise_level_pct,median_error_m,trials
void write_summary_csv(std::ostream& os, std::span<const LevelSummary> summary);

// ------------------------------------------------ measurement-count check

struct RepeatOutcome {
  std::uint64_t seed = 0;
  std::size_t unknowns = 0;
  std::size_t equations = 0;
  std::size_t jacobian_rank = 0;  // at the lifted truth
  std::size_t paths = 0;
  std::size_t nonsingular = 0;
  bool truth_isolated = false;  // truth among nonsingular solutions
  homotopy::Finiteness finiteness = homotopy::Finiteness::finite;
  bool finite = false;  // verdict
};

struct CountVerdict {
  int measurements = 0;
  std::vector<RepeatOutcome> repeats;
  bool agree = false;   // every repeat reached the same verdict
  bool finite = false;  // verdict of the first repeat
};

struct BoundsReport {
  MeasurementMode mode = MeasurementMode::fdoa;
  int dimension = 3;
  bool altitude = false;
  int minimum = 0;
  CountVerdict at_minimum;
  CountVerdict below_minimum;

  /// Finite at the minimum and non-finite below it, every repeat agreeing.
  bool confirmed() const;
};

/// Solves generic random noiseless scenarios with `minimum` and `minimum - 1`
/// measurements. Square systems are solved as is, overdetermined ones after
/// random linear squaring, underdetermined ones after random linear slices
/// through the truth. The verdict is finite when the Jacobian at the truth has
/// full column rank, the truth is an isolated solution and the solver raised
/// no positive-dimensional flag. Throws unsupported for undefined cells.
BoundsReport verify_measurement_bounds(MeasurementMode mode, int dimension, bool altitude,
                                       int repeats = 5, std::uint64_t seed = 1,
                                       const homotopy::TrackerConfig& tracker = {});

}  // namespace geoloc::sim
