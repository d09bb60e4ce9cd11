#include "geoloc_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoloc/homotopy.hpp"
#include "geoloc/ransac.hpp"
#include "geoloc/scenario_io.hpp"
#include "geoloc/solution_filter.hpp"
#include "geoloc/system_builder.hpp"

namespace geoloc::cli {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string vec(const Vec3& v) {
  return fmt("%.9g", v.x()) + " " + fmt("%.9g", v.y()) + " " + fmt("%.9g", v.z());
}

int input_error(std::ostream& err, const std::string& what) {
  err << "error: " << what << "\n";
  return kInputError;
}

bool same_pair(const ReceiverPair& a, const ReceiverPair& b) {
  auto eq = [](const ReceiverState& x, const ReceiverState& y) {
    return x.id == y.id && x.epoch == y.epoch && x.position == y.position && x.velocity == y.velocity;
  };
  return eq(a.reference, b.reference) && eq(a.moving, b.moving);
}

GeoSystem build_for(const Scenario& s, const SolveOptions& opt, MeasurementMode& mode) {
  if (opt.mode == "auto") {
    if (!s.fdoa.empty() && s.tdoa.empty()) {
      mode = MeasurementMode::fdoa;
    } else if (s.fdoa.empty() && !s.tdoa.empty()) {
      mode = MeasurementMode::tdoa;
    } else {
      mode = MeasurementMode::joint;
    }
  } else {
    mode = parse_mode(opt.mode);
  }
  GeoSystemSpec spec{mode, opt.dimension, std::nullopt};
  std::optional<GeoSystem> sys;
  switch (mode) {
    case MeasurementMode::fdoa:
      if (s.fdoa.empty()) throw GeolocError(ErrorKind::invalid_argument, "scenario has no FDOA measurements");
      sys = build_fdoa(s.fdoa, spec);
      break;
    case MeasurementMode::tdoa:
      if (s.tdoa.empty()) throw GeolocError(ErrorKind::invalid_argument, "scenario has no TDOA measurements");
      sys = build_tdoa(s.tdoa, spec);
      break;
    case MeasurementMode::joint: {
      if (s.fdoa.size() != s.tdoa.size() || s.fdoa.empty()) {
        throw GeolocError(ErrorKind::invalid_argument,
                          "joint mode needs one TDOA for every FDOA measurement");
      }
      std::vector<JointMeasurement> ms;
      for (std::size_t i = 0; i < s.fdoa.size(); ++i) {
        if (!same_pair(s.fdoa[i].pair, s.tdoa[i].pair)) {
          throw GeolocError(ErrorKind::invalid_argument,
                            "joint mode: FDOA and TDOA measurement " + std::to_string(i + 1) +
                                " are on different receiver pairs");
        }
        ms.push_back({s.fdoa[i].pair, s.fdoa[i].value, s.tdoa[i].value});
      }
      sys = build_joint(ms, spec);
      break;
    }
  }
  if (opt.altitude) {
    AltitudeConstraint alt;
    if (opt.altitude_model == "flat") {
      alt.model = AltitudeModel::flat;
    } else if (opt.altitude_model == "sphere") {
      alt.model = AltitudeModel::sphere;
    } else {
      throw GeolocError(ErrorKind::invalid_argument, "altitude model must be flat or sphere");
    }
    alt.value = *opt.altitude;
    sys = add_altitude_constraint(std::move(*sys), alt);
  }
  return std::move(*sys);
}

}  // namespace

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  MeasurementMode mode{};
  std::optional<GeoSystem> sys;
  try {
    scenario = load_scenario(opt.scenario);
    sys = build_for(scenario, opt, mode);
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
  for (const auto& w : sys->warnings) err << "warning: " << w << "\n";
  const auto n_eq = sys->family.num_equations();
  const auto n_var = sys->family.num_variables();
  if (n_eq != n_var) {
    return input_error(err, "system has " + std::to_string(n_eq) + " equations in " +
                                std::to_string(n_var) +
                                " unknowns; solve needs a square system (use fdoar for larger FDOA sets)");
  }

  homotopy::TrackerConfig cfg;
  cfg.threads = opt.threads;
  const auto result = homotopy::solve(sys->bind(), cfg, opt.seed);
  FilterConfig filter;
  filter.real_tolerance = opt.real_tolerance;
  const std::span<const FdoaMeasurement> check =
      mode == MeasurementMode::tdoa ? std::span<const FdoaMeasurement>{} : scenario.fdoa;

  out << "mode " << to_string(mode) << ", " << sys->num_measurements << " measurement(s), " << n_var
      << " unknowns, " << result.paths.size() << " paths (" << result.converged_count()
      << " converged), " << result.distinct_solutions.size() << " distinct, "
      << homotopy::to_string(result.finiteness) << "\n";
  if (opt.verbose) {
    std::size_t counts[4] = {0, 0, 0, 0};
    for (const auto& p : result.paths) ++counts[static_cast<int>(p.status)];
    out << "path status: converged " << counts[0] << ", diverged " << counts[1] << ", stalled "
        << counts[2] << ", max-steps " << counts[3] << "\n";
  }
  out << "#  x y z  residual  rcond  verdict\n";
  std::ostringstream csv;
  csv << "index,x,y,z,max_imag,residual,rcond,verdict\n";
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < result.distinct_solutions.size(); ++i) {
    const auto& s = result.distinct_solutions[i];
    const auto gate = feasibility_gate(s.point, sys->layout, check, filter, s.residual, s.path_index);
    std::string verdict = "feasible";
    Vec3 x = sys->layout.emitter(s.point);
    if (const auto* r = std::get_if<RejectionReason>(&gate)) {
      verdict = to_string(*r);
    } else {
      ++feasible;
      x = std::get<FeasibleCandidate>(gate).emitter;
      if (scenario.truth) verdict += " (error " + fmt("%.3g", (x - scenario.truth->position).norm()) + " m)";
    }
    const double imag = s.point.imag().cwiseAbs().maxCoeff();
    if (opt.verbose || verdict != "complex") {
      out << i << "  " << vec(x) << "  " << fmt("%.2e", s.residual) << "  "
          << fmt("%.2e", s.condition) << "  " << verdict << "\n";
    }
    csv << i << ',' << fmt("%.17g", x.x()) << ',' << fmt("%.17g", x.y()) << ',' << fmt("%.17g", x.z())
        << ',' << fmt("%.3e", imag) << ',' << fmt("%.3e", s.residual) << ','
        << fmt("%.3e", s.condition) << ',' << verdict << '\n';
  }
  const std::size_t complex = static_cast<std::size_t>(
      std::count_if(result.distinct_solutions.begin(), result.distinct_solutions.end(),
                    [&](const auto& s) { return !is_real(s.point, filter.real_tolerance); }));
  if (!opt.verbose && complex) out << "(" << complex << " complex solution(s) not listed; use --verbose)\n";
  out << feasible << " feasible candidate(s)\n";
  if (opt.output) {
    try {
      write_file_atomic(*opt.output, csv.str());
    } catch (const GeolocError& e) {
      return input_error(err, e.what());
    }
  }
  return feasible ? kOk : kNoSolution;
}

int cmd_fdoar(const FdoarOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  RansacConfig rc;
  try {
    scenario = load_scenario(opt.scenario);
    if (scenario.fdoa.empty()) throw GeolocError(ErrorKind::invalid_argument, "scenario has no FDOA measurements");
    rc.maxiter = opt.maxiter;
    rc.epsilon = opt.epsilon;
    rc.rng_seed = opt.seed;
    rc.threads = opt.threads;
    rc.filter.bound_slack = opt.bound_slack;
    rc.validate();
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
  auto write_trace = [&](const std::vector<IterationRecord>& trace) {
    if (!opt.trace) return true;
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    try {
      write_file_atomic(*opt.trace, csv.str());
    } catch (const GeolocError& e) {
      err << "error: " << e.what() << "\n";
      return false;
    }
    return true;
  };
  try {
    const auto est = run_fdoar(scenario, rc);
    out << "estimate " << vec(est.emitter) << "\n";
    out << "score " << est.score << "/" << scenario.fdoa.size() << " (iteration " << est.iteration
        << ", mean inlier residual " << fmt("%.3g", est.mean_inlier_residual) << " m/s)\n";
    std::string outliers;
    for (std::size_t i = 0; i < est.inlier_mask.size(); ++i) {
      if (!est.inlier_mask[i]) outliers += (outliers.empty() ? "" : ",") + std::to_string(i);
    }
    out << "outliers " << (outliers.empty() ? "none" : outliers) << "\n";
    if (scenario.truth) out << "error " << fmt("%.6g", (est.emitter - scenario.truth->position).norm()) << " m\n";
    return write_trace(est.trace) ? kOk : kInputError;
  } catch (const NoEstimateError& e) {
    err << "no estimate: " << e.what() << "\n";
    write_trace(e.trace());
    return kNoSolution;
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
}

sim::ExperimentConfig parse_experiment_config(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw GeolocError(ErrorKind::parse, std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw GeolocError(ErrorKind::parse, "config: expected an object");
  static const std::set<std::string> known = {"cube_side", "n_pairs", "velocity_range", "noise_levels",
                                              "trials_per_level", "maxiter", "epsilon", "seed",
                                              "threads", "edge_margin"};
  sim::ExperimentConfig cfg;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (!known.count(key)) throw GeolocError(ErrorKind::parse, "config: unknown field '" + key + "'");
      if (key == "cube_side") cfg.cube_side = v.get<double>();
      if (key == "n_pairs") cfg.n_pairs = v.get<int>();
      if (key == "velocity_range") {
        const auto r = v.get<std::vector<double>>();
        if (r.size() != 2) throw GeolocError(ErrorKind::parse, "config: velocity_range needs two values");
        cfg.velocity_min = r[0];
        cfg.velocity_max = r[1];
      }
      if (key == "noise_levels") cfg.noise_levels = v.get<std::vector<double>>();
      if (key == "trials_per_level") cfg.trials_per_level = v.get<int>();
      if (key == "maxiter") cfg.ransac.maxiter = v.get<int>();
      if (key == "epsilon") cfg.ransac.epsilon = v.get<double>();
      if (key == "seed") cfg.rng_seed = v.get<std::uint64_t>();
      if (key == "threads") cfg.threads = v.get<unsigned>();
      if (key == "edge_margin") cfg.edge_margin = v.get<double>();
    }
  } catch (const json::exception& e) {
    throw GeolocError(ErrorKind::parse, std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

sim::ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path));
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  sim::ExperimentConfig cfg;
  try {
    if (opt.config) cfg = load_experiment_config(*opt.config);
    if (opt.seed) cfg.rng_seed = *opt.seed;
    if (opt.threads) cfg.threads = *opt.threads;
    if (opt.trials) cfg.trials_per_level = *opt.trials;
    if (opt.levels) cfg.noise_levels = *opt.levels;
    cfg.validate();
    if (!std::filesystem::is_directory(opt.out_dir)) {
      throw GeolocError(ErrorKind::io, "output directory '" + opt.out_dir.string() + "' does not exist");
    }
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
  sim::Progress progress;
  if (!opt.quiet) {
    progress = [&err](const sim::TrialRecord& r) {
      err << "level " << r.noise_level << "% trial " << r.trial << ": error " << fmt("%.4g", r.error)
          << " m, score " << r.score << "\n";
    };
  }
  const auto result = sim::run_noise_sweep(cfg, progress);
  std::ostringstream trials, summary;
  sim::write_records_csv(trials, result.records);
  sim::write_summary_csv(summary, result.summary);
  try {
    write_file_atomic(opt.out_dir / "trials.csv", trials.str());
    write_file_atomic(opt.out_dir / "summary.csv", summary.str());
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
  out << "noise_pct  median_error_m  trials  failures  edge_median(n)  interior_median(n)\n";
  for (std::size_t l = 0; l < result.summary.size(); ++l) {
    const auto& s = result.summary[l];
    const auto& e = result.edges[l];
    out << fmt("%-9g", s.noise_level) << "  " << fmt("%-14.6g", s.median_error) << "  " << s.trials
        << "  " << s.failures << "  " << fmt("%.4g", e.edge_median) << "(" << e.edge_trials << ")  "
        << fmt("%.4g", e.interior_median) << "(" << e.interior_trials << ")\n";
  }
  return kOk;
}

int cmd_bounds(const BoundsOptions& opt, std::ostream& out, std::ostream& err) {
  struct Cell {
    MeasurementMode mode;
    int dim;
    bool alt;
  };
  std::vector<Cell> cells;
  try {
    if (opt.all) {
      for (auto m : {MeasurementMode::tdoa, MeasurementMode::fdoa, MeasurementMode::joint}) {
        cells.push_back({m, 2, false});
        cells.push_back({m, 3, false});
        cells.push_back({m, 3, true});
      }
    } else {
      cells.push_back({parse_mode(opt.mode), opt.dimension, opt.altitude});
      if (!minimum_measurements(cells[0].mode, opt.dimension, opt.altitude)) {
        throw GeolocError(ErrorKind::invalid_argument, "no measurement bound for this mode/dimension/altitude");
      }
    }
    if (opt.repeats < 1) throw GeolocError(ErrorKind::invalid_argument, "repeats must be >= 1");
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
  auto verdict = [](const sim::CountVerdict& v) {
    std::size_t agree = 0;
    for (const auto& r : v.repeats) agree += r.finite == v.finite ? 1 : 0;
    return std::to_string(v.measurements) + ": " + (v.finite ? "finite" : "non-finite") + " (" +
           std::to_string(agree) + "/" + std::to_string(v.repeats.size()) + " agree)";
  };
  for (const auto& c : cells) {
    const auto r = sim::verify_measurement_bounds(c.mode, c.dim, c.alt, opt.repeats, opt.seed);
    const std::string label = std::string(to_string(c.mode)) + (c.alt ? " + alt" : "") + " " +
                              std::to_string(c.dim) + "D";
    out << label << std::string(label.size() < 18 ? 18 - label.size() : 1, ' ')
        << "minimum " << verdict(r.at_minimum) << " | " << verdict(r.below_minimum) << " -> "
        << (r.confirmed() ? "confirmed" : "NOT confirmed") << "\n";
    const auto& first = r.at_minimum.repeats.front();
    out << "    at minimum: " << first.equations << " equations, " << first.unknowns << " unknowns, rank "
        << first.jacobian_rank << ", " << first.paths << " paths, " << first.nonsingular
        << " nonsingular solutions\n";
  }
  return kOk;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    sim::ExperimentConfig cfg;
    cfg.n_pairs = opt.pairs;
    cfg.cube_side = opt.cube_side;
    cfg.validate();
    auto s = sim::generate_scenario(cfg, opt.seed);
    if (opt.noise > 0.0) s = sim::add_noise(s, opt.noise, sim::mix_seed(opt.seed ^ 0x6e6f6973ULL));
    save_scenario(opt.output, s);
    out << "wrote " << s.fdoa.size() << " FDOA measurement(s) to " << opt.output.string() << "\n";
    return kOk;
  } catch (const GeolocError& e) {
    return input_error(err, e.what());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TDOA/FDOA geolocation by homotopy continuation"};
  app.name("geoloc");
  app.require_subcommand(1);

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve one square system built from a scenario file");
  solve->add_option("scenario", so.scenario, "Scenario file (JSON or text)")->required();
  solve->add_option("--mode", so.mode, "auto, fdoa, tdoa or joint")
      ->check(CLI::IsMember({"auto", "fdoa", "tdoa", "joint"}));
  solve->add_option("--dim", so.dimension, "Working dimension")->check(CLI::IsMember({2, 3}));
  solve->add_option("--alt", so.altitude, "Known emitter altitude (m)");
  solve->add_option("--alt-model", so.altitude_model, "flat (z = alt) or sphere (|x| = alt)")
      ->check(CLI::IsMember({"flat", "sphere"}));
  solve->add_option("--seed", so.seed, "Seed for the random gamma");
  solve->add_option("--threads", so.threads, "Worker threads (0 = auto)");
  solve->add_option("--real-tol", so.real_tolerance, "Relative imaginary-part tolerance");
  solve->add_option("--output", so.output, "Write distinct solutions as CSV");
  solve->add_flag("-v,--verbose", so.verbose, "List every solution and path statuses");

  FdoarOptions fo;
  auto* fdoar = app.add_subcommand("fdoar", "RANSAC estimate from an FDOA scenario");
  fdoar->add_option("scenario", fo.scenario, "Scenario file (JSON or text)")->required();
  fdoar->add_option("--maxiter", fo.maxiter, "Iterations");
  fdoar->add_option("--epsilon", fo.epsilon, "Inlier tolerance (m/s)");
  fdoar->add_option("--seed", fo.seed, "Sampling seed");
  fdoar->add_option("--threads", fo.threads, "Worker threads (0 = auto)");
  fdoar->add_option("--bound-slack", fo.bound_slack, "Allowance on the FDOA bound (m/s)");
  fdoar->add_option("--trace", fo.trace, "Write the per-iteration trace as CSV");

  SweepOptions wo;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo noise sweep of FDOAR");
  sweep->add_option("--config", wo.config, "Experiment config (JSON)");
  sweep->add_option("--seed", wo.seed, "Master seed");
  sweep->add_option("--threads", wo.threads, "Worker threads (0 = auto)");
  sweep->add_option("--trials", wo.trials, "Trials per noise level");
  sweep->add_option("--levels", wo.levels, "Comma-separated noise levels (%)")->delimiter(',');
  sweep->add_option("--out-dir", wo.out_dir, "Directory for trials.csv and summary.csv");
  sweep->add_flag("-q,--quiet", wo.quiet, "No per-trial progress");

  BoundsOptions bo;
  auto* bounds = app.add_subcommand("bounds", "Verify minimum measurement counts");
  bounds->add_option("--mode", bo.mode, "fdoa, tdoa or joint")->check(CLI::IsMember({"fdoa", "tdoa", "joint"}));
  bounds->add_option("--dim", bo.dimension, "Dimension")->check(CLI::IsMember({2, 3}));
  bounds->add_flag("--alt", bo.altitude, "With known altitude");
  bounds->add_flag("--all", bo.all, "Every mode/dimension/altitude cell");
  bounds->add_option("--repeats", bo.repeats, "Random scenarios per count");
  bounds->add_option("--seed", bo.seed, "Seed");

  SimulateOptions mo;
  auto* simulate = app.add_subcommand("simulate", "Write a random cube scenario");
  simulate->add_option("output", mo.output, "Output file (.json for JSON, text otherwise)")->required();
  simulate->add_option("--pairs", mo.pairs, "Receiver pairs (one per epoch)");
  simulate->add_option("--cube", mo.cube_side, "Cube side (m)");
  simulate->add_option("--noise", mo.noise, "Relative FDOA error (%)");
  simulate->add_option("--seed", mo.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  if (solve->parsed()) return cmd_solve(so, out, err);
  if (fdoar->parsed()) return cmd_fdoar(fo, out, err);
  if (sweep->parsed()) return cmd_sweep(wo, out, err);
  if (bounds->parsed()) return cmd_bounds(bo, out, err);
  return cmd_simulate(mo, out, err);
}

}  // namespace geoloc::cli
