#include "geoloc/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>

#include <Eigen/SVD>

namespace geoloc::sim {

using homotopy::Finiteness;
using poly::Complex;
using poly::CVector;

void ExperimentConfig::validate() const {
  if (!(cube_side > 0.0)) throw GeolocError(ErrorKind::invalid_argument, "cube_side must be > 0");
  if (n_pairs < 2) throw GeolocError(ErrorKind::invalid_argument, "n_pairs must be >= 2");
  if (!(velocity_min <= velocity_max) || !std::isfinite(velocity_min) ||
      !std::isfinite(velocity_max)) {
    throw GeolocError(ErrorKind::invalid_argument, "velocity range is invalid");
  }
  if (noise_levels.empty()) throw GeolocError(ErrorKind::invalid_argument, "no noise levels");
  for (double l : noise_levels) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw GeolocError(ErrorKind::invalid_argument, "noise levels must be finite and >= 0");
    }
  }
  if (trials_per_level < 1) throw GeolocError(ErrorKind::invalid_argument, "trials_per_level must be >= 1");
  if (!(edge_margin >= 0.0)) throw GeolocError(ErrorKind::invalid_argument, "edge_margin must be >= 0");
  ransac.validate();
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Scenario generate_scenario(const ExperimentConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, config.cube_side);
  std::uniform_real_distribution<double> vel(config.velocity_min, config.velocity_max);
  auto point = [&] { return Vec3(pos(rng), pos(rng), pos(rng)); };
  auto velocity = [&] { return Vec3(vel(rng), vel(rng), vel(rng)); };

  Scenario s;
  s.rng_seed = seed;
  const Vec3 emitter = point();
  s.truth = Emitter{emitter};
  for (int j = 0; j < config.n_pairs; ++j) {
    ReceiverState a{point(), velocity(), "rx1", j};
    ReceiverState b{point(), velocity(), "rx2", j};
    auto pair = make_pair(std::move(a), std::move(b));
    const double f = fdoa_forward(emitter, pair);
    s.fdoa.push_back({std::move(pair), f});
  }
  return s;
}

TwoEmitterScenario generate_two_emitter_scenario(const ExperimentConfig& config, int majority,
                                                 std::uint64_t seed) {
  if (majority < 0 || majority > config.n_pairs) {
    throw GeolocError(ErrorKind::invalid_argument, "majority must lie in [0, n_pairs]");
  }
  TwoEmitterScenario out;
  out.scenario = generate_scenario(config, seed);
  out.majority = out.scenario.truth->position;
  std::mt19937_64 rng(mix_seed(seed ^ 0x74776fULL));
  std::uniform_real_distribution<double> pos(0.0, config.cube_side);
  out.minority = Vec3(pos(rng), pos(rng), pos(rng));
  const auto n = static_cast<std::size_t>(config.n_pairs);
  out.from_majority.assign(n, false);
  std::fill_n(out.from_majority.begin(), majority, true);
  std::shuffle(out.from_majority.begin(), out.from_majority.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.from_majority[i]) {
      auto& m = out.scenario.fdoa[i];
      m.value = fdoa_forward(out.minority, m.pair);
    }
  }
  return out;
}

Scenario add_noise(const Scenario& scenario, double level_pct, std::uint64_t seed) {
  if (!(level_pct >= 0.0) || !std::isfinite(level_pct)) {
    throw GeolocError(ErrorKind::invalid_argument, "noise level must be finite and >= 0");
  }
  const std::size_t n = scenario.fdoa.size();
  if (n < 2) {
    throw GeolocError(ErrorKind::invalid_argument,
                      "relative noise needs at least 2 FDOA measurements");
  }
  Scenario out = scenario;
  if (level_pct == 0.0) return out;
  double mean = 0.0;
  for (const auto& m : scenario.fdoa) mean += m.value;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& m : scenario.fdoa) var += (m.value - mean) * (m.value - mean);
  var /= static_cast<double>(n - 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(level_pct / 100.0 * var));
  for (auto& m : out.fdoa) m.value += normal(rng);
  return out;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::uint64_t scenario_seed(std::uint64_t master, int trial) {
  return mix_seed(mix_seed(master) + static_cast<std::uint64_t>(trial));
}

std::uint64_t noise_seed(std::uint64_t master, double level, int trial) {
  return mix_seed(mix_seed(master ^ std::bit_cast<std::uint64_t>(level)) ^
                  mix_seed(static_cast<std::uint64_t>(trial) + 0x6e6f697365ULL));
}

namespace {

bool near_edge(const Vec3& x, double side, double margin) {
  for (int d = 0; d < 3; ++d) {
    if (x[d] < margin || side - x[d] < margin) return true;
  }
  return false;
}

homotopy::ParameterBasis sweep_basis(const ExperimentConfig& config) {
  auto rc = config.ransac;
  rc.rng_seed = mix_seed(config.rng_seed ^ 0x626173ULL);
  rc.threads = config.threads;
  return make_fdoar_basis(rc);
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& config, double level, int trial,
                      const homotopy::ParameterBasis& basis) {
  TrialRecord rec;
  rec.noise_level = level;
  rec.trial = trial;
  rec.seed = scenario_seed(config.rng_seed, trial);
  const auto clean = generate_scenario(config, rec.seed);
  rec.truth = clean.truth->position;
  rec.edge = near_edge(rec.truth, config.cube_side, config.edge_margin);
  const auto nseed = noise_seed(config.rng_seed, level, trial);
  const auto noisy = add_noise(clean, level, nseed);

  auto rc = config.ransac;
  rc.rng_seed = mix_seed(nseed ^ 0x72616e736163ULL);
  rc.threads = 1;
  rc.tracker.threads = 1;
  try {
    const auto est = run_fdoar(noisy, rc, &basis);
    rec.estimate = est.emitter;
    rec.error = (est.emitter - rec.truth).norm();
    rec.score = est.score;
    rec.best_iteration = est.iteration;
    for (const auto& r : est.trace) rec.fallbacks += r.used_fallback ? 1 : 0;
  } catch (const NoEstimateError& e) {
    for (const auto& r : e.trace()) rec.fallbacks += r.used_fallback ? 1 : 0;
  }
  return rec;
}

SweepResult run_noise_sweep(const ExperimentConfig& config, const Progress& progress) {
  config.validate();
  const auto basis = sweep_basis(config);
  const std::size_t levels = config.noise_levels.size();
  const auto trials = static_cast<std::size_t>(config.trials_per_level);
  SweepResult out;
  out.records.resize(levels * trials);
  std::mutex progress_mutex;
  homotopy::parallel_for(out.records.size(), config.threads, [&](std::size_t i) {
    out.records[i] = run_trial(config, config.noise_levels[i / trials], static_cast<int>(i % trials),
                               basis);
    if (progress) {
      const std::lock_guard lock(progress_mutex);
      progress(out.records[i]);
    }
  });

  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> all, edge, interior;
    LevelSummary s;
    s.noise_level = config.noise_levels[l];
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& r = out.records[l * trials + t];
      all.push_back(r.error);
      (r.edge ? edge : interior).push_back(r.error);
      if (!std::isfinite(r.error)) ++s.failures;
    }
    s.trials = static_cast<int>(trials);
    s.median_error = lower_median(all);
    out.summary.push_back(s);
    out.edges.push_back({s.noise_level, lower_median(edge), static_cast<int>(edge.size()),
                         lower_median(interior), static_cast<int>(interior.size())});
  }
  return out;
}

void write_records_csv(std::ostream& os, std::span<const TrialRecord> records) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "noise_level_pct,trial,seed,truth_x,truth_y,truth_z,est_x,est_y,est_z,error_m,score\n";
  for (const auto& r : records) {
    os << r.noise_level << ',' << r.trial << ',' << r.seed << ',' << r.truth.x() << ','
       << r.truth.y() << ',' << r.truth.z() << ',' << r.estimate.x() << ',' << r.estimate.y()
       << ',' << r.estimate.z() << ',' << r.error << ',' << r.score << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

void write_summary_csv(std::ostream& os, std::span<const LevelSummary> summary) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "noise_level_pct,median_error_m,trials\n";
  for (const auto& s : summary) os << s.noise_level << ',' << s.median_error << ',' << s.trials << '\n';
  os.flags(flags);
  os.precision(prec);
}

// ------------------------------------------------ measurement-count check

bool BoundsReport::confirmed() const {
  return at_minimum.agree && at_minimum.finite && below_minimum.agree && !below_minimum.finite;
}

namespace {

struct Instance {
  GeoSystem system;
  Vec3 truth;
};

Instance random_instance(MeasurementMode mode, int dim, bool altitude, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  std::uniform_real_distribution<double> vel(-2.0, 2.0);
  auto point = [&] {
    Vec3 p(pos(rng), pos(rng), pos(rng));
    if (dim == 2) p.z() = 0.0;
    return p;
  };
  auto velocity = [&] {
    Vec3 v(vel(rng), vel(rng), vel(rng));
    if (dim == 2) v.z() = 0.0;
    return v;
  };
  const Vec3 e = point();
  GeoSystemSpec spec{mode, dim, std::nullopt};
  const auto count = static_cast<std::size_t>(m);
  std::optional<GeoSystem> system;
  switch (mode) {
    case MeasurementMode::tdoa: {
      const ReceiverState ref{point(), velocity(), "ref", 0};
      std::vector<TdoaMeasurement> ms;
      for (std::size_t i = 0; i < count; ++i) {
        auto pair = make_pair(ref, ReceiverState{point(), velocity(), "rx" + std::to_string(i + 1), 0});
        const double tau = tdoa_forward(e, pair);
        ms.push_back({std::move(pair), tau});
      }
      system = build_tdoa(ms, spec);
      break;
    }
    case MeasurementMode::fdoa: {
      std::vector<FdoaMeasurement> ms;
      for (std::size_t i = 0; i < count; ++i) {
        const int epoch = static_cast<int>(i);
        auto pair = make_pair({point(), velocity(), "rx1", epoch}, {point(), velocity(), "rx2", epoch});
        const double f = fdoa_forward(e, pair);
        ms.push_back({std::move(pair), f});
      }
      system = build_fdoa(ms, spec);
      break;
    }
    case MeasurementMode::joint: {
      std::vector<JointMeasurement> ms;
      for (std::size_t i = 0; i < count; ++i) {
        const int epoch = static_cast<int>(i);
        auto pair = make_pair({point(), velocity(), "rx1", epoch}, {point(), velocity(), "rx2", epoch});
        const double f = fdoa_forward(e, pair);
        const double tau = tdoa_forward(e, pair);
        ms.push_back({std::move(pair), f, tau});
      }
      system = build_joint(ms, spec);
      break;
    }
  }
  if (altitude) system = add_altitude_constraint(std::move(*system), {AltitudeModel::flat, e.z()});
  return {std::move(*system), e};
}

CVector random_complex(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
  CVector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = Complex(normal(rng), normal(rng));
  return v;
}

// Square system with the same isolated roots near `truth`: extra equations
// are folded into the first ones, missing ones become random hyperplanes
// through `truth`.
poly::ConcreteSystem make_square(const poly::ConcreteSystem& f, const CVector& truth,
                                 std::mt19937_64& rng) {
  const std::size_t n = f.num_variables();
  const std::size_t e = f.num_equations();
  auto polys = f.polynomials();
  std::vector<poly::Polynomial> out;
  if (e >= n) {
    for (std::size_t i = 0; i < n; ++i) {
      poly::Polynomial p = polys[i];
      const CVector a = random_complex(e - n, rng);
      for (std::size_t j = n; j < e; ++j) {
        for (const auto& t : polys[j].terms()) p.add(a[static_cast<Eigen::Index>(j - n)] * t.coefficient, t.monomial);
      }
      p.normalize();
      out.push_back(std::move(p));
    }
  } else {
    out = polys;
    for (std::size_t k = e; k < n; ++k) {
      const CVector a = random_complex(n, rng);
      poly::Polynomial p(n);
      for (std::size_t l = 0; l < n; ++l) p.add(a[static_cast<Eigen::Index>(l)], poly::Monomial::variable(n, l));
      p.add_constant(-a.cwiseProduct(truth).sum());
      p.normalize();
      out.push_back(std::move(p));
    }
  }
  return poly::ConcreteSystem(std::move(out), f.unknowns()).normalized();
}

RepeatOutcome run_repeat(MeasurementMode mode, int dim, bool altitude, int m, std::uint64_t seed,
                         const homotopy::TrackerConfig& tracker) {
  RepeatOutcome r;
  r.seed = seed;
  if (m <= 0) {
    // Nothing but the optional altitude equation on the emitter coordinates.
    r.unknowns = static_cast<std::size_t>(dim);
    r.equations = altitude ? 1 : 0;
    r.jacobian_rank = r.equations;
    r.finiteness = Finiteness::suspect_positive_dimensional;
    r.finite = false;
    return r;
  }
  std::mt19937_64 rng(seed);
  const auto inst = random_instance(mode, dim, altitude, m, rng);
  const auto f = inst.system.bind(true);
  const CVector truth = inst.system.layout.lift(inst.truth);
  r.unknowns = f.num_variables();
  r.equations = f.num_equations();

  const Eigen::JacobiSVD<poly::CMatrix> svd(f.jacobian(truth));
  const auto& sv = svd.singularValues();
  const double top = sv.size() ? sv[0] : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-8 * top) ++r.jacobian_rank;
  }

  const auto square = make_square(f, truth, rng);
  const auto result = homotopy::solve(square, tracker, rng());
  r.paths = result.paths.size();
  r.finiteness = result.finiteness;
  for (const auto& s : result.nonsingular_solutions(tracker.singular_rcond)) {
    ++r.nonsingular;
    if ((s.point - truth).cwiseAbs().maxCoeff() <= 1e-6) r.truth_isolated = true;
  }
  r.finite = r.jacobian_rank == r.unknowns && r.truth_isolated && r.finiteness == Finiteness::finite;
  return r;
}

CountVerdict run_count(MeasurementMode mode, int dim, bool altitude, int m, int repeats,
                       std::uint64_t seed, const homotopy::TrackerConfig& tracker) {
  CountVerdict v;
  v.measurements = m;
  for (int k = 0; k < repeats; ++k) {
    v.repeats.push_back(run_repeat(mode, dim, altitude, m,
                                   mix_seed(seed + static_cast<std::uint64_t>(k)), tracker));
  }
  v.finite = !v.repeats.empty() && v.repeats.front().finite;
  v.agree = !v.repeats.empty();
  for (const auto& r : v.repeats) v.agree = v.agree && r.finite == v.finite;
  return v;
}

}  // namespace

BoundsReport verify_measurement_bounds(MeasurementMode mode, int dimension, bool altitude,
                                       int repeats, std::uint64_t seed,
                                       const homotopy::TrackerConfig& tracker) {
  const auto minimum = minimum_measurements(mode, dimension, altitude);
  if (!minimum) {
    throw GeolocError(ErrorKind::unsupported, "no measurement bound for this mode/dimension/altitude");
  }
  if (repeats < 1) throw GeolocError(ErrorKind::invalid_argument, "repeats must be >= 1");
  BoundsReport rep;
  rep.mode = mode;
  rep.dimension = dimension;
  rep.altitude = altitude;
  rep.minimum = *minimum;
  const std::uint64_t cell = mix_seed(seed ^ (static_cast<std::uint64_t>(mode) << 8) ^
                                      (static_cast<std::uint64_t>(dimension) << 4) ^
                                      (altitude ? 1ULL : 0ULL));
  rep.at_minimum = run_count(mode, dimension, altitude, *minimum, repeats, mix_seed(cell + 1), tracker);
  rep.below_minimum =
      run_count(mode, dimension, altitude, *minimum - 1, repeats, mix_seed(cell + 2), tracker);
  return rep;
}

}  // namespace geoloc::sim
