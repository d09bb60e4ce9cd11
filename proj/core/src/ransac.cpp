#include "geoloc/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

namespace geoloc {

void RansacConfig::validate() const {
  if (maxiter < 1) throw GeolocError(ErrorKind::invalid_argument, "maxiter must be >= 1");
  if (!(epsilon > 0.0)) throw GeolocError(ErrorKind::invalid_argument, "epsilon must be > 0");
  const auto minimum = minimum_measurements(MeasurementMode::fdoa, 3, false);
  if (sample_size < *minimum) {
    throw GeolocError(ErrorKind::invalid_argument, "sample_size is below the FDOA minimum of 3");
  }
  if (sample_size != *minimum) {
    throw GeolocError(ErrorKind::unsupported, "only minimal samples (3 measurements) are supported");
  }
  if (!(fallback_min_converged >= 0.0 && fallback_min_converged <= 1.0)) {
    throw GeolocError(ErrorKind::invalid_argument, "fallback_min_converged must lie in [0, 1]");
  }
  if (max_resamples < 0) throw GeolocError(ErrorKind::invalid_argument, "max_resamples must be >= 0");
  tracker.validate();
}

InlierCount count_inliers(const Vec3& candidate, std::span<const FdoaMeasurement> measurements,
                          double epsilon) {
  InlierCount out;
  out.mask.assign(measurements.size(), false);
  double sum = 0.0;
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    double predicted = 0.0;
    try {
      predicted = fdoa_forward(candidate, measurements[i].pair);
    } catch (const GeolocError&) {
      continue;
    }
    const double r = std::abs(predicted - measurements[i].value);
    if (r < epsilon) {
      out.mask[i] = true;
      ++out.score;
      sum += r;
    }
  }
  if (out.score) out.mean_residual = sum / static_cast<double>(out.score);
  return out;
}

namespace {

// Receivers are relabelled per sample slot so every sample builds the same
// structure: one range unknown per receiver state.
std::vector<FdoaMeasurement> relabel(std::vector<FdoaMeasurement> sample) {
  for (std::size_t k = 0; k < sample.size(); ++k) {
    sample[k].pair.reference.id = "s" + std::to_string(k + 1) + "a";
    sample[k].pair.moving.id = "s" + std::to_string(k + 1) + "b";
  }
  return sample;
}

GeoSystem build_sample(std::span<const FdoaMeasurement> measurements,
                       std::span<const std::size_t> indices, const Frame& frame) {
  std::vector<FdoaMeasurement> sample;
  for (std::size_t i : indices) sample.push_back(measurements[i]);
  return build_fdoa(relabel(std::move(sample)), GeoSystemSpec{}, frame);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Candidate {
  Vec3 emitter;
  InlierCount inliers;
  int iteration = 0;
  std::size_t order = 0;  // position within the iteration
};

// Strictly better: higher score, then smaller mean inlier residual. Equal
// candidates keep the earlier one.
bool better(const Candidate& a, const Candidate& b) {
  if (a.inliers.score != b.inliers.score) return a.inliers.score > b.inliers.score;
  return a.inliers.mean_residual < b.inliers.mean_residual;
}

struct IterationOutput {
  IterationRecord record;
  std::optional<Candidate> best;
};

}  // namespace

poly::ParameterizedSystem fdoar_family(int sample_size) {
  std::vector<FdoaMeasurement> dummy;
  for (int k = 0; k < sample_size; ++k) {
    ReceiverState a{Vec3(k, 1, 2), Vec3(1, 0, 0), "", k};
    ReceiverState b{Vec3(2, k, 1), Vec3(0, 1, 0), "", k};
    dummy.push_back({make_pair(a, b), 0.5});
  }
  return build_fdoa(relabel(std::move(dummy)), GeoSystemSpec{}).family;
}

homotopy::ParameterBasis make_fdoar_basis(const RansacConfig& config) {
  config.validate();
  auto tracker = config.tracker;
  if (config.threads != 1) tracker.threads = config.threads;
  return homotopy::make_parameter_basis(fdoar_family(config.sample_size), tracker,
                                        mix(config.rng_seed ^ 0x6261736973ULL));
}

RansacEstimate run_fdoar(const Scenario& scenario, const RansacConfig& config,
                         const homotopy::ParameterBasis* basis) {
  config.validate();
  scenario.validate();
  const auto& ms = scenario.fdoa;
  const auto eligible = bound_passing(ms, config.filter.bound_slack);
  const auto k = static_cast<std::size_t>(config.sample_size);
  if (eligible.size() < k) {
    throw GeolocError(ErrorKind::invalid_argument,
                      "only " + std::to_string(eligible.size()) +
                          " measurement(s) pass the FDOA bound; need " + std::to_string(k));
  }

  // Draw every sample up front so the result does not depend on scheduling.
  std::mt19937_64 rng(config.rng_seed);
  std::vector<std::vector<std::size_t>> samples;
  std::vector<int> resamples;
  for (int it = 0; it < config.maxiter; ++it) {
    int redraws = 0;
    for (;;) {
      std::vector<std::size_t> pool = eligible;
      for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
      }
      pool.resize(k);
      std::set<int> epochs;
      for (std::size_t i : pool) epochs.insert(ms[i].pair.reference.epoch);
      if (epochs.size() == k) {
        samples.push_back(std::move(pool));
        break;
      }
      if (++redraws > config.max_resamples) {
        throw GeolocError(ErrorKind::invalid_argument,
                          "could not draw a sample with distinct epochs");
      }
    }
    resamples.push_back(redraws);
  }

  const auto family = fdoar_family(config.sample_size);
  std::optional<homotopy::ParameterBasis> own;
  if (!basis) {
    own = make_fdoar_basis(config);
    basis = &*own;
  }
  if (basis->p0.size() != family.num_parameters()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "parameter basis does not match the FDOA family");
  }

  const Frame frame = Frame::fit(scenario);
  auto tracker = config.tracker;
  tracker.threads = config.threads == 1 ? config.tracker.threads : 1;
  const unsigned outer = config.threads == 1 ? 1 : config.threads;

  std::vector<IterationOutput> outputs(samples.size());
  homotopy::parallel_for(samples.size(), outer, [&](std::size_t it) {
    auto& out = outputs[it];
    auto& rec = out.record;
    rec.iteration = static_cast<int>(it);
    rec.sample = samples[it];
    rec.resamples = resamples[it];

    const auto sys = build_sample(ms, samples[it], frame);
    auto result = homotopy::track_to_target(family, *basis, sys.parameters, tracker);
    const auto needed = config.fallback_min_converged * static_cast<double>(result.paths.size());
    if (static_cast<double>(result.converged_count()) < needed) {
      result = homotopy::solve(sys.bind(), tracker, mix(config.rng_seed + it + 1));
      rec.used_fallback = true;
    }
    rec.paths = result.paths.size();
    rec.converged = result.converged_count();

    std::size_t order = 0;
    for (const auto& s : result.distinct_solutions) {
      const auto gate = feasibility_gate(s.point, sys.layout, ms, config.filter, s.residual,
                                         s.path_index);
      if (const auto* reason = std::get_if<RejectionReason>(&gate)) {
        switch (*reason) {
          case RejectionReason::complex: ++rec.rejected_complex; break;
          case RejectionReason::nonpositive_range:
          case RejectionReason::range_inconsistent: ++rec.rejected_range; break;
          case RejectionReason::fdoa_bound: ++rec.rejected_bound; break;
        }
        continue;
      }
      const auto& cand = std::get<FeasibleCandidate>(gate);
      ++rec.feasible;
      Candidate c{cand.emitter, count_inliers(cand.emitter, ms, config.epsilon),
                  static_cast<int>(it), order++};
      if (!out.best || better(c, *out.best)) out.best = std::move(c);
    }
  });

  // Serial reduction in iteration order.
  RansacEstimate est;
  std::optional<Candidate> best;
  for (auto& out : outputs) {
    if (out.best && (!best || better(*out.best, *best))) best = out.best;
    out.record.best_score = best ? best->inliers.score : 0;
    est.trace.push_back(std::move(out.record));
  }
  if (!best) {
    throw NoEstimateError("no feasible candidate in " + std::to_string(config.maxiter) +
                              " iteration(s)",
                          std::move(est.trace));
  }
  est.emitter = best->emitter;
  est.inlier_mask = std::move(best->inliers.mask);
  est.score = best->inliers.score;
  est.mean_inlier_residual = best->inliers.mean_residual;
  est.iteration = best->iteration;
  return est;
}

void write_trace_csv(std::ostream& os, std::span<const IterationRecord> trace) {
  os << "iteration,sample,resamples,paths,converged,feasible,fallback,best_score\n";
  for (const auto& r : trace) {
    os << r.iteration << ',';
    for (std::size_t j = 0; j < r.sample.size(); ++j) os << (j ? ";" : "") << r.sample[j];
    os << ',' << r.resamples << ',' << r.paths << ',' << r.converged << ',' << r.feasible << ','
       << (r.used_fallback ? 1 : 0) << ',' << r.best_score << '\n';
  }
}

}  // namespace geoloc
