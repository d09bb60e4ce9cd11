#include <random>

#include <benchmark/benchmark.h>

#include "geoloc/homotopy.hpp"
#include "geoloc/ransac.hpp"
#include "geoloc/sim.hpp"
#include "geoloc/system_builder.hpp"

using namespace geoloc;

namespace {

GeoSystem three_epoch_system(std::uint64_t seed) {
  sim::ExperimentConfig cfg;
  cfg.n_pairs = 3;
  const auto s = sim::generate_scenario(cfg, seed);
  return build_fdoa(s.fdoa, {MeasurementMode::fdoa, 3, {}});
}

const homotopy::ParameterBasis& basis() {
  static const auto b = [] {
    RansacConfig c;
    c.rng_seed = 1;
    return make_fdoar_basis(c);
  }();
  return b;
}

void BM_EvaluateWithJacobian(benchmark::State& state) {
  const auto f = three_epoch_system(1).bind(true);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  poly::CVector z(static_cast<Eigen::Index>(f.num_variables()));
  for (auto& v : z) v = {n(rng), n(rng)};
  poly::CVector out;
  poly::CMatrix jac;
  for (auto _ : state) {
    f.evaluate_with_jacobian(z, out, jac);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_EvaluateWithJacobian);

void BM_TotalDegreeSolve(benchmark::State& state) {
  const auto f = three_epoch_system(3).bind(true);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto r = homotopy::solve(f, {}, ++seed);
    benchmark::DoNotOptimize(r.distinct_solutions.size());
  }
}
BENCHMARK(BM_TotalDegreeSolve)->Unit(benchmark::kMillisecond);

void BM_TrackToTarget(benchmark::State& state) {
  const auto family = fdoar_family(3);
  sim::ExperimentConfig cfg;
  cfg.n_pairs = 3;
  const auto s = sim::generate_scenario(cfg, 4);
  // Same relabelling run_fdoar applies so the target fits the shared family.
  auto m = s.fdoa;
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k].pair.reference.id = "s" + std::to_string(k + 1) + "a";
    m[k].pair.moving.id = "s" + std::to_string(k + 1) + "b";
  }
  const auto target = build_fdoa(m, {MeasurementMode::fdoa, 3, {}}).parameters;
  const auto& b = basis();
  for (auto _ : state) {
    auto r = homotopy::track_to_target(family, b, target, {});
    benchmark::DoNotOptimize(r.distinct_solutions.size());
  }
}
BENCHMARK(BM_TrackToTarget)->Unit(benchmark::kMillisecond);

void BM_FdoarIteration(benchmark::State& state) {
  const auto s = sim::generate_scenario({}, 5);
  RansacConfig cfg;
  cfg.maxiter = 1;
  const auto& b = basis();
  for (auto _ : state) {
    auto e = run_fdoar(s, cfg, &b);
    benchmark::DoNotOptimize(e.score);
  }
}
BENCHMARK(BM_FdoarIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
