#include <random>

#include <gtest/gtest.h>

#include "geoloc/solution_filter.hpp"
#include "oracles.hpp"

using namespace geoloc;
using poly::Complex;
using poly::CVector;

namespace {

CVector vec(std::initializer_list<Complex> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) out[i++] = x;
  return out;
}

struct Fixture {
  oracle::CubeScenario scenario;
  GeoSystem system;
};

Fixture fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto s = oracle::cube_scenario(3, rng);
  auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  return {std::move(s), std::move(sys)};
}

FdoaMeasurement measurement(Vec3 vi, Vec3 vj, double f) {
  return {make_pair({Vec3(0, 0, 0), vi, "a", 0}, {Vec3(1, 1, 1), vj, "b", 0}), f};
}

}  // namespace

TEST(ExtractReal, Examples) {
  const std::vector<CVector> sols = {vec({1.0, 2.0}), vec({Complex(1, 0.5), 2.0})};
  const auto real = extract_real(sols);
  ASSERT_EQ(real.size(), 1u);
  EXPECT_EQ(real[0][0], 1.0);
  EXPECT_EQ(real[0][1], 2.0);
}

TEST(ExtractReal, RelativeBoundary) {
  EXPECT_TRUE(is_real(vec({Complex(1.0, 1e-7), 0.5}), 1e-6));
  EXPECT_FALSE(is_real(vec({Complex(1e-9, 1e-7), 0.5e-9}), 1e-6));
}

TEST(Gate, TruthAccepted) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto fx = fixture(seed);
    const auto r = feasibility_gate(fx.system.layout.lift(fx.scenario.truth), fx.system.layout,
                                    fx.scenario.measurements, {});
    ASSERT_TRUE(std::holds_alternative<FeasibleCandidate>(r));
    const auto& c = std::get<FeasibleCandidate>(r);
    EXPECT_LE((c.emitter - fx.scenario.truth).norm(), 1e-9);
    ASSERT_EQ(c.ranges.size(), fx.system.layout.num_ranges());
    for (std::size_t k = 0; k < c.ranges.size(); ++k) {
      EXPECT_NEAR(c.ranges[k], (fx.system.layout.range_receivers()[k].position - c.emitter).norm(), 1e-9);
    }
  }
}

TEST(Gate, ZeroRangeRejected) {
  const auto fx = fixture(2);
  auto z = fx.system.layout.lift(fx.scenario.truth);
  z[static_cast<Eigen::Index>(fx.system.layout.range_index(0))] = 0.0;
  const auto r = feasibility_gate(z, fx.system.layout, fx.scenario.measurements, {});
  ASSERT_TRUE(std::holds_alternative<RejectionReason>(r));
  EXPECT_EQ(std::get<RejectionReason>(r), RejectionReason::nonpositive_range);
}

TEST(Gate, NegativeRangeRejected) {
  const auto fx = fixture(3);
  auto z = fx.system.layout.lift(fx.scenario.truth);
  const auto i = static_cast<Eigen::Index>(fx.system.layout.range_index(2));
  z[i] = -z[i];
  const auto r = feasibility_gate(z, fx.system.layout, fx.scenario.measurements, {});
  EXPECT_EQ(std::get<RejectionReason>(r), RejectionReason::nonpositive_range);
}

TEST(Gate, RangeMismatchRejected) {
  const auto fx = fixture(4);
  auto z = fx.system.layout.lift(fx.scenario.truth);
  // One metre in local units.
  z[static_cast<Eigen::Index>(fx.system.layout.range_index(1))] += 1.0 / fx.system.layout.frame().scale;
  const auto r = feasibility_gate(z, fx.system.layout, fx.scenario.measurements, {});
  EXPECT_EQ(std::get<RejectionReason>(r), RejectionReason::range_inconsistent);
}

TEST(Gate, ComplexRejected) {
  const auto fx = fixture(5);
  auto z = fx.system.layout.lift(fx.scenario.truth);
  z[0] += Complex(0, 0.1);
  const auto r = feasibility_gate(z, fx.system.layout, fx.scenario.measurements, {});
  EXPECT_EQ(std::get<RejectionReason>(r), RejectionReason::complex);
}

TEST(Gate, EmitterOnScenarioReceiverRejected) {
  const auto fx = fixture(6);
  // Candidate is consistent with its own ranges but sits on a receiver used
  // by another scenario measurement, where the forward FDOA is undefined.
  const Vec3 spot = fx.scenario.measurements[0].pair.moving.position + Vec3(1e-3, 0, 0);
  auto others = fx.scenario.measurements;
  others[1].pair.moving.position = spot;
  const auto r = feasibility_gate(fx.system.layout.lift(spot), fx.system.layout, others, {});
  ASSERT_TRUE(std::holds_alternative<RejectionReason>(r));
  EXPECT_EQ(std::get<RejectionReason>(r), RejectionReason::fdoa_bound);
}

TEST(Gate, DimensionMismatch) {
  const auto fx = fixture(7);
  EXPECT_THROW(feasibility_gate(CVector::Ones(3), fx.system.layout, fx.scenario.measurements, {}), GeolocError);
}

TEST(BoundCheck, Examples) {
  EXPECT_FALSE(fdoa_bound_check(measurement({1, 0, 0}, {0, 2, 0}, 3.5)));
  EXPECT_TRUE(fdoa_bound_check(measurement({1, 0, 0}, {0, 2, 0}, -3.0)));
  EXPECT_TRUE(fdoa_bound_check(measurement({1, 0, 0}, {0, 2, 0}, 3.4), 0.5));
}

TEST(BoundCheck, ForwardSimulatedAlwaysPass) {
  std::mt19937_64 rng(8);
  std::size_t pass = 0;
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n / 10; ++k) {
    const auto s = oracle::cube_scenario(10, rng);
    pass += bound_passing(s.measurements).size();
  }
  EXPECT_EQ(pass, n);
}

TEST(BoundCheck, PassingIndices) {
  const std::vector<FdoaMeasurement> m = {measurement({1, 0, 0}, {0, 1, 0}, 0.5),
                                          measurement({1, 0, 0}, {0, 1, 0}, 2.5),
                                          measurement({1, 0, 0}, {0, 1, 0}, -1.0)};
  EXPECT_EQ(bound_passing(m), (std::vector<std::size_t>{0, 2}));
}
