#include <random>

#include <gtest/gtest.h>

#include "geoloc/homotopy.hpp"
#include "geoloc/system_builder.hpp"
#include "oracles.hpp"

using namespace geoloc;

namespace {

double residual_at_truth(const GeoSystem& sys, const Vec3& truth) {
  return sys.bind(true).evaluate(sys.layout.lift(truth)).cwiseAbs().maxCoeff();
}

std::vector<TdoaMeasurement> tdoa_star(const Vec3& truth, std::vector<Vec3> others, Vec3 ref) {
  std::vector<TdoaMeasurement> out;
  const ReceiverState r{ref, Vec3::Zero(), "ref", 0};
  int k = 0;
  for (const auto& x : others) {
    const auto pair = make_pair(r, {x, Vec3::Zero(), "rx" + std::to_string(k++), 0});
    out.push_back({pair, tdoa_forward(truth, pair)});
  }
  return out;
}

}  // namespace

TEST(BuildFdoa, ThreeEpochShape) {
  std::mt19937_64 rng(1);
  const auto s = oracle::cube_scenario(3, rng);
  const auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  EXPECT_EQ(sys.family.num_variables(), 9u);
  EXPECT_EQ(sys.family.num_equations(), 9u);
  EXPECT_EQ(sys.layout.num_ranges(), 6u);
  EXPECT_EQ(sys.family.total_degree(), 512u);
}

TEST(BuildFdoa, TruthIsRoot) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const auto s = oracle::cube_scenario(3, rng);
    const auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
    EXPECT_LE(residual_at_truth(sys, s.truth), 1e-9);
  }
}

TEST(BuildFdoa, SharedReceiverStateSharesRange) {
  std::mt19937_64 rng(3);
  auto s = oracle::cube_scenario(3, rng);
  // Same reference receiver and epoch for all three pairs.
  for (std::size_t i = 0; i < 3; ++i) {
    auto& p = s.measurements[i].pair;
    p.reference = s.measurements[0].pair.reference;
    p.moving.epoch = 0;
    p.moving.id = "m" + std::to_string(i);
    s.measurements[i].value = fdoa_forward(s.truth, p);
  }
  const auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  EXPECT_EQ(sys.layout.num_ranges(), 4u);
  EXPECT_LE(residual_at_truth(sys, s.truth), 1e-9);
}

TEST(BuildFdoa, ZeroVelocityWarns) {
  const auto pair = make_pair({Vec3(0, 0, 0), Vec3::Zero(), "a", 0}, {Vec3(1, 2, 3), Vec3::Zero(), "b", 0});
  const std::vector<FdoaMeasurement> m = {{pair, 0.0}};
  const auto sys = build_fdoa(m, {MeasurementMode::fdoa, 3, {}});
  EXPECT_FALSE(sys.warnings.empty());
  // The FDOA row vanishes identically.
  std::mt19937_64 rng(4);
  const auto f = sys.bind(false);
  bool some_zero_row = false;
  for (int r = 0; r < static_cast<int>(f.num_equations()); ++r) {
    double worst = 0;
    for (int k = 0; k < 5; ++k) {
      worst = std::max(worst, std::abs(f.evaluate(oracle::random_point(f.num_variables(), rng))[r]));
    }
    some_zero_row = some_zero_row || worst == 0.0;
  }
  EXPECT_TRUE(some_zero_row);
}

TEST(BuildFdoa, EmptyRejected) {
  EXPECT_THROW(build_fdoa({}, {MeasurementMode::fdoa, 3, {}}), GeolocError);
}

TEST(BuildFdoa, SameReceiverTwiceRejected) {
  const ReceiverState a{Vec3(1, 2, 3), Vec3(1, 0, 0), "a", 0};
  const std::vector<FdoaMeasurement> m = {{ReceiverPair{a, a}, 0.0}};
  try {
    build_fdoa(m, {MeasurementMode::fdoa, 3, {}});
    FAIL();
  } catch (const GeolocError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_pair);
  }
}

TEST(BuildTdoa, TruthIsRoot3D) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 100);
  for (int k = 0; k < 50; ++k) {
    const Vec3 truth(u(rng), u(rng), u(rng));
    const auto m = tdoa_star(truth, {{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}},
                             {u(rng), u(rng), u(rng)});
    const auto sys = build_tdoa(m, {MeasurementMode::tdoa, 3, {}});
    EXPECT_EQ(sys.family.num_variables(), 4u);
    EXPECT_EQ(sys.family.num_equations(), 4u);
    EXPECT_LE(residual_at_truth(sys, truth), 1e-9);
  }
}

TEST(BuildTdoa, ZeroTauGivesBisector) {
  const ReceiverState a{Vec3(-5, 0, 0), Vec3::Zero(), "a", 0};
  const ReceiverState b{Vec3(5, 0, 0), Vec3::Zero(), "b", 0};
  const std::vector<TdoaMeasurement> m = {{make_pair(a, b), 0.0}};
  const auto sys = build_tdoa(m, {MeasurementMode::tdoa, 2, {}});
  const auto f = sys.bind(false);
  // Row 0 is the TDOA equation; the range equation follows.
  ASSERT_EQ(f.num_equations(), 2u);
  const auto& L = sys.layout;
  for (double y : {-30.0, 0.0, 7.5, 100.0}) {
    EXPECT_LE(std::abs(f.evaluate(L.lift(Vec3(0, y, 0)))[0]), 1e-12);
  }
  // The TDOA row is linear with no r1 or y dependence: its gradient is along x.
  const auto j = f.jacobian(L.lift(Vec3(3, 4, 0)));
  EXPECT_GT(std::abs(j(0, 0)), 0.0);
  EXPECT_EQ(std::abs(j(0, 1)), 0.0);
  EXPECT_EQ(std::abs(j(0, 2)), 0.0);
}

TEST(BuildTdoa, EndToEndRecoversTruth) {
  const Vec3 truth(31, 62, 18);
  const auto m = tdoa_star(truth, {{100, 0, 0}, {0, 100, 0}, {0, 0, 100}}, Vec3::Zero());
  const auto sys = build_tdoa(m, {MeasurementMode::tdoa, 3, {}});
  const auto res = homotopy::solve(sys.bind(true), {}, 1);
  double best = INFINITY;
  for (const auto& s : res.distinct_solutions) best = std::min(best, (sys.layout.emitter(s.point) - truth).norm());
  EXPECT_LE(best, 1e-6);
}

TEST(BuildTdoa, ReferenceMustBeShared) {
  const auto p1 = make_pair({Vec3(0, 0, 0), Vec3::Zero(), "a", 0}, {Vec3(1, 0, 0), Vec3::Zero(), "b", 0});
  const auto p2 = make_pair({Vec3(0, 5, 0), Vec3::Zero(), "c", 0}, {Vec3(1, 0, 0), Vec3::Zero(), "b", 0});
  const std::vector<TdoaMeasurement> m = {{p1, 0.0}, {p2, 0.0}};
  EXPECT_THROW(build_tdoa(m, {MeasurementMode::tdoa, 3, {}}), GeolocError);
}

TEST(BuildTdoa, CoincidentPairRejected) {
  const ReceiverState a{Vec3(1, 1, 1), Vec3::Zero(), "a", 0};
  const ReceiverState b{Vec3(1, 1, 1), Vec3::Zero(), "b", 0};
  const std::vector<TdoaMeasurement> m = {{make_pair(a, b), 0.0}};
  try {
    build_tdoa(m, {MeasurementMode::tdoa, 3, {}});
    FAIL();
  } catch (const GeolocError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_pair);
  }
}

TEST(BuildJoint, TruthIsRoot) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const auto s = oracle::cube_scenario(2, rng);
    std::vector<JointMeasurement> m;
    for (const auto& f : s.measurements) m.push_back({f.pair, f.value, tdoa_forward(s.truth, f.pair)});
    const auto sys = build_joint(m, {MeasurementMode::joint, 3, {}});
    EXPECT_LE(residual_at_truth(sys, s.truth), 1e-9);
  }
}

TEST(Altitude, FlatKeepsTruthRoot) {
  std::mt19937_64 rng(7);
  const auto s = oracle::cube_scenario(2, rng);
  auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  const auto eqs = sys.family.num_equations();
  sys = add_altitude_constraint(std::move(sys), {AltitudeModel::flat, s.truth.z()});
  EXPECT_EQ(sys.family.num_equations(), eqs + 1);
  EXPECT_TRUE(sys.family.num_equations() == sys.family.num_variables());
  EXPECT_LE(residual_at_truth(sys, s.truth), 1e-9);
}

TEST(Altitude, SphereKeepsTruthRoot) {
  std::mt19937_64 rng(8);
  const auto s = oracle::cube_scenario(2, rng);
  auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  sys = add_altitude_constraint(std::move(sys), {AltitudeModel::sphere, s.truth.norm()});
  EXPECT_LE(residual_at_truth(sys, s.truth), 1e-9);
}

TEST(Altitude, TwoDimensionalUnsupported) {
  std::mt19937_64 rng(9);
  const auto s = oracle::cube_scenario(2, rng);
  auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 2, {}});
  try {
    add_altitude_constraint(std::move(sys), {AltitudeModel::flat, 0.0});
    FAIL();
  } catch (const GeolocError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}

TEST(Altitude, TwiceRejected) {
  std::mt19937_64 rng(10);
  const auto s = oracle::cube_scenario(2, rng);
  auto sys = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  sys = add_altitude_constraint(std::move(sys), {AltitudeModel::flat, 1.0});
  EXPECT_THROW(add_altitude_constraint(std::move(sys), {AltitudeModel::flat, 1.0}), GeolocError);
}

TEST(Minimums, Table) {
  using M = MeasurementMode;
  EXPECT_EQ(minimum_measurements(M::tdoa, 2, false), 2);
  EXPECT_EQ(minimum_measurements(M::tdoa, 3, false), 3);
  EXPECT_EQ(minimum_measurements(M::tdoa, 3, true), 2);
  EXPECT_EQ(minimum_measurements(M::fdoa, 2, false), 2);
  EXPECT_EQ(minimum_measurements(M::fdoa, 3, false), 3);
  EXPECT_EQ(minimum_measurements(M::fdoa, 3, true), 2);
  EXPECT_EQ(minimum_measurements(M::joint, 2, false), 1);
  EXPECT_EQ(minimum_measurements(M::joint, 3, false), 2);
  EXPECT_EQ(minimum_measurements(M::joint, 3, true), 1);
  EXPECT_FALSE(minimum_measurements(M::fdoa, 2, true).has_value());
}

TEST(Mode, ParseRoundTrip) {
  for (auto m : {MeasurementMode::tdoa, MeasurementMode::fdoa, MeasurementMode::joint}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("radar"), GeolocError);
}

TEST(Builder, Deterministic) {
  std::mt19937_64 rng(11);
  const auto s = oracle::cube_scenario(3, rng);
  const auto a = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  const auto b = build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  EXPECT_EQ(a.family.to_string(), b.family.to_string());
  EXPECT_EQ(a.bind(true).to_string(), b.bind(true).to_string());
}
