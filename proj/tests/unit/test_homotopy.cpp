#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "geoloc/homotopy.hpp"
#include "geoloc/system_builder.hpp"
#include "oracles.hpp"

using namespace geoloc;
using namespace geoloc::homotopy;
using poly::Monomial;
using poly::Polynomial;

namespace {

ConcreteSystem univariate(Complex c) {
  Polynomial p(1);
  p.add(1.0, Monomial::variable(1, 0, 2)).add_constant(-c);
  return ConcreteSystem({p});
}

CVector scalar(Complex z) {
  CVector v(1);
  v[0] = z;
  return v;
}

std::vector<CVector> points(const SolveResult& r) {
  std::vector<CVector> out;
  for (const auto& s : r.distinct_solutions) out.push_back(s.point);
  return out;
}

std::vector<CVector> nonsingular_points(const SolveResult& r, double rcond) {
  std::vector<CVector> out;
  for (const auto& s : r.nonsingular_solutions(rcond)) out.push_back(s.point);
  return out;
}

poly::ParameterizedSystem fdoa_family(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto s = oracle::cube_scenario(3, rng);
  return build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}}).family;
}

}  // namespace

TEST(StartSystem, SquareRootsOfUnity) {
  const auto [g, starts] = start_system(univariate(4.0));
  ASSERT_EQ(starts.size(), 2u);
  std::vector<double> re = {starts[0][0].real(), starts[1][0].real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -1.0, 1e-15);
  EXPECT_NEAR(re[1], 1.0, 1e-15);
}

TEST(StartSystem, CountAndResiduals) {
  std::mt19937_64 rng(1);
  const ConcreteSystem f(oracle::random_system(3, 4, 6, rng));
  const auto [g, starts] = start_system(f);
  EXPECT_EQ(starts.size(), f.total_degree());
  double worst = 0;
  for (const auto& z : starts) worst = std::max(worst, g.evaluate(z).cwiseAbs().maxCoeff());
  EXPECT_LE(worst, 1e-13);
}

TEST(StartSystem, DegreesTwoTwoTwo) {
  std::vector<Polynomial> ps;
  for (std::size_t i = 0; i < 3; ++i) {
    Polynomial p(3);
    p.add(1.0, Monomial::variable(3, i, 2)).add(1.0, Monomial::variable(3, (i + 1) % 3)).add_constant(-2.0);
    ps.push_back(p);
  }
  EXPECT_EQ(start_system(ConcreteSystem(ps)).second.size(), 8u);
}

TEST(StartSystem, ZeroDegreeEquationRejected) {
  Polynomial a(2), b(2);
  a.add(1.0, Monomial::variable(2, 0, 2)).add_constant(-1.0);
  b.add_constant(3.0);
  EXPECT_THROW(start_system(ConcreteSystem({a, b})), GeolocError);
}

TEST(TrackPath, OneToTwo) {
  const auto g = univariate(1.0);
  const auto f = univariate(4.0);
  const auto r = track_path(scalar(1.0), g, f, random_gamma(3), {});
  EXPECT_EQ(r.status, PathStatus::converged);
  EXPECT_NEAR(std::abs(r.endpoint[0] - Complex(2.0)), 0.0, 1e-8);
}

TEST(Solve, PlusMinusTwo) {
  const auto res = solve(univariate(4.0), {}, 7);
  ASSERT_EQ(res.distinct_solutions.size(), 2u);
  EXPECT_EQ(res.converged_count(), 2u);
  std::vector<double> re;
  for (const auto& s : res.distinct_solutions) re.push_back(s.point[0].real());
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -2.0, 1e-8);
  EXPECT_NEAR(re[1], 2.0, 1e-8);
}

TEST(Solve, SeparableFourRoots) {
  Polynomial a(2), b(2);
  a.add(1.0, Monomial::variable(2, 0, 2)).add_constant(-1.0);
  b.add(1.0, Monomial::variable(2, 1, 2)).add_constant(-1.0);
  const auto res = solve(ConcreteSystem({a, b}), {}, 2);
  ASSERT_EQ(res.distinct_solutions.size(), 4u);
  std::set<std::pair<int, int>> signs;
  for (const auto& s : res.distinct_solutions) {
    EXPECT_NEAR(std::abs(s.point[0]), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(s.point[1]), 1.0, 1e-10);
    signs.insert({s.point[0].real() > 0, s.point[1].real() > 0});
  }
  EXPECT_EQ(signs.size(), 4u);
}

TEST(Solve, LinearHasOneSolution) {
  std::mt19937_64 rng(3);
  const ConcreteSystem f(oracle::random_system(4, 1, 5, rng));
  const auto res = solve(f, {}, 1);
  ASSERT_EQ(res.distinct_solutions.size(), 1u);
  EXPECT_LE(f.evaluate(res.distinct_solutions[0].point).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solve, ConvergedEndpointsHaveSmallResidual) {
  std::mt19937_64 rng(4);
  const ConcreteSystem f(oracle::random_system(3, 3, 8, rng));
  TrackerConfig cfg;
  const auto res = solve(f, cfg, 5);
  const auto fn = f.normalized();
  for (const auto& p : res.paths) {
    if (p.status == PathStatus::converged) {
      EXPECT_LE(fn.evaluate(p.endpoint).cwiseAbs().maxCoeff(), cfg.success_residual);
    }
  }
}

TEST(Solve, GammaInvariant) {
  std::mt19937_64 rng(5);
  const ConcreteSystem f(oracle::random_system(3, 3, 8, rng));
  const auto a = solve(f, {}, 11);
  const auto b = solve(f, {}, 12);
  EXPECT_NE(a.gamma, b.gamma);
  EXPECT_EQ(a.distinct_solutions.size(), b.distinct_solutions.size());
  EXPECT_LE(oracle::hausdorff(points(a), points(b)), 1e-6);
}

TEST(Solve, MonotoneTruncation) {
  std::mt19937_64 rng(6);
  // Sparse support leaves solutions at infinity, so some paths diverge.
  Polynomial a(2), b(2);
  a.add(1.0, Monomial({1, 1})).add(2.0, Monomial({1, 0})).add_constant(-1.0);
  b.add(1.0, Monomial({2, 1})).add(-1.0, Monomial({0, 1})).add_constant(0.5);
  const ConcreteSystem f({a, b});
  std::vector<std::vector<CVector>> sets;
  for (double norm : {1e6, 1e8, 1e10}) {
    TrackerConfig cfg;
    cfg.divergence_norm = norm;
    sets.push_back(points(solve(f, cfg, 9)));
  }
  for (std::size_t k = 1; k < sets.size(); ++k) {
    for (const auto& p : sets[k - 1]) {
      double best = INFINITY;
      for (const auto& q : sets[k]) best = std::min(best, (p - q).cwiseAbs().maxCoeff());
      EXPECT_LE(best, 1e-6);
    }
  }
}

TEST(Solve, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(7);
  const ConcreteSystem f(oracle::random_system(3, 3, 8, rng));
  TrackerConfig one, two;
  two.threads = 2;
  const auto a = solve(f, one, 3);
  const auto b = solve(f, two, 3);
  ASSERT_EQ(a.distinct_solutions.size(), b.distinct_solutions.size());
  for (std::size_t i = 0; i < a.distinct_solutions.size(); ++i) {
    EXPECT_EQ((a.distinct_solutions[i].point - b.distinct_solutions[i].point).norm(), 0.0);
  }
}

TEST(Solve, PositiveDimensionalFlagged) {
  // x*y = 0, x*y^2 = 0 vanish on the whole line x = 0.
  Polynomial a(2), b(2);
  a.add(1.0, Monomial({1, 1}));
  b.add(1.0, Monomial({1, 2}));
  const auto res = solve(ConcreteSystem({a, b}), {}, 4);
  EXPECT_EQ(res.finiteness, Finiteness::suspect_positive_dimensional);
}

TEST(Summarize, OrderIndependent) {
  std::mt19937_64 rng(8);
  const ConcreteSystem f(oracle::random_system(3, 3, 8, rng));
  TrackerConfig cfg;
  auto a = solve(f, cfg, 2);
  auto b = a;
  std::shuffle(b.paths.begin(), b.paths.end(), rng);
  summarize(b, cfg);
  ASSERT_EQ(a.distinct_solutions.size(), b.distinct_solutions.size());
  for (std::size_t i = 0; i < a.distinct_solutions.size(); ++i) {
    EXPECT_EQ((a.distinct_solutions[i].point - b.distinct_solutions[i].point).norm(), 0.0);
    EXPECT_EQ(a.distinct_solutions[i].multiplicity, b.distinct_solutions[i].multiplicity);
  }
}

TEST(Tracker, ConfigValidation) {
  TrackerConfig c;
  c.min_step = 1.0;
  c.max_step = 0.1;
  EXPECT_THROW(c.validate(), GeolocError);
  TrackerConfig d;
  d.max_newton_iters = 0;
  EXPECT_THROW(d.validate(), GeolocError);
}

TEST(Tracker, StartDimensionChecked) {
  const auto g = univariate(1.0);
  EXPECT_THROW(track_path(CVector::Ones(2), g, univariate(4.0), 1.0, {}), GeolocError);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 3, [&](std::size_t i) { ++hits[i]; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(ParameterHomotopy, StartTargetIsUnchanged) {
  const auto fam = fdoa_family(1);
  TrackerConfig cfg;
  const auto basis = make_parameter_basis(fam, cfg, 21);
  EXPECT_EQ(basis.start_points.size(), kFdoaGenericRootCount);
  EXPECT_LT(basis.start_points.size(), basis.total_degree);
  const auto res = track_to_target(fam, basis, basis.p0, cfg);
  EXPECT_EQ(res.converged_count(), basis.start_points.size());
  EXPECT_LE(oracle::hausdorff(points(res), basis.start_points), 1e-8);
}

TEST(ParameterHomotopy, MatchesFreshSolve) {
  const auto fam = fdoa_family(2);
  std::mt19937_64 rng(3);
  const auto target_sys = [&] {
    const auto s = oracle::cube_scenario(3, rng);
    return build_fdoa(s.measurements, {MeasurementMode::fdoa, 3, {}});
  }();
  TrackerConfig cfg;
  const std::vector<std::vector<Complex>> targets = {target_sys.parameters};
  const auto via_basis = parameter_solve(target_sys.family, targets, cfg, 5);
  ASSERT_EQ(via_basis.size(), 1u);
  const auto fresh = solve(target_sys.bind(true), cfg, 6);
  EXPECT_LE(oracle::hausdorff(nonsingular_points(via_basis[0], cfg.singular_rcond),
                              nonsingular_points(fresh, cfg.singular_rcond)),
            1e-6);
  EXPECT_LE(via_basis[0].paths.size(), kFdoaGenericRootCount);
  (void)fam;
}
