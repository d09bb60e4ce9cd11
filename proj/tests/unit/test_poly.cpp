#include <random>

#include <gtest/gtest.h>

#include "geoloc/poly.hpp"
#include "oracles.hpp"

using namespace geoloc;
using namespace geoloc::poly;

namespace {

ConcreteSystem single(std::vector<Term> terms, std::size_t n = 1) {
  Polynomial p(n);
  for (auto& t : terms) p.add(t.coefficient, t.monomial);
  return ConcreteSystem({p});
}

CVector vec(std::initializer_list<Complex> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Evaluate, StartSystemFactor) {
  const auto f = single({{1.0, Monomial::variable(1, 0, 2)}, {-1.0, Monomial(1)}});
  EXPECT_EQ(f.evaluate(vec({1.0}))[0], Complex(0.0));
  EXPECT_EQ(f.evaluate(vec({2.0}))[0], Complex(3.0));
}

TEST(Jacobian, Square) {
  const auto f = single({{1.0, Monomial::variable(1, 0, 2)}, {-1.0, Monomial(1)}});
  EXPECT_EQ(f.jacobian(vec({3.0}))(0, 0), Complex(6.0));
}

TEST(Jacobian, LinearIsConstant) {
  Polynomial a(2), b(2);
  a.add(2.0, Monomial::variable(2, 0)).add(-1.0, Monomial::variable(2, 1)).add_constant(4.0);
  b.add(Complex(0, 1), Monomial::variable(2, 0)).add(3.0, Monomial::variable(2, 1));
  const ConcreteSystem f({a, b});
  std::mt19937_64 rng(1);
  const auto j0 = f.jacobian(oracle::random_point(2, rng));
  const auto j1 = f.jacobian(oracle::random_point(2, rng));
  EXPECT_EQ((j0 - j1).norm(), 0.0);
  EXPECT_EQ(j0(0, 0), Complex(2.0));
  EXPECT_EQ(j0(1, 1), Complex(3.0));
}

TEST(Evaluate, DimensionMismatch) {
  const auto f = single({{1.0, Monomial::variable(1, 0, 2)}});
  EXPECT_THROW(f.evaluate(vec({1.0, 2.0})), GeolocError);
  EXPECT_THROW(f.jacobian(vec({1.0, 2.0})), GeolocError);
}

// Frozen values from a 50-digit evaluation.
TEST(Evaluate, Golden) {
  Polynomial a(2), b(2);
  a.add(Complex(1, 2), Monomial({2, 1})).add(-3.0, Monomial({0, 3})).add(0.5, Monomial({1, 0})).add_constant(-7.0);
  b.add(1.0, Monomial({1, 1})).add_constant(Complex(-2, 1));
  const ConcreteSystem f({a, b});
  const auto z = vec({Complex(0.3, -1.1), Complex(1.7, 0.4)});
  const auto v = f.evaluate(z);
  EXPECT_NEAR(std::abs(v[0] - Complex(-17.641, -15.612)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(v[1] - Complex(-1.05, -0.75)), 0.0, 1e-15);
  const auto j = f.jacobian(z);
  EXPECT_NEAR(std::abs(j(0, 0) - Complex(9.4, 0.3)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(j(0, 1) - Complex(-24.37, -15.14)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(j(1, 0) - Complex(1.7, 0.4)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(j(1, 1) - Complex(0.3, -1.1)), 0.0, 1e-15);
}

TEST(Evaluate, MatchesExtendedPrecision) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const auto polys = oracle::random_system(4, 3, 12, rng);
    const ConcreteSystem f(polys);
    const auto z = oracle::random_point(4, rng);
    const auto ref = oracle::evaluate_ld(polys, z);
    const auto v = f.evaluate(z);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      // Relative to the sum of term magnitudes (the scale of cancellation).
      long double scale = 0;
      for (const auto& t : polys[i].terms()) {
        long double m = std::abs(t.coefficient);
        for (std::size_t l = 0; l < 4; ++l) {
          for (int e = 0; e < t.monomial.exponents[l]; ++e) m *= std::abs(z[static_cast<Eigen::Index>(l)]);
        }
        scale += m;
      }
      const auto err = std::abs(std::complex<long double>(v[static_cast<Eigen::Index>(i)].real(),
                                                          v[static_cast<Eigen::Index>(i)].imag()) - ref[i]);
      EXPECT_LE(err, 1e-13L * scale);
    }
  }
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto polys = oracle::random_system(4, 3, 10, rng);
    const ConcreteSystem f(polys);
    const auto z = oracle::random_point(4, rng);
    const auto j = f.jacobian(z);
    const auto fd = oracle::jacobian_fd(polys, z);
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      for (Eigen::Index c = 0; c < j.cols(); ++c) {
        if (std::abs(fd(r, c)) > 1e-8) {
          EXPECT_LE(std::abs(j(r, c) - fd(r, c)), 1e-5 * std::abs(fd(r, c)));
        }
      }
    }
  }
}

TEST(TotalDegree, Products) {
  Polynomial q(3);
  std::vector<Polynomial> three;
  for (std::size_t i = 0; i < 3; ++i) {
    Polynomial p(3);
    p.add(1.0, Monomial::variable(3, i, 2)).add_constant(-1.0);
    three.push_back(p);
  }
  EXPECT_EQ(ConcreteSystem(three).total_degree(), 8u);
  Polynomial lin(1);
  lin.add(2.0, Monomial::variable(1, 0)).add_constant(1.0);
  EXPECT_EQ(ConcreteSystem({lin}).total_degree(), 1u);
}

TEST(TotalDegree, MatchesTermLists) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto polys = oracle::random_system(3, 4, 6, rng);
    EXPECT_EQ(ConcreteSystem(polys).total_degree(), oracle::bezout(polys));
  }
}

TEST(Polynomial, NormalizeMergesAndDropsZeros) {
  Polynomial p(2);
  p.add(1.0, Monomial({1, 0})).add(2.0, Monomial({0, 1})).add(-1.0, Monomial({1, 0}));
  p.normalize();
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.terms()[0].monomial.exponents, (std::vector<int>{0, 1}));
  EXPECT_EQ(p.degree(), 1);
}

TEST(Evaluate, LinearInCoefficients) {
  std::mt19937_64 rng(5);
  const auto f = oracle::random_system(3, 3, 8, rng);
  const auto g = oracle::random_system(3, 3, 8, rng);
  const Complex a(0.7, -1.3), b(-2.1, 0.4);
  std::vector<Polynomial> h;
  for (std::size_t i = 0; i < 3; ++i) {
    Polynomial p(3);
    for (const auto& t : f[i].terms()) p.add(a * t.coefficient, t.monomial);
    for (const auto& t : g[i].terms()) p.add(b * t.coefficient, t.monomial);
    p.normalize();
    h.push_back(p);
  }
  const auto z = oracle::random_point(3, rng);
  const CVector lhs = ConcreteSystem(h).evaluate(z);
  const CVector rhs = a * ConcreteSystem(f).evaluate(z) + b * ConcreteSystem(g).evaluate(z);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST(Dump, GradedLexOrder) {
  Polynomial p(2);
  p.add_constant(1.0).add(1.0, Monomial({0, 1})).add(1.0, Monomial({1, 0})).add(1.0, Monomial({1, 1}));
  p.normalize();
  ASSERT_EQ(p.terms().size(), 4u);
  EXPECT_EQ(p.terms()[0].monomial.exponents, (std::vector<int>{1, 1}));
  EXPECT_EQ(p.terms()[1].monomial.exponents, (std::vector<int>{1, 0}));
  EXPECT_EQ(p.terms()[2].monomial.exponents, (std::vector<int>{0, 1}));
  EXPECT_EQ(p.terms()[3].monomial.exponents, (std::vector<int>{0, 0}));
  const auto text = ConcreteSystem({p}, {"x", "y"}).to_string();
  EXPECT_NE(text.find("x"), std::string::npos);
  EXPECT_EQ(text, ConcreteSystem({p}, {"x", "y"}).to_string());
}

namespace {

// a*x^2 + b*y - a*b, b*x - 1 with parameters (a, b).
ParameterizedSystem small_family() {
  const std::size_t n = 2;
  const auto a = ParamExpr::parameter(0);
  const auto b = ParamExpr::parameter(1);
  std::vector<std::vector<ParamTerm>> eqs(2);
  eqs[0].push_back({a, Monomial::variable(n, 0, 2)});
  eqs[0].push_back({b, Monomial::variable(n, 1)});
  eqs[0].push_back({-(a * b), Monomial(n)});
  eqs[1].push_back({b, Monomial::variable(n, 0)});
  eqs[1].push_back({ParamExpr::constant(-1.0), Monomial(n)});
  return ParameterizedSystem(eqs, {"x", "y"}, {"a", "b"});
}

}  // namespace

TEST(Parameterized, BindMatchesDirectSubstitution) {
  const auto fam = small_family();
  const std::vector<Complex> p = {Complex(1.5, 0.2), Complex(-0.7, 1.1)};
  const auto f = fam.bind(p);
  Polynomial e0(2), e1(2);
  e0.add(p[0], Monomial::variable(2, 0, 2)).add(p[1], Monomial::variable(2, 1)).add_constant(-p[0] * p[1]);
  e1.add(p[1], Monomial::variable(2, 0)).add_constant(-1.0);
  const ConcreteSystem g({e0, e1});
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const auto z = oracle::random_point(2, rng);
    EXPECT_LE((f.evaluate(z) - g.evaluate(z)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Parameterized, BindIsPure) {
  const auto fam = small_family();
  const std::vector<Complex> p = {Complex(1.5, 0.2), Complex(-0.7, 1.1)};
  const auto f0 = fam.bind(p);
  const auto f1 = fam.bind(p);
  const auto c0 = f0.coefficients();
  const auto c1 = f1.coefficients();
  ASSERT_EQ(c0.size(), c1.size());
  for (std::size_t i = 0; i < c0.size(); ++i) EXPECT_EQ(c0[i], c1[i]);
}

TEST(Parameterized, UnreferencedParameterRejected) {
  std::vector<std::vector<ParamTerm>> eqs(1);
  eqs[0].push_back({ParamExpr::parameter(0), Monomial::variable(1, 0)});
  EXPECT_THROW(ParameterizedSystem(eqs, {"x"}, {"a", "unused"}), GeolocError);
}

TEST(Parameterized, DirectionalMatchesDifference) {
  const auto fam = small_family();
  const std::vector<Complex> p = {Complex(1.5, 0.2), Complex(-0.7, 1.1)};
  const std::vector<Complex> dp = {Complex(0.3, -0.4), Complex(1.0, 0.5)};
  std::vector<Complex> d(fam.num_coefficients()), cp(fam.num_coefficients()), cm(fam.num_coefficients());
  fam.bind_directional_into(p, dp, d);
  const double h = 1e-6;
  std::vector<Complex> pp(2), pm(2);
  for (int i = 0; i < 2; ++i) {
    pp[i] = p[i] + h * dp[i];
    pm[i] = p[i] - h * dp[i];
  }
  fam.bind_into(pp, cp);
  fam.bind_into(pm, cm);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(std::abs(d[i] - (cp[i] - cm[i]) / (2 * h)), 1e-8);
  EXPECT_EQ(fam.parameter_degree(), 2);
}
