#include "geoloc/poly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace geoloc::poly {

Monomial Monomial::variable(std::size_t n_vars, std::size_t var, int power) {
  Monomial m(n_vars);
  m.exponents.at(var) = power;
  return m;
}

int Monomial::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.size() != size()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "monomial length mismatch");
  }
  Monomial out(*this);
  for (std::size_t i = 0; i < size(); ++i) out.exponents[i] += other.exponents[i];
  return out;
}

bool grlex_before(const Monomial& a, const Monomial& b) {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da > db;
  return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(), a.exponents.begin(),
                                      a.exponents.end());
}

Polynomial& Polynomial::add(Complex coefficient, Monomial monomial) {
  if (monomial.size() != n_vars_) {
    throw GeolocError(ErrorKind::dimension_mismatch, "monomial has " +
                                                         std::to_string(monomial.size()) +
                                                         " exponents, expected " +
                                                         std::to_string(n_vars_));
  }
  for (int e : monomial.exponents) {
    if (e < 0) throw GeolocError(ErrorKind::invalid_argument, "negative exponent");
  }
  terms_.push_back({coefficient, std::move(monomial)});
  return *this;
}

Polynomial& Polynomial::add_constant(Complex coefficient) {
  return add(coefficient, Monomial(n_vars_));
}

void Polynomial::normalize() {
  std::vector<Term> merged;
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return grlex_before(a.monomial, b.monomial); });
  for (auto& t : terms_) {
    if (!merged.empty() && merged.back().monomial == t.monomial) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coefficient == Complex(0.0); });
  terms_ = std::move(merged);
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    if (t.coefficient != Complex(0.0)) d = std::max(d, t.monomial.degree());
  }
  return d;
}

namespace detail {

namespace {

inline Complex ipow(Complex x, int e) {
  Complex r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

// Neumaier summation on one real component.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

void Structure::evaluate(std::span<const Complex> coeffs, const CVector& z, CVector& out) const {
  const std::size_t n_eqs = num_equations();
  out.resize(static_cast<Eigen::Index>(n_eqs));
  for (std::size_t k = 0; k < n_eqs; ++k) {
    Complex acc = 0.0;
    for (std::uint32_t t = term_begin[k]; t < term_begin[k + 1]; ++t) {
      Complex v = coeffs[t];
      for (std::uint32_t f = factor_begin[t]; f < factor_begin[t + 1]; ++f) {
        v *= ipow(z[factors[f].first], factors[f].second);
      }
      acc += v;
    }
    out[static_cast<Eigen::Index>(k)] = acc;
  }
}

void Structure::evaluate_compensated(std::span<const Complex> coeffs, const CVector& z,
                                     CVector& out) const {
  const std::size_t n_eqs = num_equations();
  out.resize(static_cast<Eigen::Index>(n_eqs));
  for (std::size_t k = 0; k < n_eqs; ++k) {
    CompensatedSum re;
    CompensatedSum im;
    for (std::uint32_t t = term_begin[k]; t < term_begin[k + 1]; ++t) {
      Complex v = coeffs[t];
      for (std::uint32_t f = factor_begin[t]; f < factor_begin[t + 1]; ++f) {
        v *= ipow(z[factors[f].first], factors[f].second);
      }
      re.add(v.real());
      im.add(v.imag());
    }
    out[static_cast<Eigen::Index>(k)] = Complex(re.value(), im.value());
  }
}

void Structure::evaluate_with_jacobian(std::span<const Complex> coeffs, const CVector& z,
                                       CVector& f, CMatrix& jac) const {
  evaluate_with_jacobian(coeffs, {}, z, f, jac, nullptr);
}

void Structure::evaluate_with_jacobian(std::span<const Complex> coeffs,
                                       std::span<const Complex> dcoeffs, const CVector& z,
                                       CVector& f, CMatrix& jac, CVector* df) const {
  const auto n_eqs = static_cast<Eigen::Index>(num_equations());
  const auto nv = static_cast<Eigen::Index>(n_vars);
  f.resize(n_eqs);
  jac.resize(n_eqs, nv);
  jac.setZero();
  if (df) df->resize(n_eqs);
  // Terms in these systems have at most a handful of factors.
  constexpr std::size_t kMaxFactors = 16;
  Complex powers[kMaxFactors];
  for (Eigen::Index k = 0; k < n_eqs; ++k) {
    Complex acc = 0.0;
    Complex dacc = 0.0;
    for (std::uint32_t t = term_begin[k]; t < term_begin[k + 1]; ++t) {
      const std::uint32_t f0 = factor_begin[t];
      const std::uint32_t nf = factor_begin[t + 1] - f0;
      const Complex c = coeffs[t];
      if (nf == 0) {
        acc += c;
        if (df) dacc += dcoeffs[t];
        continue;
      }
      if (nf > kMaxFactors) {
        throw GeolocError(ErrorKind::unsupported, "term has too many factors");
      }
      Complex mono = 1.0;
      for (std::uint32_t i = 0; i < nf; ++i) {
        powers[i] = ipow(z[factors[f0 + i].first], factors[f0 + i].second);
        mono *= powers[i];
      }
      acc += c * mono;
      if (df) dacc += dcoeffs[t] * mono;
      for (std::uint32_t i = 0; i < nf; ++i) {
        const auto [var, e] = factors[f0 + i];
        Complex d = c * static_cast<double>(e) * ipow(z[var], e - 1);
        for (std::uint32_t j = 0; j < nf; ++j) {
          if (j != i) d *= powers[j];
        }
        jac(k, var) += d;
      }
    }
    f[k] = acc;
    if (df) (*df)[k] = dacc;
  }
}

namespace {

std::shared_ptr<Structure> build_structure(std::size_t n_vars,
                                           const std::vector<std::vector<Monomial>>& eqs) {
  auto s = std::make_shared<Structure>();
  s->n_vars = n_vars;
  s->term_begin.push_back(0);
  s->factor_begin.push_back(0);
  for (const auto& eq : eqs) {
    for (const auto& m : eq) {
      for (std::size_t v = 0; v < m.size(); ++v) {
        if (m.exponents[v] > 0) {
          s->factors.emplace_back(static_cast<std::uint32_t>(v), m.exponents[v]);
        }
      }
      s->factor_begin.push_back(static_cast<std::uint32_t>(s->factors.size()));
      s->monomials.push_back(m);
    }
    s->term_begin.push_back(static_cast<std::uint32_t>(s->monomials.size()));
  }
  return s;
}

}  // namespace

}  // namespace detail

ConcreteSystem::ConcreteSystem(std::vector<Polynomial> polynomials,
                               std::vector<std::string> unknowns) {
  if (polynomials.empty()) {
    throw GeolocError(ErrorKind::invalid_argument, "system has no equations");
  }
  const std::size_t n_vars = polynomials.front().num_variables();
  std::vector<std::vector<Monomial>> support;
  for (auto& p : polynomials) {
    if (p.num_variables() != n_vars) {
      throw GeolocError(ErrorKind::dimension_mismatch, "equations disagree on unknown count");
    }
    p.normalize();
    auto& eq = support.emplace_back();
    for (const auto& t : p.terms()) {
      eq.push_back(t.monomial);
      coeffs_.push_back(t.coefficient);
    }
  }
  structure_ = detail::build_structure(n_vars, support);
  if (unknowns.empty()) {
    for (std::size_t i = 0; i < n_vars; ++i) unknowns.push_back("z" + std::to_string(i + 1));
  }
  if (unknowns.size() != n_vars) {
    throw GeolocError(ErrorKind::dimension_mismatch, "unknown name count mismatch");
  }
  unknowns_ = std::move(unknowns);
}

ConcreteSystem::ConcreteSystem(std::shared_ptr<const detail::Structure> structure,
                               std::vector<Complex> coeffs, std::vector<std::string> unknowns)
    : structure_(std::move(structure)), coeffs_(std::move(coeffs)), unknowns_(std::move(unknowns)) {
  if (!structure_ || coeffs_.size() != structure_->num_terms()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "coefficient count does not match structure");
  }
}

void ConcreteSystem::check_point(const CVector& z) const {
  if (static_cast<std::size_t>(z.size()) != num_variables()) {
    throw GeolocError(ErrorKind::dimension_mismatch,
                      "point has " + std::to_string(z.size()) + " coordinates, system has " +
                          std::to_string(num_variables()) + " unknowns");
  }
}

CVector ConcreteSystem::evaluate(const CVector& z) const {
  check_point(z);
  CVector out;
  structure_->evaluate_compensated(coeffs_, z, out);
  return out;
}

CMatrix ConcreteSystem::jacobian(const CVector& z) const {
  check_point(z);
  CVector f;
  CMatrix jac;
  structure_->evaluate_with_jacobian(coeffs_, z, f, jac);
  return jac;
}

void ConcreteSystem::evaluate_with_jacobian(const CVector& z, CVector& f, CMatrix& jac) const {
  check_point(z);
  structure_->evaluate_with_jacobian(coeffs_, z, f, jac);
}

std::vector<int> ConcreteSystem::degrees() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    int d = 0;
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      if (coeffs_[t] != Complex(0.0)) d = std::max(d, structure_->monomials[t].degree());
    }
    out.push_back(d);
  }
  return out;
}

std::uint64_t ConcreteSystem::total_degree() const {
  std::uint64_t total = 1;
  for (int d : degrees()) total *= static_cast<std::uint64_t>(d);
  return total;
}

std::vector<double> ConcreteSystem::max_coefficient_magnitudes() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    double m = 0.0;
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      m = std::max(m, std::abs(coeffs_[t]));
    }
    out.push_back(m);
  }
  return out;
}

ConcreteSystem ConcreteSystem::normalized() const {
  const auto scale = max_coefficient_magnitudes();
  std::vector<Complex> c = coeffs_;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    if (scale[k] == 0.0) continue;
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      c[t] /= scale[k];
    }
  }
  return ConcreteSystem(structure_, std::move(c), unknowns_);
}

std::vector<Polynomial> ConcreteSystem::polynomials() const {
  std::vector<Polynomial> out;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    Polynomial p(num_variables());
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      p.add(coeffs_[t], structure_->monomials[t]);
    }
    p.normalize();
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string format_complex(Complex c) {
  std::ostringstream os;
  os.precision(12);
  if (c.imag() == 0.0) {
    os << c.real();
  } else {
    os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
  }
  return os.str();
}

std::string format_monomial(const Monomial& m, std::span<const std::string> names) {
  std::string out;
  for (std::size_t v = 0; v < m.size(); ++v) {
    if (m.exponents[v] == 0) continue;
    out += "*" + names[v];
    if (m.exponents[v] > 1) out += "^" + std::to_string(m.exponents[v]);
  }
  return out;
}

}  // namespace

std::string ConcreteSystem::to_string() const {
  std::ostringstream os;
  const auto polys = polynomials();
  for (std::size_t k = 0; k < polys.size(); ++k) {
    os << "f" << (k + 1) << " =";
    if (polys[k].terms().empty()) os << " 0";
    for (std::size_t j = 0; j < polys[k].terms().size(); ++j) {
      const auto& t = polys[k].terms()[j];
      os << (j == 0 ? " " : " + ") << format_complex(t.coefficient)
         << format_monomial(t.monomial, unknowns_);
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- ParamExpr

ParamExpr ParamExpr::constant(Complex c) {
  ParamExpr e;
  if (c != Complex(0.0)) e.terms_.push_back({c, {}});
  return e;
}

ParamExpr ParamExpr::parameter(int index) {
  if (index < 0) throw GeolocError(ErrorKind::invalid_argument, "negative parameter index");
  ParamExpr e;
  e.terms_.push_back({Complex(1.0), {{index, 1}}});
  return e;
}

ParamExpr& ParamExpr::operator+=(const ParamExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  collect();
  return *this;
}

ParamExpr& ParamExpr::operator-=(const ParamExpr& other) { return *this += -other; }

ParamExpr operator*(Complex s, ParamExpr a) {
  for (auto& t : a.terms_) t.coefficient *= s;
  a.collect();
  return a;
}

ParamExpr operator*(const ParamExpr& a, const ParamExpr& b) {
  ParamExpr out;
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      std::map<int, int> powers;
      for (auto [k, e] : ta.powers) powers[k] += e;
      for (auto [k, e] : tb.powers) powers[k] += e;
      out.terms_.push_back(
          {ta.coefficient * tb.coefficient, std::vector<std::pair<int, int>>(powers.begin(), powers.end())});
    }
  }
  out.collect();
  return out;
}

void ParamExpr::collect() {
  std::map<std::vector<std::pair<int, int>>, Complex> acc;
  for (const auto& t : terms_) acc[t.powers] += t.coefficient;
  terms_.clear();
  for (auto& [powers, c] : acc) {
    if (c != Complex(0.0)) terms_.push_back({c, powers});
  }
}

int ParamExpr::degree() const {
  int best = 0;
  for (const auto& t : terms_) {
    int d = 0;
    for (auto [k, e] : t.powers) d += e;
    best = std::max(best, d);
  }
  return best;
}

Complex ParamExpr::evaluate(std::span<const Complex> params) const {
  Complex sum = 0.0;
  for (const auto& t : terms_) {
    Complex v = t.coefficient;
    for (auto [k, e] : t.powers) {
      for (int i = 0; i < e; ++i) v *= params[static_cast<std::size_t>(k)];
    }
    sum += v;
  }
  return sum;
}

Complex ParamExpr::directional(std::span<const Complex> params,
                               std::span<const Complex> dp) const {
  Complex sum = 0.0;
  for (const auto& t : terms_) {
    for (std::size_t i = 0; i < t.powers.size(); ++i) {
      const auto [ki, ei] = t.powers[i];
      const auto pi = static_cast<std::size_t>(ki);
      if (dp[pi] == Complex(0.0)) continue;
      Complex v = t.coefficient * static_cast<double>(ei) * dp[pi];
      for (int r = 0; r < ei - 1; ++r) v *= params[pi];
      for (std::size_t j = 0; j < t.powers.size(); ++j) {
        if (j == i) continue;
        const auto [kj, ej] = t.powers[j];
        for (int r = 0; r < ej; ++r) v *= params[static_cast<std::size_t>(kj)];
      }
      sum += v;
    }
  }
  return sum;
}

std::string ParamExpr::to_string(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i) out += " + ";
    out += format_complex(terms_[i].coefficient);
    for (auto [k, e] : terms_[i].powers) {
      out += "*" + names[static_cast<std::size_t>(k)];
      if (e > 1) out += "^" + std::to_string(e);
    }
  }
  return out;
}

// ------------------------------------------------------ ParameterizedSystem

ParameterizedSystem::ParameterizedSystem(std::vector<std::vector<ParamTerm>> equations,
                                         std::vector<std::string> unknowns,
                                         std::vector<std::string> parameters)
    : unknowns_(std::move(unknowns)), parameters_(std::move(parameters)) {
  if (equations.empty()) {
    throw GeolocError(ErrorKind::invalid_argument, "system has no equations");
  }
  const std::size_t n_vars = unknowns_.size();
  std::vector<std::vector<Monomial>> support;
  std::set<int> referenced;
  for (auto& eq : equations) {
    for (const auto& t : eq) {
      if (t.monomial.size() != n_vars) {
        throw GeolocError(ErrorKind::dimension_mismatch, "monomial length mismatch");
      }
    }
    std::sort(eq.begin(), eq.end(), [](const ParamTerm& a, const ParamTerm& b) {
      return grlex_before(a.monomial, b.monomial);
    });
    std::vector<ParamTerm> merged;
    for (auto& t : eq) {
      if (!merged.empty() && merged.back().monomial == t.monomial) {
        merged.back().coefficient += t.coefficient;
      } else {
        merged.push_back(std::move(t));
      }
    }
    std::erase_if(merged, [](const ParamTerm& t) { return t.coefficient.is_zero(); });
    auto& sup = support.emplace_back();
    int degree = 0;
    for (auto& t : merged) {
      for (const auto& m : t.coefficient.terms()) {
        for (auto [k, e] : m.powers) {
          if (static_cast<std::size_t>(k) >= parameters_.size()) {
            throw GeolocError(ErrorKind::invalid_argument, "parameter index out of range");
          }
          referenced.insert(k);
        }
      }
      degree = std::max(degree, t.monomial.degree());
      sup.push_back(t.monomial);
      coeff_exprs_.push_back(std::move(t.coefficient));
    }
    degrees_.push_back(degree);
  }
  if (referenced.size() != parameters_.size()) {
    for (std::size_t k = 0; k < parameters_.size(); ++k) {
      if (!referenced.count(static_cast<int>(k))) {
        throw GeolocError(ErrorKind::invalid_argument,
                          "parameter '" + parameters_[k] + "' is not referenced");
      }
    }
  }
  structure_ = detail::build_structure(n_vars, support);
}

std::uint64_t ParameterizedSystem::total_degree() const {
  std::uint64_t total = 1;
  for (int d : degrees_) total *= static_cast<std::uint64_t>(d);
  return total;
}

void ParameterizedSystem::check_params(std::span<const Complex> params) const {
  if (params.size() != parameters_.size()) {
    throw GeolocError(ErrorKind::dimension_mismatch,
                      "expected " + std::to_string(parameters_.size()) + " parameters, got " +
                          std::to_string(params.size()));
  }
}

int ParameterizedSystem::parameter_degree() const {
  int best = 0;
  for (const auto& e : coeff_exprs_) best = std::max(best, e.degree());
  return best;
}

void ParameterizedSystem::bind_into(std::span<const Complex> params,
                                    std::span<Complex> coeffs) const {
  for (std::size_t t = 0; t < coeff_exprs_.size(); ++t) coeffs[t] = coeff_exprs_[t].evaluate(params);
}

void ParameterizedSystem::bind_directional_into(std::span<const Complex> params,
                                                std::span<const Complex> dp,
                                                std::span<Complex> coeffs) const {
  for (std::size_t t = 0; t < coeff_exprs_.size(); ++t) {
    coeffs[t] = coeff_exprs_[t].directional(params, dp);
  }
}

ConcreteSystem ParameterizedSystem::bind(std::span<const Complex> params, bool normalize) const {
  check_params(params);
  std::vector<Complex> coeffs(coeff_exprs_.size());
  bind_into(params, coeffs);
  ConcreteSystem sys(structure_, std::move(coeffs), unknowns_);
  return normalize ? sys.normalized() : sys;
}

std::vector<std::vector<ParamTerm>> ParameterizedSystem::equations() const {
  std::vector<std::vector<ParamTerm>> out;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    auto& eq = out.emplace_back();
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      eq.push_back({coeff_exprs_[t], structure_->monomials[t]});
    }
  }
  return out;
}

std::string ParameterizedSystem::to_string() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < num_equations(); ++k) {
    os << "f" << (k + 1) << " =";
    for (auto t = structure_->term_begin[k]; t < structure_->term_begin[k + 1]; ++t) {
      os << (t == structure_->term_begin[k] ? " " : " + ") << "[" << coeff_exprs_[t].to_string(parameters_)
         << "]" << format_monomial(structure_->monomials[t], unknowns_);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace geoloc::poly
