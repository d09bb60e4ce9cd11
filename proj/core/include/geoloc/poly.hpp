#pragma once

// Sparse multivariate polynomials over complex doubles.
//
// A Polynomial is a normalized term list (duplicates merged, graded
// lexicographic order). A ConcreteSystem compiles a list of polynomials into a
// flat structure that is shared between instances with the same monomial
// support; only the coefficient vector differs. ParameterizedSystem keeps each
// coefficient as a polynomial expression in named parameters and binds it into
// a ConcreteSystem on demand.

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geoloc/error.hpp"

namespace geoloc::poly {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct Monomial {
  std::vector<int> exponents;

  Monomial() = default;
  explicit Monomial(std::size_t n_vars) : exponents(n_vars, 0) {}
  explicit Monomial(std::vector<int> e) : exponents(std::move(e)) {}

  /// x_var^power in n_vars unknowns.
  static Monomial variable(std::size_t n_vars, std::size_t var, int power = 1);

  int degree() const;
  std::size_t size() const { return exponents.size(); }
  Monomial operator*(const Monomial& other) const;
  bool operator==(const Monomial&) const = default;
};

/// Graded lexicographic order: higher total degree first, ties broken
/// lexicographically with larger exponent of the earlier variable first.
bool grlex_before(const Monomial& a, const Monomial& b);

struct Term {
  Complex coefficient;
  Monomial monomial;
};

class Polynomial {
 public:
  explicit Polynomial(std::size_t n_vars = 0) : n_vars_(n_vars) {}

  Polynomial& add(Complex coefficient, Monomial monomial);
  Polynomial& add_constant(Complex coefficient);

  /// Merges duplicate monomials, drops exactly-zero coefficients and sorts.
  void normalize();

  /// Max total degree over nonzero terms; 0 for the zero polynomial.
  int degree() const;
  std::size_t num_variables() const { return n_vars_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::size_t n_vars_;
  std::vector<Term> terms_;
};

namespace detail {

/// Flattened monomial support of a system. Term t of equation k lives at
/// index term_begin[k] + j; its factors (var, exponent) are
/// factors[factor_begin[t] .. factor_begin[t+1]).
struct Structure {
  std::size_t n_vars = 0;
  std::vector<std::uint32_t> term_begin;    // n_eqs + 1
  std::vector<std::uint32_t> factor_begin;  // n_terms + 1
  std::vector<std::pair<std::uint32_t, int>> factors;
  std::vector<Monomial> monomials;  // per term, for reporting

  std::size_t num_equations() const { return term_begin.size() - 1; }
  std::size_t num_terms() const { return factor_begin.size() - 1; }

  void evaluate(std::span<const Complex> coeffs, const CVector& z, CVector& out) const;
  void evaluate_compensated(std::span<const Complex> coeffs, const CVector& z,
                            CVector& out) const;
  void evaluate_with_jacobian(std::span<const Complex> coeffs, const CVector& z, CVector& f,
                              CMatrix& jac) const;
  /// Also fills df with the residual of the coefficient vector dcoeffs, which
  /// shares the monomial products.
  void evaluate_with_jacobian(std::span<const Complex> coeffs, std::span<const Complex> dcoeffs,
                              const CVector& z, CVector& f, CMatrix& jac, CVector* df) const;
};

}  // namespace detail

class ConcreteSystem {
 public:
  ConcreteSystem() = default;
  ConcreteSystem(std::vector<Polynomial> polynomials, std::vector<std::string> unknowns = {});
  ConcreteSystem(std::shared_ptr<const detail::Structure> structure, std::vector<Complex> coeffs,
                 std::vector<std::string> unknowns);

  std::size_t num_equations() const { return structure_ ? structure_->num_equations() : 0; }
  std::size_t num_variables() const { return structure_ ? structure_->n_vars : 0; }
  bool is_square() const { return num_equations() == num_variables(); }

  /// Residual vector f(z). Uses compensated summation.
  CVector evaluate(const CVector& z) const;
  /// Jacobian d f_k / d z_l.
  CMatrix jacobian(const CVector& z) const;
  /// Both at once into caller-provided storage (resized if needed).
  void evaluate_with_jacobian(const CVector& z, CVector& f, CMatrix& jac) const;

  std::vector<int> degrees() const;
  /// Product of equation degrees (Bezout number).
  std::uint64_t total_degree() const;

  /// Equation k with every coefficient divided by its largest magnitude.
  ConcreteSystem normalized() const;
  /// Per-equation largest coefficient magnitude (0 for a zero equation).
  std::vector<double> max_coefficient_magnitudes() const;

  std::vector<Polynomial> polynomials() const;
  const std::vector<std::string>& unknowns() const { return unknowns_; }
  std::span<const Complex> coefficients() const { return coeffs_; }
  const std::shared_ptr<const detail::Structure>& structure() const { return structure_; }

  /// Human-readable dump, one equation per line, graded lexicographic order.
  std::string to_string() const;

 private:
  void check_point(const CVector& z) const;

  std::shared_ptr<const detail::Structure> structure_;
  std::vector<Complex> coeffs_;
  std::vector<std::string> unknowns_;
};

/// Polynomial expression in parameters: sum of c * prod p_k^e_k.
class ParamExpr {
 public:
  struct Monomial {
    Complex coefficient;
    std::vector<std::pair<int, int>> powers;  // (parameter index, exponent), index-sorted
  };

  ParamExpr() = default;
  static ParamExpr constant(Complex c);
  static ParamExpr parameter(int index);

  ParamExpr& operator+=(const ParamExpr& other);
  ParamExpr& operator-=(const ParamExpr& other);
  friend ParamExpr operator+(ParamExpr a, const ParamExpr& b) { return a += b; }
  friend ParamExpr operator-(ParamExpr a, const ParamExpr& b) { return a -= b; }
  friend ParamExpr operator*(const ParamExpr& a, const ParamExpr& b);
  friend ParamExpr operator*(Complex s, ParamExpr a);
  ParamExpr operator-() const { return Complex(-1.0) * *this; }

  Complex evaluate(std::span<const Complex> params) const;
  /// d/ds expr(p + s*dp) at s = 0.
  Complex directional(std::span<const Complex> params, std::span<const Complex> dp) const;

  bool is_zero() const { return terms_.empty(); }
  /// Largest total parameter degree over the terms (0 for constants).
  int degree() const;
  const std::vector<Monomial>& terms() const { return terms_; }
  std::string to_string(std::span<const std::string> names) const;

 private:
  void collect();
  std::vector<Monomial> terms_;
};

struct ParamTerm {
  ParamExpr coefficient;
  poly::Monomial monomial;
};

class ParameterizedSystem {
 public:
  /// Each inner vector is one equation; terms with equal monomials are summed.
  /// Throws invalid_argument if some parameter is never referenced or a
  /// monomial has the wrong length.
  ParameterizedSystem(std::vector<std::vector<ParamTerm>> equations,
                      std::vector<std::string> unknowns, std::vector<std::string> parameters);

  std::size_t num_equations() const { return structure_->num_equations(); }
  std::size_t num_variables() const { return structure_->n_vars; }
  std::size_t num_parameters() const { return parameters_.size(); }
  const std::vector<std::string>& unknowns() const { return unknowns_; }
  const std::vector<std::string>& parameters() const { return parameters_; }

  /// Structural degree of each equation (generic over parameter values).
  const std::vector<int>& degrees() const { return degrees_; }
  std::uint64_t total_degree() const;

  ConcreteSystem bind(std::span<const Complex> params, bool normalize = false) const;
  void bind_into(std::span<const Complex> params, std::span<Complex> coeffs) const;
  /// Coefficients of d/ds F(z; p + s*dp) at s = 0.
  void bind_directional_into(std::span<const Complex> params, std::span<const Complex> dp,
                             std::span<Complex> coeffs) const;

  const std::shared_ptr<const detail::Structure>& structure() const { return structure_; }
  std::size_t num_coefficients() const { return coeff_exprs_.size(); }
  /// Largest parameter degree of any coefficient expression.
  int parameter_degree() const;

  /// Term lists as accepted by the constructor (merged, grlex ordered).
  std::vector<std::vector<ParamTerm>> equations() const;

  std::string to_string() const;

 private:
  void check_params(std::span<const Complex> params) const;

  std::shared_ptr<const detail::Structure> structure_;
  std::vector<ParamExpr> coeff_exprs_;  // aligned with structure terms
  std::vector<int> degrees_;
  std::vector<std::string> unknowns_;
  std::vector<std::string> parameters_;
};

}  // namespace geoloc::poly
