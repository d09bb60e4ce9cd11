#pragma once

// Homotopy continuation: total-degree start systems, predictor-corrector path
// tracking in t from 1 to 0, and parameter homotopies that reuse the finite
// solutions of one generic instance for many nearby instances.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "geoloc/poly.hpp"

namespace geoloc::homotopy {

using poly::Complex;
using poly::ConcreteSystem;
using poly::CMatrix;
using poly::CVector;

struct TrackerConfig {
  double initial_step = 0.1;
  double min_step = 1e-7;
  double max_step = 0.2;
  // Corrector acceptance while tracking: |dz| <= tracking_tolerance * (1 + |z|).
  double tracking_tolerance = 1e-7;
  // A step is rejected when the first corrector update exceeds
  // predictor_tolerance * (1 + |z|); keeps the predictor near its own path.
  double predictor_tolerance = 1e-3;
  // Final refinement at t = 0 stops once the residual drops below this.
  double newton_tolerance = 1e-10;
  int max_newton_iters = 3;
  int max_refine_iters = 8;
  double divergence_norm = 1e8;
  double t_end = 0.0;
  double success_residual = 1e-8;
  double step_shrink = 0.5;
  double step_grow = 1.5;
  int successes_before_grow = 2;
  int max_steps = 5000;
  // Endpoints closer than this (max-norm, local coordinates) are one solution.
  double dedup_radius = 1e-6;
  // Reciprocal condition estimate below which a Jacobian counts as singular.
  double singular_rcond = 1e-10;
  // Number of worker threads for solve(); 0 = hardware concurrency.
  unsigned threads = 1;

  /// Throws invalid_argument when the bounds are inconsistent.
  void validate() const;
};

enum class PathStatus { converged, diverged, stalled, max_steps };
const char* to_string(PathStatus status);

struct PathResult {
  CVector endpoint;
  PathStatus status = PathStatus::stalled;
  double final_residual = 0.0;
  double final_t = 1.0;
  int steps_taken = 0;
  // Smallest reciprocal condition estimate of dH/dz seen along the path.
  double min_condition_proxy = 1.0;
  // Reciprocal condition estimate of the target Jacobian at the endpoint.
  double endpoint_condition = 0.0;
  std::size_t path_index = 0;
};

enum class Finiteness { finite, suspect_positive_dimensional };
const char* to_string(Finiteness f);

struct Solution {
  CVector point;
  std::size_t multiplicity = 1;  // number of paths that landed here
  std::size_t path_index = 0;    // first path (in canonical order)
  double residual = 0.0;
  double condition = 0.0;
};

struct SolveResult {
  std::vector<PathResult> paths;
  std::vector<Solution> distinct_solutions;
  Finiteness finiteness = Finiteness::finite;
  Complex gamma = 1.0;

  std::size_t converged_count() const;
  /// Distinct solutions whose Jacobian is not singular.
  std::vector<Solution> nonsingular_solutions(double singular_rcond) const;
};

/// H(z, t) with partial derivatives, tracked from t = 1 to t = 0.
class Homotopy {
 public:
  virtual ~Homotopy() = default;
  virtual std::size_t dimension() const = 0;
  /// Fills h = H(z,t), hz = dH/dz, ht = dH/dt. Must be safe to call
  /// concurrently from several threads.
  virtual void evaluate(const CVector& z, double t, CVector& h, CMatrix& hz, CVector& ht) const = 0;
};

/// gamma * t * g(z) + (1 - t) * f(z)
class StraightLineHomotopy final : public Homotopy {
 public:
  StraightLineHomotopy(ConcreteSystem start, ConcreteSystem target, Complex gamma);
  std::size_t dimension() const override { return target_.num_variables(); }
  void evaluate(const CVector& z, double t, CVector& h, CMatrix& hz, CVector& ht) const override;

 private:
  ConcreteSystem start_;
  ConcreteSystem target_;
  Complex gamma_;
};

/// F(z; t * p_start + (1 - t) * p_target), rows weighted by fixed scales.
class ParameterHomotopy final : public Homotopy {
 public:
  ParameterHomotopy(const poly::ParameterizedSystem& family, std::vector<Complex> p_start,
                    std::vector<Complex> p_target, std::vector<double> row_weights);
  std::size_t dimension() const override { return n_vars_; }
  void evaluate(const CVector& z, double t, CVector& h, CMatrix& hz, CVector& ht) const override;

 private:
  std::shared_ptr<const poly::detail::Structure> structure_;
  std::size_t n_vars_ = 0;
  int t_degree_ = 0;
  // Weighted coefficients as polynomials in t: t_coeffs_[j * ncoef + c] is
  // the t^j coefficient of coefficient c.
  std::vector<Complex> t_coeffs_;
};

/// Per-step record for debugging: (t, |z|, step size).
struct TraceRow {
  double t;
  double norm;
  double step;
};
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);

/// Total-degree start system g_i = z_i^{d_i} - 1 and its roots (all
/// combinations of d_i-th roots of unity, mixed-radix order).
std::pair<ConcreteSystem, std::vector<CVector>> start_system(const ConcreteSystem& target);

/// Tracks one path of `h` from t = 1 to t = t_end, then polishes the endpoint
/// against the target (h at t_end). Failures are reported as statuses.
PathResult track_path(const Homotopy& h, const CVector& start, const TrackerConfig& config,
                      std::vector<TraceRow>* trace = nullptr);

/// Convenience overload for the gamma-twisted straight-line homotopy.
PathResult track_path(const CVector& start, const ConcreteSystem& g, const ConcreteSystem& f,
                      Complex gamma, const TrackerConfig& config);

/// Random unit-modulus constant drawn from `seed`.
Complex random_gamma(std::uint64_t seed);

/// All total-degree paths of a square target. gamma is drawn from `seed`.
SolveResult solve(const ConcreteSystem& target, const TrackerConfig& config, std::uint64_t seed = 0);

/// Collapses converged endpoints into distinct solutions and sets the
/// finiteness verdict. Deterministic regardless of path order.
void summarize(SolveResult& result, const TrackerConfig& config);

/// Finite, nonsingular solutions of a family at a random complex parameter
/// point, used as start points for every later target.
struct ParameterBasis {
  std::vector<Complex> p0;
  std::vector<CVector> start_points;
  std::uint64_t total_degree = 0;
  SolveResult generic_solve;
};

ParameterBasis make_parameter_basis(const poly::ParameterizedSystem& family,
                                    const TrackerConfig& config, std::uint64_t seed);

/// Tracks every basis point from p0 to `p_target`. Rows are scaled by the
/// target's largest coefficient magnitudes, so residuals match a normalized
/// bind of the target.
SolveResult track_to_target(const poly::ParameterizedSystem& family, const ParameterBasis& basis,
                            std::span<const Complex> p_target, const TrackerConfig& config);

std::vector<SolveResult> parameter_solve(const poly::ParameterizedSystem& family,
                                         std::span<const std::vector<Complex>> p_targets,
                                         const TrackerConfig& config, std::uint64_t seed);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = auto).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace geoloc::homotopy
