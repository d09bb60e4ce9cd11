#include "geoloc/homotopy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <Eigen/LU>

#include "dense_lu.hpp"

namespace geoloc::homotopy {

void TrackerConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!(positive(min_step) && min_step < max_step)) {
    throw GeolocError(ErrorKind::invalid_argument, "tracker needs 0 < min_step < max_step");
  }
  if (!positive(initial_step) || !positive(tracking_tolerance) || !positive(newton_tolerance) ||
      !positive(predictor_tolerance) || !positive(divergence_norm) || !positive(success_residual) || !positive(dedup_radius) ||
      !positive(singular_rcond)) {
    throw GeolocError(ErrorKind::invalid_argument, "tracker tolerances must be positive");
  }
  if (!(step_shrink > 0.0 && step_shrink < 1.0) || !(step_grow >= 1.0)) {
    throw GeolocError(ErrorKind::invalid_argument, "step factors must satisfy 0<shrink<1<=grow");
  }
  if (max_newton_iters < 1 || max_refine_iters < 0 || max_steps < 1 ||
      successes_before_grow < 1) {
    throw GeolocError(ErrorKind::invalid_argument, "iteration limits must be positive");
  }
  if (!(t_end >= 0.0 && t_end < 1.0)) {
    throw GeolocError(ErrorKind::invalid_argument, "t_end must lie in [0, 1)");
  }
}

const char* to_string(PathStatus status) {
  switch (status) {
    case PathStatus::converged: return "converged";
    case PathStatus::diverged: return "diverged";
    case PathStatus::stalled: return "stalled";
    case PathStatus::max_steps: return "max-steps";
  }
  return "unknown";
}

const char* to_string(Finiteness f) {
  return f == Finiteness::finite ? "finite" : "suspect-positive-dimensional";
}

std::size_t SolveResult::converged_count() const {
  return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const PathResult& p) {
    return p.status == PathStatus::converged;
  }));
}

std::vector<Solution> SolveResult::nonsingular_solutions(double singular_rcond) const {
  std::vector<Solution> out;
  for (const auto& s : distinct_solutions) {
    if (s.condition >= singular_rcond) out.push_back(s);
  }
  return out;
}

// ------------------------------------------------------------- homotopies

StraightLineHomotopy::StraightLineHomotopy(ConcreteSystem start, ConcreteSystem target,
                                           Complex gamma)
    : start_(std::move(start)), target_(std::move(target)), gamma_(gamma) {
  if (start_.num_variables() != target_.num_variables() ||
      start_.num_equations() != target_.num_equations()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "start and target systems differ in shape");
  }
}

void StraightLineHomotopy::evaluate(const CVector& z, double t, CVector& h, CMatrix& hz,
                                    CVector& ht) const {
  thread_local CVector gv;
  thread_local CVector fv;
  thread_local CMatrix gj;
  thread_local CMatrix fj;
  start_.evaluate_with_jacobian(z, gv, gj);
  target_.evaluate_with_jacobian(z, fv, fj);
  const Complex a = gamma_ * t;
  const double b = 1.0 - t;
  h = a * gv + b * fv;
  hz = a * gj + b * fj;
  ht = gamma_ * gv - fv;
}

ParameterHomotopy::ParameterHomotopy(const poly::ParameterizedSystem& family,
                                     std::vector<Complex> p_start, std::vector<Complex> p_target,
                                     std::vector<double> row_weights)
    : structure_(family.structure()),
      n_vars_(family.num_variables()),
      t_degree_(family.parameter_degree()) {
  if (p_start.size() != family.num_parameters() || p_target.size() != family.num_parameters()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "parameter vector length mismatch");
  }
  if (row_weights.empty()) row_weights.assign(family.num_equations(), 1.0);
  if (row_weights.size() != family.num_equations()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "row weight count mismatch");
  }
  // p(t) is affine in t, so every coefficient is a polynomial in t of degree
  // at most the parameter degree. Interpolate it once on equispaced nodes.
  const std::size_t nc = family.num_coefficients();
  const int d = t_degree_;
  const auto nodes = static_cast<Eigen::Index>(d + 1);
  Eigen::MatrixXd vander(nodes, nodes);
  CMatrix values(nodes, static_cast<Eigen::Index>(nc));
  std::vector<Complex> p(p_start.size());
  std::vector<Complex> c(nc);
  for (Eigen::Index j = 0; j < nodes; ++j) {
    const double t = d > 0 ? static_cast<double>(j) / d : 0.0;
    for (Eigen::Index k = 0; k < nodes; ++k) vander(j, k) = std::pow(t, static_cast<double>(k));
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = t * p_start[k] + (1.0 - t) * p_target[k];
    family.bind_into(p, c);
    for (std::size_t k = 0; k < nc; ++k) values(j, static_cast<Eigen::Index>(k)) = c[k];
  }
  const CMatrix mono = vander.cast<Complex>().fullPivLu().solve(values);
  t_coeffs_.resize(nc * static_cast<std::size_t>(nodes));
  const auto& s = *structure_;
  for (std::size_t eq = 0; eq < s.num_equations(); ++eq) {
    for (auto t = s.term_begin[eq]; t < s.term_begin[eq + 1]; ++t) {
      for (Eigen::Index j = 0; j < nodes; ++j) {
        t_coeffs_[static_cast<std::size_t>(j) * nc + t] =
            row_weights[eq] * mono(j, static_cast<Eigen::Index>(t));
      }
    }
  }
}

void ParameterHomotopy::evaluate(const CVector& z, double t, CVector& h, CMatrix& hz,
                                 CVector& ht) const {
  thread_local std::vector<Complex> c;
  thread_local std::vector<Complex> dc;
  const std::size_t nc = structure_->num_terms();
  c.resize(nc);
  dc.resize(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    Complex v = t_coeffs_[static_cast<std::size_t>(t_degree_) * nc + k];
    Complex dv = 0.0;
    for (int j = t_degree_ - 1; j >= 0; --j) {
      dv = dv * t + v;
      v = v * t + t_coeffs_[static_cast<std::size_t>(j) * nc + k];
    }
    c[k] = v;
    dc[k] = dv;
  }
  structure_->evaluate_with_jacobian(c, dc, z, h, hz, &ht);
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << "t,norm,step\n";
  const auto prec = os.precision(17);
  for (const auto& r : rows) os << r.t << "," << r.norm << "," << r.step << "\n";
  os.precision(prec);
}

// ------------------------------------------------------------ start system

std::pair<ConcreteSystem, std::vector<CVector>> start_system(const ConcreteSystem& target) {
  if (!target.is_square()) {
    throw GeolocError(ErrorKind::invalid_argument,
                      "total-degree start system needs a square target (" +
                          std::to_string(target.num_equations()) + " equations, " +
                          std::to_string(target.num_variables()) + " unknowns)");
  }
  const auto degrees = target.degrees();
  const std::size_t n = degrees.size();
  std::vector<poly::Polynomial> g;
  for (std::size_t i = 0; i < n; ++i) {
    if (degrees[i] < 1) {
      throw GeolocError(ErrorKind::invalid_argument,
                        "equation " + std::to_string(i + 1) + " has degree 0");
    }
    poly::Polynomial p(n);
    p.add(1.0, poly::Monomial::variable(n, i, degrees[i]));
    p.add_constant(-1.0);
    g.push_back(std::move(p));
  }
  ConcreteSystem start(std::move(g), target.unknowns());

  std::vector<std::vector<Complex>> roots(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < degrees[i]; ++k) {
      roots[i].push_back(std::polar(1.0, 2.0 * std::numbers::pi * k / degrees[i]));
    }
  }
  std::vector<CVector> points;
  const std::uint64_t count = target.total_degree();
  points.reserve(count);
  std::vector<int> digit(n, 0);
  for (std::uint64_t c = 0; c < count; ++c) {
    CVector z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) z[static_cast<Eigen::Index>(i)] = roots[i][digit[i]];
    points.push_back(std::move(z));
    for (std::size_t i = n; i-- > 0;) {
      if (++digit[i] < degrees[i]) break;
      digit[i] = 0;
    }
  }
  return {std::move(start), std::move(points)};
}

// ---------------------------------------------------------------- tracking

namespace {

// Max-modulus norm without hypot: sqrt of the largest squared modulus.
double inf_norm(const CVector& v) { return v.size() ? std::sqrt(v.cwiseAbs2().maxCoeff()) : 0.0; }

class Tracker {
 public:
  Tracker(const Homotopy& h, const TrackerConfig& cfg)
      : h_(h), cfg_(cfg) {}

  // dz/dt at (z, t); false if dH/dz is numerically singular.
  bool tangent(const CVector& z, double t, CVector& out) {
    h_.evaluate(z, t, hv_, hz_, ht_);
    if (!factor()) return false;
    out = -ht_;
    lu_.solve_in_place(out);
    return out.allFinite();
  }

  // Newton on H(., t) starting from z. Returns true on convergence within
  // max_newton_iters.
  bool correct(CVector& z, double t) {
    for (int it = 0; it < cfg_.max_newton_iters; ++it) {
      h_.evaluate(z, t, hv_, hz_, ht_);
      if (!factor()) return false;
      dz_ = hv_;
      lu_.solve_in_place(dz_);
      const CVector& dz = dz_;
      if (!dz.allFinite()) return false;
      z -= dz;
      const double size = inf_norm(dz);
      const double scale = 1.0 + inf_norm(z);
      if (it == 0 && size > cfg_.predictor_tolerance * scale) return false;
      if (size <= cfg_.tracking_tolerance * scale) return true;
    }
    return false;
  }

  // Newton polish at t; keeps the iterate with the smallest residual.
  double refine(CVector& z, double t) {
    h_.evaluate(z, t, hv_, hz_, ht_);
    double best = inf_norm(hv_);
    CVector best_z = z;
    for (int it = 0; it < cfg_.max_refine_iters && best > cfg_.newton_tolerance; ++it) {
      if (!factor()) break;
      dz_ = hv_;
      lu_.solve_in_place(dz_);
      const CVector& dz = dz_;
      if (!dz.allFinite()) break;
      z -= dz;
      h_.evaluate(z, t, hv_, hz_, ht_);
      const double r = inf_norm(hv_);
      if (!(r < best)) break;
      best = r;
      best_z = z;
    }
    z = best_z;
    return best;
  }

  double endpoint_condition(const CVector& z, double t) {
    h_.evaluate(z, t, hv_, hz_, ht_);
    Eigen::PartialPivLU<CMatrix> lu(hz_);
    const double rc = lu.rcond();
    return std::isfinite(rc) ? rc : 0.0;
  }

  double min_rcond() const { return min_rcond_; }

 private:
  // Cheap conditioning proxy from the LU pivots: min |u_ii| / max |u_ii|.
  bool factor() {
    const bool ok = lu_.compute(hz_);
    const double rc = ok ? lu_.pivot_ratio() : 0.0;
    if (!(rc > 0.0) || !std::isfinite(rc)) {
      min_rcond_ = 0.0;
      return false;
    }
    min_rcond_ = std::min(min_rcond_, rc);
    return rc > 1e-15;
  }

  const Homotopy& h_;
  const TrackerConfig& cfg_;
  detail::DenseLU lu_;
  CVector hv_;
  CVector dz_;
  CVector ht_;
  CMatrix hz_;
  double min_rcond_ = 1.0;
};

}  // namespace

PathResult track_path(const Homotopy& h, const CVector& start, const TrackerConfig& config,
                      std::vector<TraceRow>* trace) {
  if (static_cast<std::size_t>(start.size()) != h.dimension()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "start point has wrong dimension");
  }
  Tracker tr(h, config);
  PathResult result;
  CVector z = start;
  double t = 1.0;
  double step = std::min(config.initial_step, config.max_step);
  int successes = 0;
  int steps = 0;
  CVector k1, k2, k3, k4, zp;
  bool have_k1 = false;

  auto finish = [&](PathStatus status) {
    result.endpoint = z;
    result.status = status;
    result.final_t = t;
    result.steps_taken = steps;
    result.min_condition_proxy = tr.min_rcond();
    return result;
  };

  if (trace) trace->push_back({t, inf_norm(z), step});
  while (t > config.t_end) {
    if (steps >= config.max_steps) return finish(PathStatus::max_steps);
    ++steps;
    const double dt = std::min(step, t - config.t_end);
    const double t1 = t - dt;
    bool ok = true;
    if (!have_k1) have_k1 = tr.tangent(z, t, k1);
    ok = have_k1;
    if (ok) ok = tr.tangent(z - (0.5 * dt) * k1, t - 0.5 * dt, k2);
    if (ok) ok = tr.tangent(z - (0.5 * dt) * k2, t - 0.5 * dt, k3);
    if (ok) ok = tr.tangent(z - dt * k3, t1, k4);
    if (ok) {
      zp = z - (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ok = tr.correct(zp, t1);
    }
    if (ok) {
      z = zp;
      t = t1;
      have_k1 = false;
      if (++successes >= config.successes_before_grow) {
        step = std::min(step * config.step_grow, config.max_step);
        successes = 0;
      }
      if (trace) trace->push_back({t, inf_norm(z), dt});
      if (!(inf_norm(z) <= config.divergence_norm)) return finish(PathStatus::diverged);
    } else {
      step *= config.step_shrink;
      successes = 0;
      if (step < config.min_step) return finish(PathStatus::stalled);
    }
  }

  result.final_residual = tr.refine(z, config.t_end);
  result.endpoint_condition = tr.endpoint_condition(z, config.t_end);
  const bool finite = z.allFinite() && inf_norm(z) <= config.divergence_norm;
  if (!finite) return finish(PathStatus::diverged);
  return finish(result.final_residual <= config.success_residual ? PathStatus::converged
                                                                 : PathStatus::stalled);
}

PathResult track_path(const CVector& start, const ConcreteSystem& g, const ConcreteSystem& f,
                      Complex gamma, const TrackerConfig& config) {
  StraightLineHomotopy h(g, f, gamma);
  return track_path(h, start, config);
}

Complex random_gamma(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  // Angles within 60 degrees of +-i. Near-real gamma leaves real targets
  // close to the plain convex homotopy and its near-collisions.
  constexpr double pi = std::numbers::pi;
  std::uniform_real_distribution<double> angle(pi / 6.0, 5.0 * pi / 6.0);
  const double theta = angle(rng);
  return std::polar(1.0, (rng() & 1) ? theta + pi : theta);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

bool lex_less(const CVector& a, const CVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

}  // namespace

void summarize(SolveResult& result, const TrackerConfig& config) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < result.paths.size(); ++i) {
    if (result.paths[i].status == PathStatus::converged) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = result.paths[a].endpoint;
    const auto& pb = result.paths[b].endpoint;
    if (lex_less(pa, pb)) return true;
    if (lex_less(pb, pa)) return false;
    return a < b;
  });
  result.distinct_solutions.clear();
  for (std::size_t i : order) {
    const auto& p = result.paths[i];
    bool merged = false;
    for (auto& s : result.distinct_solutions) {
      if (inf_norm(s.point - p.endpoint) <= config.dedup_radius) {
        ++s.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) {
      result.distinct_solutions.push_back(
          {p.endpoint, 1, p.path_index, p.final_residual, p.endpoint_condition});
    }
  }
  std::sort(result.distinct_solutions.begin(), result.distinct_solutions.end(),
            [](const Solution& a, const Solution& b) { return lex_less(a.point, b.point); });

  // Paths piling onto singular endpoints indicate a positive-dimensional
  // component rather than isolated roots.
  std::size_t singular_paths = 0;
  for (const auto& s : result.distinct_solutions) {
    if (s.condition < config.singular_rcond) singular_paths += s.multiplicity;
  }
  const double total = static_cast<double>(std::max<std::size_t>(1, result.paths.size()));
  result.finiteness = static_cast<double>(singular_paths) > 0.2 * total
                          ? Finiteness::suspect_positive_dimensional
                          : Finiteness::finite;
}

SolveResult solve(const ConcreteSystem& target, const TrackerConfig& config, std::uint64_t seed) {
  config.validate();
  auto [g, starts] = start_system(target);
  SolveResult result;
  result.gamma = random_gamma(seed);
  const StraightLineHomotopy h(std::move(g), target, result.gamma);
  result.paths.resize(starts.size());
  parallel_for(starts.size(), config.threads, [&](std::size_t i) {
    result.paths[i] = track_path(h, starts[i], config);
    result.paths[i].path_index = i;
  });
  summarize(result, config);
  return result;
}

// ------------------------------------------------------- parameter homotopy

ParameterBasis make_parameter_basis(const poly::ParameterizedSystem& family,
                                    const TrackerConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
  ParameterBasis basis;
  basis.p0.resize(family.num_parameters());
  for (auto& p : basis.p0) p = Complex(normal(rng), normal(rng));
  const auto target = family.bind(basis.p0, true);
  basis.total_degree = target.total_degree();
  basis.generic_solve = solve(target, config, rng());
  for (const auto& s : basis.generic_solve.nonsingular_solutions(config.singular_rcond)) {
    basis.start_points.push_back(s.point);
  }
  return basis;
}

SolveResult track_to_target(const poly::ParameterizedSystem& family, const ParameterBasis& basis,
                            std::span<const Complex> p_target, const TrackerConfig& config) {
  config.validate();
  const auto scales = family.bind(p_target).max_coefficient_magnitudes();
  std::vector<double> weights;
  for (double s : scales) weights.push_back(s > 0.0 ? 1.0 / s : 1.0);
  const ParameterHomotopy h(family, basis.p0, std::vector<Complex>(p_target.begin(), p_target.end()),
                            std::move(weights));
  SolveResult result;
  result.paths.resize(basis.start_points.size());
  parallel_for(basis.start_points.size(), config.threads, [&](std::size_t i) {
    result.paths[i] = track_path(h, basis.start_points[i], config);
    result.paths[i].path_index = i;
  });
  summarize(result, config);
  return result;
}

std::vector<SolveResult> parameter_solve(const poly::ParameterizedSystem& family,
                                         std::span<const std::vector<Complex>> p_targets,
                                         const TrackerConfig& config, std::uint64_t seed) {
  const auto basis = make_parameter_basis(family, config, seed);
  std::vector<SolveResult> out;
  for (const auto& target : p_targets) out.push_back(track_to_target(family, basis, target, config));
  return out;
}

}  // namespace geoloc::homotopy
