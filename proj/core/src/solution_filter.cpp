#include "geoloc/solution_filter.hpp"

#include <cmath>

namespace geoloc {

const char* to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::complex: return "complex";
    case RejectionReason::nonpositive_range: return "nonpositive-range";
    case RejectionReason::range_inconsistent: return "range-inconsistent";
    case RejectionReason::fdoa_bound: return "fdoa-bound";
  }
  return "unknown";
}

bool is_real(const poly::CVector& z, double real_tolerance) {
  if (!z.allFinite()) return false;
  if (z.size() == 0) return true;
  const double im = z.imag().cwiseAbs().maxCoeff();
  const double re = z.real().cwiseAbs().maxCoeff();
  return im <= real_tolerance * re;
}

std::vector<Eigen::VectorXd> extract_real(std::span<const poly::CVector> solutions,
                                          double real_tolerance) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& z : solutions) {
    if (is_real(z, real_tolerance)) out.emplace_back(z.real());
  }
  return out;
}

bool fdoa_bound_check(const FdoaMeasurement& measurement, double slack) {
  return std::abs(measurement.value) <= fdoa_bound(measurement.pair) + slack;
}

std::vector<std::size_t> bound_passing(std::span<const FdoaMeasurement> measurements,
                                       double slack) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    if (fdoa_bound_check(measurements[i], slack)) out.push_back(i);
  }
  return out;
}

GateResult feasibility_gate(const poly::CVector& endpoint, const UnknownLayout& layout,
                            std::span<const FdoaMeasurement> scenario, const FilterConfig& config,
                            double residual, std::size_t provenance) {
  if (static_cast<std::size_t>(endpoint.size()) != layout.num_unknowns()) {
    throw GeolocError(ErrorKind::dimension_mismatch, "endpoint does not match unknown layout");
  }
  if (!is_real(endpoint, config.real_tolerance)) return RejectionReason::complex;

  const auto ranges = layout.ranges(endpoint);
  for (double r : ranges) {
    if (!(r > config.range_floor)) return RejectionReason::nonpositive_range;
  }

  FeasibleCandidate c;
  c.emitter = layout.emitter(endpoint);
  c.residual = residual;
  c.provenance = provenance;
  const auto& receivers = layout.range_receivers();
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    const double actual = (layout.project(receivers[k].position) - c.emitter).norm();
    if (std::abs(actual - ranges[k]) > config.range_consistency_tol) {
      return RejectionReason::range_inconsistent;
    }
    c.ranges.push_back(actual);
  }

  for (const auto& m : scenario) {
    const double d1 = (layout.project(m.pair.reference.position) - c.emitter).norm();
    const double d2 = (layout.project(m.pair.moving.position) - c.emitter).norm();
    if (!(d1 > config.range_floor) || !(d2 > config.range_floor)) {
      return RejectionReason::fdoa_bound;
    }
    const double predicted = fdoa_forward(c.emitter, m.pair);
    if (!(std::abs(predicted) <= fdoa_bound(m.pair) * (1.0 + 1e-12) + 1e-15)) {
      return RejectionReason::fdoa_bound;
    }
  }
  return c;
}

}  // namespace geoloc
