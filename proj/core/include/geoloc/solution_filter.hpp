#pragma once

// Turns raw complex endpoints into physically meaningful emitter candidates.

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "geoloc/geometry.hpp"
#include "geoloc/poly.hpp"
#include "geoloc/system_builder.hpp"

namespace geoloc {

struct FilterConfig {
  // Endpoint is real when |Im z|_inf <= real_tolerance * |Re z|_inf.
  double real_tolerance = 1e-6;
  // Ranges at or below this (m) are rejected; removes the r = 0 component.
  double range_floor = 1e-6;
  // Allowed | |emitter - x_k| - r_k | in metres.
  double range_consistency_tol = 1e-4;
  // Extra allowance on |f| <= |v_i| + |v_j| for noisy measurements.
  double bound_slack = 0.0;
};

enum class RejectionReason { complex, nonpositive_range, range_inconsistent, fdoa_bound };
const char* to_string(RejectionReason reason);

struct FeasibleCandidate {
  Vec3 emitter = Vec3::Zero();
  std::vector<double> ranges;  // recomputed from emitter and receiver positions, m
  double residual = 0.0;
  std::size_t provenance = 0;  // path index
};

using GateResult = std::variant<FeasibleCandidate, RejectionReason>;

bool is_real(const poly::CVector& z, double real_tolerance);

/// Real parts of the endpoints that pass is_real, in input order.
std::vector<Eigen::VectorXd> extract_real(std::span<const poly::CVector> solutions,
                                          double real_tolerance = 1e-6);

/// |value| <= |v_i| + |v_j| + slack.
bool fdoa_bound_check(const FdoaMeasurement& measurement, double slack = 0.0);

/// Indices of measurements that pass fdoa_bound_check.
std::vector<std::size_t> bound_passing(std::span<const FdoaMeasurement> measurements,
                                       double slack = 0.0);

/// Applies, in order: realness, positive ranges, range consistency, and the
/// post-solve FDOA check (every measurement in `scenario` must have a
/// well-defined predicted FDOA within its bound).
GateResult feasibility_gate(const poly::CVector& endpoint, const UnknownLayout& layout,
                            std::span<const FdoaMeasurement> scenario, const FilterConfig& config,
                            double residual = 0.0, std::size_t provenance = 0);

}  // namespace geoloc
