#include "geoloc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace geoloc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::singular_geometry: return "singular-geometry";
    case ErrorKind::degenerate_pair: return "degenerate-pair";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::no_estimate: return "no-estimate";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

ReceiverPair make_pair(ReceiverState reference, ReceiverState moving) {
  if (!reference.finite() || !moving.finite()) {
    throw GeolocError(ErrorKind::invalid_argument, "receiver state has non-finite components");
  }
  if (reference.epoch != moving.epoch) {
    throw GeolocError(ErrorKind::invalid_argument, "receiver pair mixes epochs " +
                                                       std::to_string(reference.epoch) + " and " +
                                                       std::to_string(moving.epoch));
  }
  return ReceiverPair{std::move(reference), std::move(moving)};
}

namespace {

void check_pair(const ReceiverPair& pair) {
  if (!pair.reference.finite() || !pair.moving.finite()) {
    throw GeolocError(ErrorKind::invalid_argument, "receiver state has non-finite components");
  }
  if (pair.reference.epoch != pair.moving.epoch) {
    throw GeolocError(ErrorKind::invalid_argument, "receiver pair mixes epochs");
  }
}

// Line-of-sight range rate of one receiver: v.(x_r - x)/|x_r - x|.
double range_rate(const Vec3& emitter, const ReceiverState& rx) {
  const Vec3 los = rx.position - emitter;
  const double range = los.norm();
  if (!(range > 0.0)) {
    throw GeolocError(ErrorKind::singular_geometry,
                      "emitter coincides with receiver '" + rx.id + "'");
  }
  return rx.velocity.dot(los) / range;
}

}  // namespace

double fdoa_forward(const Vec3& emitter, const ReceiverPair& pair) {
  if (!emitter.allFinite()) {
    throw GeolocError(ErrorKind::invalid_argument, "emitter has non-finite components");
  }
  return range_rate(emitter, pair.moving) - range_rate(emitter, pair.reference);
}

double tdoa_forward(const Vec3& emitter, const ReceiverPair& pair) {
  if (!emitter.allFinite()) {
    throw GeolocError(ErrorKind::invalid_argument, "emitter has non-finite components");
  }
  const double di = (pair.moving.position - emitter).norm();
  const double d1 = (pair.reference.position - emitter).norm();
  return (di - d1) / kSpeedOfLight;
}

double fdoa_from_frequency(double delta_hz, double carrier_hz) {
  if (!(carrier_hz > 0.0)) {
    throw GeolocError(ErrorKind::invalid_argument, "carrier frequency must be positive");
  }
  return delta_hz * kSpeedOfLight / carrier_hz;
}

double fdoa_bound(const ReceiverPair& pair) {
  return pair.reference.velocity.norm() + pair.moving.velocity.norm();
}

void Scenario::validate() const {
  if (size() == 0) {
    throw GeolocError(ErrorKind::invalid_argument, "scenario has no measurements");
  }
  for (const auto& m : fdoa) {
    check_pair(m.pair);
    if (!std::isfinite(m.value)) {
      throw GeolocError(ErrorKind::invalid_argument, "non-finite FDOA value");
    }
  }
  for (const auto& m : tdoa) {
    check_pair(m.pair);
    if (!std::isfinite(m.value)) {
      throw GeolocError(ErrorKind::invalid_argument, "non-finite TDOA value");
    }
  }
  if (truth && !truth->position.allFinite()) {
    throw GeolocError(ErrorKind::invalid_argument, "truth has non-finite components");
  }
}

Frame Frame::fit(std::span<const Vec3> points) {
  if (points.empty()) return Frame{};
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Frame frame;
  frame.center = 0.5 * (lo + hi);
  frame.scale = std::max(1.0, 0.5 * (hi - lo).maxCoeff());
  return frame;
}

Frame Frame::fit(const Scenario& scenario) {
  std::vector<Vec3> points;
  points.reserve(2 * scenario.size());
  for (const auto& m : scenario.fdoa) {
    points.push_back(m.pair.reference.position);
    points.push_back(m.pair.moving.position);
  }
  for (const auto& m : scenario.tdoa) {
    points.push_back(m.pair.reference.position);
    points.push_back(m.pair.moving.position);
  }
  return fit(points);
}

}  // namespace geoloc
