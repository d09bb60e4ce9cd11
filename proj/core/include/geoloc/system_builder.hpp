#pragma once

// Polynomial formulations of TDOA / FDOA geolocation.
//
// Unknowns are the emitter coordinates in the local Frame followed by one
// range variable per receiver state (range / frame scale). Every range
// variable r_k is tied to the emitter by r_k^2 = |u - x_k|^2. Parameters are
// receiver positions (local frame), velocities (m/s) and measurement values,
// so a single family can be re-bound for each new sample.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoloc/geometry.hpp"
#include "geoloc/poly.hpp"

namespace geoloc {

enum class MeasurementMode { tdoa, fdoa, joint };

const char* to_string(MeasurementMode mode);
MeasurementMode parse_mode(const std::string& text);

enum class AltitudeModel {
  flat,    // z = value in the world frame
  sphere,  // |x| = value (radius about the world origin)
};

struct AltitudeConstraint {
  AltitudeModel model = AltitudeModel::flat;
  double value = 0.0;  // m
};

struct GeoSystemSpec {
  MeasurementMode mode = MeasurementMode::fdoa;
  int dimension = 3;
  std::optional<AltitudeConstraint> altitude;
};

/// Distinct finite solutions of the 3D FDOA system with three measurements
/// from three epochs (9 unknowns) at generic parameters. Measured, not
/// derived; the Bezout bound is 512.
inline constexpr std::size_t kFdoaGenericRootCount = 368;

/// Minimum measurement count that leaves finitely many emitter locations.
/// nullopt when the combination is not defined (altitude in 2D).
std::optional<int> minimum_measurements(MeasurementMode mode, int dimension, bool altitude);

/// A TDOA and an FDOA observed on the same receiver pair.
struct JointMeasurement {
  ReceiverPair pair;
  double fdoa = 0.0;  // m/s
  double tdoa = 0.0;  // s
};

class UnknownLayout {
 public:
  UnknownLayout() = default;
  UnknownLayout(int dimension, Frame frame, std::vector<ReceiverState> range_receivers);

  int dimension() const { return dimension_; }
  const Frame& frame() const { return frame_; }
  std::size_t num_ranges() const { return receivers_.size(); }
  std::size_t num_unknowns() const { return static_cast<std::size_t>(dimension_) + receivers_.size(); }
  std::size_t range_index(std::size_t k) const { return static_cast<std::size_t>(dimension_) + k; }
  const std::vector<ReceiverState>& range_receivers() const { return receivers_; }
  std::vector<std::string> unknown_names() const;

  /// Local-frame unknown vector of a world-frame emitter with its exact ranges.
  poly::CVector lift(const Vec3& emitter) const;
  /// World-frame emitter from the real part of an unknown vector. In 2D the
  /// z coordinate is 0.
  Vec3 emitter(const poly::CVector& z) const;
  /// World-frame ranges (m) from the real part of an unknown vector.
  std::vector<double> ranges(const poly::CVector& z) const;
  /// Projects a world point onto the working dimension (drops z in 2D).
  Vec3 project(const Vec3& x) const;

 private:
  int dimension_ = 3;
  Frame frame_;
  std::vector<ReceiverState> receivers_;
};

struct GeoSystem {
  GeoSystemSpec spec;
  poly::ParameterizedSystem family;
  std::vector<poly::Complex> parameters;
  UnknownLayout layout;
  std::size_t num_measurements = 0;
  std::vector<std::string> warnings;

  /// Instance at the stored parameters, rows scaled to unit max coefficient.
  poly::ConcreteSystem bind(bool normalize = true) const { return family.bind(parameters, normalize); }
};

/// Frame fitted to the receivers of the given measurements (2D drops z).
Frame fit_frame(std::span<const ReceiverPair> pairs, int dimension);

GeoSystem build_tdoa(std::span<const TdoaMeasurement> measurements, const GeoSystemSpec& spec,
                     std::optional<Frame> frame = std::nullopt);
GeoSystem build_fdoa(std::span<const FdoaMeasurement> measurements, const GeoSystemSpec& spec,
                     std::optional<Frame> frame = std::nullopt);
GeoSystem build_joint(std::span<const JointMeasurement> measurements, const GeoSystemSpec& spec,
                      std::optional<Frame> frame = std::nullopt);

/// Appends the altitude equation. Throws unsupported in 2D.
GeoSystem add_altitude_constraint(GeoSystem system, AltitudeConstraint altitude);

}  // namespace geoloc
