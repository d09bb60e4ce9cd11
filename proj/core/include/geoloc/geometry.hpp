#pragma once

// Core domain types: receivers, emitters, measurements and the forward models
// that map an emitter location to TDOA / FDOA observations.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geoloc/error.hpp"

namespace geoloc {

using Vec3 = Eigen::Vector3d;

/// Propagation speed (m/s).
inline constexpr double kSpeedOfLight = 299792458.0;

struct ReceiverState {
  Vec3 position = Vec3::Zero();  // m
  Vec3 velocity = Vec3::Zero();  // m/s
  std::string id;
  int epoch = 0;

  bool finite() const { return position.allFinite() && velocity.allFinite(); }
};

/// Ordered receiver pair (reference, moving). Observations are reported as
/// "moving minus reference", i.e. receiver i relative to receiver 1.
struct ReceiverPair {
  ReceiverState reference;
  ReceiverState moving;
};

/// Builds a pair, enforcing the shared-epoch and finiteness invariants.
ReceiverPair make_pair(ReceiverState reference, ReceiverState moving);

struct Emitter {
  Vec3 position = Vec3::Zero();
};

/// Normalized FDOA: range-rate difference in m/s. A raw frequency difference
/// converts via value = delta_f * c / f0 (see fdoa_from_frequency).
struct FdoaMeasurement {
  ReceiverPair pair;
  double value = 0.0;
};

/// Time difference of arrival in seconds.
struct TdoaMeasurement {
  ReceiverPair pair;
  double value = 0.0;
};

struct Scenario {
  std::vector<FdoaMeasurement> fdoa;
  std::vector<TdoaMeasurement> tdoa;
  std::optional<Emitter> truth;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return fdoa.size() + tdoa.size(); }

  /// Throws GeolocError(invalid_argument) when empty or when any receiver
  /// state is non-finite or a pair mixes epochs.
  void validate() const;
};

/// v_i.(x_i - x)/|x_i - x| - v_1.(x_1 - x)/|x_1 - x| for the pair
/// (reference = 1, moving = i). Throws singular_geometry when the emitter
/// coincides with a receiver.
double fdoa_forward(const Vec3& emitter, const ReceiverPair& pair);

/// (|x_i - x| - |x_1 - x|) / c.
double tdoa_forward(const Vec3& emitter, const ReceiverPair& pair);

/// Converts a raw frequency difference (Hz) at carrier f0 (Hz) to m/s.
double fdoa_from_frequency(double delta_hz, double carrier_hz);

/// |v_reference| + |v_moving|, the largest magnitude any noiseless FDOA of the
/// pair can reach.
double fdoa_bound(const ReceiverPair& pair);

/// Translation + isotropic scale that maps a scenario's receivers into a
/// unit-sized local box. Solvers work in local coordinates.
struct Frame {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_local(const Vec3& x) const { return (x - center) / scale; }
  Vec3 to_world(const Vec3& u) const { return center + scale * u; }

  /// Bounding-box centre and half the largest box extent (at least 1 m).
  static Frame fit(std::span<const Vec3> points);
  static Frame fit(const Scenario& scenario);
};

}  // namespace geoloc
