#include "geoloc/system_builder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace geoloc {

using poly::Complex;
using poly::CVector;
using poly::Monomial;
using poly::ParamExpr;
using poly::ParamTerm;

const char* to_string(MeasurementMode mode) {
  switch (mode) {
    case MeasurementMode::tdoa: return "tdoa";
    case MeasurementMode::fdoa: return "fdoa";
    case MeasurementMode::joint: return "tdoa+fdoa";
  }
  return "unknown";
}

MeasurementMode parse_mode(const std::string& text) {
  if (text == "tdoa") return MeasurementMode::tdoa;
  if (text == "fdoa") return MeasurementMode::fdoa;
  if (text == "tdoa+fdoa" || text == "joint") return MeasurementMode::joint;
  throw GeolocError(ErrorKind::invalid_argument, "unknown measurement mode '" + text + "'");
}

std::optional<int> minimum_measurements(MeasurementMode mode, int dimension, bool altitude) {
  if (dimension != 2 && dimension != 3) return std::nullopt;
  if (altitude && dimension == 2) return std::nullopt;
  switch (mode) {
    case MeasurementMode::tdoa:
    case MeasurementMode::fdoa:
      if (dimension == 2) return 2;
      return altitude ? 2 : 3;
    case MeasurementMode::joint:
      if (dimension == 2) return 1;
      return altitude ? 1 : 2;
  }
  return std::nullopt;
}

// ------------------------------------------------------------ UnknownLayout

UnknownLayout::UnknownLayout(int dimension, Frame frame, std::vector<ReceiverState> range_receivers)
    : dimension_(dimension), frame_(std::move(frame)), receivers_(std::move(range_receivers)) {
  if (dimension_ != 2 && dimension_ != 3) {
    throw GeolocError(ErrorKind::invalid_argument, "dimension must be 2 or 3");
  }
}

std::vector<std::string> UnknownLayout::unknown_names() const {
  std::vector<std::string> names = {"x", "y", "z"};
  names.resize(static_cast<std::size_t>(dimension_));
  for (std::size_t k = 0; k < receivers_.size(); ++k) names.push_back("r" + std::to_string(k + 1));
  return names;
}

Vec3 UnknownLayout::project(const Vec3& x) const {
  Vec3 p = x;
  if (dimension_ == 2) p.z() = 0.0;
  return p;
}

CVector UnknownLayout::lift(const Vec3& emitter) const {
  CVector z(static_cast<Eigen::Index>(num_unknowns()));
  const Vec3 e = project(emitter);
  const Vec3 u = frame_.to_local(e);
  for (int d = 0; d < dimension_; ++d) z[d] = u[d];
  for (std::size_t k = 0; k < receivers_.size(); ++k) {
    const double range = (project(receivers_[k].position) - e).norm();
    z[static_cast<Eigen::Index>(range_index(k))] = range / frame_.scale;
  }
  return z;
}

Vec3 UnknownLayout::emitter(const CVector& z) const {
  Vec3 u = Vec3::Zero();
  for (int d = 0; d < dimension_; ++d) u[d] = z[d].real();
  Vec3 x = frame_.to_world(u);
  if (dimension_ == 2) x.z() = 0.0;
  return x;
}

std::vector<double> UnknownLayout::ranges(const CVector& z) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < receivers_.size(); ++k) {
    out.push_back(z[static_cast<Eigen::Index>(range_index(k))].real() * frame_.scale);
  }
  return out;
}

Frame fit_frame(std::span<const ReceiverPair> pairs, int dimension) {
  std::vector<Vec3> pts;
  for (const auto& p : pairs) {
    pts.push_back(p.reference.position);
    pts.push_back(p.moving.position);
  }
  if (dimension == 2) {
    for (auto& p : pts) p.z() = 0.0;
  }
  Frame f = Frame::fit(pts);
  if (dimension == 2) f.center.z() = 0.0;
  return f;
}

namespace {

// Incrementally assembled family.
class FamilyBuilder {
 public:
  FamilyBuilder(int dimension, std::size_t n_ranges)
      : dim_(dimension), n_vars_(static_cast<std::size_t>(dimension) + n_ranges) {}

  int add_parameter(std::string name) {
    params_.push_back(std::move(name));
    return static_cast<int>(params_.size()) - 1;
  }

  std::size_t n_vars() const { return n_vars_; }
  Monomial one() const { return Monomial(n_vars_); }
  Monomial var(std::size_t v, int power = 1) const { return Monomial::variable(n_vars_, v, power); }
  std::size_t range_var(std::size_t k) const { return static_cast<std::size_t>(dim_) + k; }

  std::vector<ParamTerm>& new_equation() { return eqs_.emplace_back(); }

  // r_k^2 - |u - a|^2 with a the receiver's local position parameters.
  void add_range_equation(std::size_t k, const std::vector<int>& pos) {
    auto& eq = new_equation();
    eq.push_back({ParamExpr::constant(1.0), var(range_var(k), 2)});
    ParamExpr constant;
    for (int d = 0; d < dim_; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const ParamExpr a = ParamExpr::parameter(pos[ud]);
      eq.push_back({ParamExpr::constant(-1.0), var(ud, 2)});
      eq.push_back({Complex(2.0) * a, var(ud)});
      constant -= a * a;
    }
    eq.push_back({constant, one()});
  }

  // f r_a r_b - r_a v_b.(x_b - u) + r_b v_a.(x_a - u)
  void add_fdoa_equation(std::size_t ra, std::size_t rb, const std::vector<int>& pos_a,
                         const std::vector<int>& vel_a, const std::vector<int>& pos_b,
                         const std::vector<int>& vel_b, int f) {
    auto& eq = new_equation();
    eq.push_back({ParamExpr::parameter(f), var(range_var(ra)) * var(range_var(rb))});
    ParamExpr ca;
    ParamExpr cb;
    for (int d = 0; d < dim_; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const ParamExpr va = ParamExpr::parameter(vel_a[ud]);
      const ParamExpr vb = ParamExpr::parameter(vel_b[ud]);
      ca -= vb * ParamExpr::parameter(pos_b[ud]);
      cb += va * ParamExpr::parameter(pos_a[ud]);
      eq.push_back({vb, var(range_var(ra)) * var(ud)});
      eq.push_back({-va, var(range_var(rb)) * var(ud)});
    }
    eq.push_back({ca, var(range_var(ra))});
    eq.push_back({cb, var(range_var(rb))});
  }

  // r_b - r_a - d, d the range difference in frame units
  void add_range_difference_equation(std::size_t ra, std::size_t rb, int d) {
    auto& eq = new_equation();
    eq.push_back({ParamExpr::constant(1.0), var(range_var(rb))});
    eq.push_back({ParamExpr::constant(-1.0), var(range_var(ra))});
    eq.push_back({-ParamExpr::parameter(d), one()});
  }

  poly::ParameterizedSystem finish(const UnknownLayout& layout) {
    return poly::ParameterizedSystem(std::move(eqs_), layout.unknown_names(), std::move(params_));
  }

 private:
  int dim_;
  std::size_t n_vars_;
  std::vector<std::string> params_;
  std::vector<std::vector<ParamTerm>> eqs_;
};

const char* kAxis[] = {"x", "y", "z"};

void check_spec(const GeoSystemSpec& spec, MeasurementMode mode) {
  if (spec.dimension != 2 && spec.dimension != 3) {
    throw GeolocError(ErrorKind::invalid_argument, "dimension must be 2 or 3");
  }
  if (spec.mode != mode) {
    throw GeolocError(ErrorKind::invalid_argument,
                      std::string("spec mode ") + to_string(spec.mode) + " does not match builder " +
                          to_string(mode));
  }
  if (spec.altitude && spec.dimension == 2) {
    throw GeolocError(ErrorKind::unsupported, "altitude constraint is undefined in 2D");
  }
}

void warn_count(const GeoSystemSpec& spec, std::size_t count, std::vector<std::string>& warnings) {
  const auto min = minimum_measurements(spec.mode, spec.dimension, spec.altitude.has_value());
  if (min && count < static_cast<std::size_t>(*min)) {
    warnings.push_back(std::to_string(count) + " measurement(s) is below the minimum of " +
                       std::to_string(*min) + " for " + to_string(spec.mode) + " in " +
                       std::to_string(spec.dimension) + "D; solution set will not be finite");
  }
}

// Receivers are identified by (id, epoch) when labelled, otherwise by exact
// state equality.
struct ReceiverKey {
  std::string id;
  int epoch;
  std::array<double, 6> state;
  bool operator<(const ReceiverKey& o) const {
    if (!id.empty() && !o.id.empty()) return std::tie(id, epoch) < std::tie(o.id, o.epoch);
    return std::tie(id, epoch, state) < std::tie(o.id, o.epoch, o.state);
  }
};

ReceiverKey key_of(const ReceiverState& rx) {
  return {rx.id, rx.epoch,
          {rx.position.x(), rx.position.y(), rx.position.z(), rx.velocity.x(), rx.velocity.y(),
           rx.velocity.z()}};
}

struct ReceiverTable {
  std::vector<ReceiverState> receivers;
  std::vector<std::pair<std::size_t, std::size_t>> pair_index;  // (reference, moving)
};

ReceiverTable index_receivers(std::span<const ReceiverPair> pairs) {
  ReceiverTable table;
  std::map<ReceiverKey, std::size_t> seen;
  auto lookup = [&](const ReceiverState& rx) {
    auto [it, inserted] = seen.try_emplace(key_of(rx), table.receivers.size());
    if (inserted) table.receivers.push_back(rx);
    return it->second;
  };
  for (const auto& p : pairs) {
    const std::size_t a = lookup(p.reference);
    const std::size_t b = lookup(p.moving);
    if (a == b) {
      throw GeolocError(ErrorKind::degenerate_pair, "pair uses the same receiver twice");
    }
    table.pair_index.emplace_back(a, b);
  }
  return table;
}

struct ReceiverParams {
  std::vector<int> pos;
  std::vector<int> vel;
};

// Registers local position and velocity parameters for every receiver.
std::vector<ReceiverParams> add_receiver_parameters(FamilyBuilder& fb,
                                                    const std::vector<ReceiverState>& receivers,
                                                    const Frame& frame, int dim,
                                                    std::vector<Complex>& values, bool velocity) {
  std::vector<ReceiverParams> out;
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    ReceiverParams rp;
    const Vec3 local = frame.to_local(receivers[k].position);
    const std::string tag = std::to_string(k + 1);
    for (int d = 0; d < dim; ++d) {
      rp.pos.push_back(fb.add_parameter(std::string(kAxis[d]) + tag));
      values.emplace_back(local[d]);
    }
    if (velocity) {
      for (int d = 0; d < dim; ++d) {
        rp.vel.push_back(fb.add_parameter(std::string("v") + kAxis[d] + tag));
        values.emplace_back(receivers[k].velocity[d]);
      }
    }
    out.push_back(std::move(rp));
  }
  return out;
}

std::vector<ReceiverPair> pairs_of(auto measurements) {
  std::vector<ReceiverPair> pairs;
  for (const auto& m : measurements) pairs.push_back(m.pair);
  return pairs;
}

ReceiverState planar(ReceiverState rx, int dim) {
  if (dim == 2) {
    rx.position.z() = 0.0;
    rx.velocity.z() = 0.0;
  }
  return rx;
}

void check_finite_pairs(std::span<const ReceiverPair> pairs) {
  for (const auto& p : pairs) {
    if (!p.reference.finite() || !p.moving.finite()) {
      throw GeolocError(ErrorKind::invalid_argument, "receiver state has non-finite components");
    }
    if (p.reference.epoch != p.moving.epoch) {
      throw GeolocError(ErrorKind::invalid_argument, "receiver pair mixes epochs");
    }
  }
}

GeoSystem finish(GeoSystemSpec spec, FamilyBuilder& fb, std::vector<Complex> values,
                 UnknownLayout layout, std::size_t count, std::vector<std::string> warnings) {
  auto family = fb.finish(layout);
  GeoSystem sys{spec, std::move(family), std::move(values), std::move(layout), count,
                std::move(warnings)};
  if (spec.altitude) {
    const auto alt = *spec.altitude;
    sys.spec.altitude.reset();
    sys = add_altitude_constraint(std::move(sys), alt);
  }
  return sys;
}

}  // namespace

GeoSystem build_tdoa(std::span<const TdoaMeasurement> measurements, const GeoSystemSpec& spec,
                     std::optional<Frame> frame) {
  check_spec(spec, MeasurementMode::tdoa);
  if (measurements.empty()) {
    throw GeolocError(ErrorKind::invalid_argument, "TDOA system needs at least one measurement");
  }
  const int dim = spec.dimension;
  auto pairs = pairs_of(measurements);
  check_finite_pairs(pairs);
  for (auto& p : pairs) {
    p.reference = planar(p.reference, dim);
    p.moving = planar(p.moving, dim);
  }
  const ReceiverState& ref = pairs.front().reference;
  for (const auto& p : pairs) {
    if (key_of(p.reference) < key_of(ref) || key_of(ref) < key_of(p.reference)) {
      throw GeolocError(ErrorKind::invalid_argument,
                        "TDOA measurements must share one reference receiver");
    }
    if ((p.moving.position - p.reference.position).norm() == 0.0) {
      throw GeolocError(ErrorKind::degenerate_pair, "TDOA pair has coincident receivers");
    }
  }
  const Frame fr = frame.value_or(fit_frame(pairs, dim));
  UnknownLayout layout(dim, fr, {ref});
  FamilyBuilder fb(dim, 1);
  std::vector<Complex> values;
  const auto ref_params = add_receiver_parameters(fb, {ref}, fr, dim, values, false).front();
  const std::size_t r1 = fb.range_var(0);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const std::string tag = std::to_string(j + 2);
    std::vector<int> pos;
    const Vec3 local = fr.to_local(pairs[j].moving.position);
    for (int d = 0; d < dim; ++d) {
      pos.push_back(fb.add_parameter(std::string(kAxis[d]) + tag));
      values.emplace_back(local[d]);
    }
    const int dp = fb.add_parameter("d" + tag);
    values.emplace_back(kSpeedOfLight * measurements[j].value / fr.scale);

    // d^2 + 2 d r1 - |x_i|^2 + |x_1|^2 + 2 (x_i - x_1).u
    auto& eq = fb.new_equation();
    const ParamExpr d = ParamExpr::parameter(dp);
    ParamExpr constant = d * d;
    for (int k = 0; k < dim; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const ParamExpr xi = ParamExpr::parameter(pos[uk]);
      const ParamExpr x1 = ParamExpr::parameter(ref_params.pos[uk]);
      constant -= xi * xi;
      constant += x1 * x1;
      eq.push_back({Complex(2.0) * (xi - x1), fb.var(uk)});
    }
    eq.push_back({constant, fb.one()});
    eq.push_back({Complex(2.0) * d, fb.var(r1)});
  }
  fb.add_range_equation(0, ref_params.pos);

  std::vector<std::string> warnings;
  warn_count(spec, measurements.size(), warnings);
  return finish(spec, fb, std::move(values), std::move(layout), measurements.size(),
                std::move(warnings));
}

GeoSystem build_fdoa(std::span<const FdoaMeasurement> measurements, const GeoSystemSpec& spec,
                     std::optional<Frame> frame) {
  check_spec(spec, MeasurementMode::fdoa);
  if (measurements.empty()) {
    throw GeolocError(ErrorKind::invalid_argument, "FDOA system needs at least one measurement");
  }
  const int dim = spec.dimension;
  auto pairs = pairs_of(measurements);
  check_finite_pairs(pairs);
  for (auto& p : pairs) {
    p.reference = planar(p.reference, dim);
    p.moving = planar(p.moving, dim);
  }
  const auto table = index_receivers(pairs);
  const Frame fr = frame.value_or(fit_frame(pairs, dim));
  UnknownLayout layout(dim, fr, table.receivers);
  FamilyBuilder fb(dim, table.receivers.size());
  std::vector<Complex> values;
  const auto rx = add_receiver_parameters(fb, table.receivers, fr, dim, values, true);

  std::vector<std::string> warnings;
  for (std::size_t j = 0; j < measurements.size(); ++j) {
    const int fp = fb.add_parameter("f" + std::to_string(j + 1));
    values.emplace_back(measurements[j].value);
    const auto [a, b] = table.pair_index[j];
    fb.add_fdoa_equation(a, b, rx[a].pos, rx[a].vel, rx[b].pos, rx[b].vel, fp);

    const bool still = table.receivers[a].velocity.norm() == 0.0 &&
                       table.receivers[b].velocity.norm() == 0.0;
    if (still && measurements[j].value == 0.0) {
      warnings.push_back("measurement " + std::to_string(j + 1) +
                         ": both receivers stationary and f = 0; equation vanishes identically");
    } else if (still) {
      warnings.push_back("measurement " + std::to_string(j + 1) +
                         ": both receivers stationary but f != 0; measurement is infeasible");
    }
  }
  for (std::size_t k = 0; k < table.receivers.size(); ++k) fb.add_range_equation(k, rx[k].pos);

  warn_count(spec, measurements.size(), warnings);
  return finish(spec, fb, std::move(values), std::move(layout), measurements.size(),
                std::move(warnings));
}

GeoSystem build_joint(std::span<const JointMeasurement> measurements, const GeoSystemSpec& spec,
                      std::optional<Frame> frame) {
  check_spec(spec, MeasurementMode::joint);
  if (measurements.empty()) {
    throw GeolocError(ErrorKind::invalid_argument, "joint system needs at least one measurement");
  }
  const int dim = spec.dimension;
  auto pairs = pairs_of(measurements);
  check_finite_pairs(pairs);
  for (auto& p : pairs) {
    p.reference = planar(p.reference, dim);
    p.moving = planar(p.moving, dim);
  }
  const auto table = index_receivers(pairs);
  const Frame fr = frame.value_or(fit_frame(pairs, dim));
  UnknownLayout layout(dim, fr, table.receivers);
  FamilyBuilder fb(dim, table.receivers.size());
  std::vector<Complex> values;
  const auto rx = add_receiver_parameters(fb, table.receivers, fr, dim, values, true);

  for (std::size_t j = 0; j < measurements.size(); ++j) {
    const std::string tag = std::to_string(j + 1);
    const int fp = fb.add_parameter("f" + tag);
    values.emplace_back(measurements[j].fdoa);
    const int dp = fb.add_parameter("d" + tag);
    values.emplace_back(kSpeedOfLight * measurements[j].tdoa / fr.scale);
    const auto [a, b] = table.pair_index[j];
    fb.add_fdoa_equation(a, b, rx[a].pos, rx[a].vel, rx[b].pos, rx[b].vel, fp);
    fb.add_range_difference_equation(a, b, dp);
  }
  for (std::size_t k = 0; k < table.receivers.size(); ++k) fb.add_range_equation(k, rx[k].pos);

  std::vector<std::string> warnings;
  warn_count(spec, measurements.size(), warnings);
  return finish(spec, fb, std::move(values), std::move(layout), measurements.size(),
                std::move(warnings));
}

GeoSystem add_altitude_constraint(GeoSystem system, AltitudeConstraint altitude) {
  if (system.layout.dimension() != 3) {
    throw GeolocError(ErrorKind::unsupported, "altitude constraint is undefined in 2D");
  }
  if (system.spec.altitude) {
    throw GeolocError(ErrorKind::invalid_argument, "system already has an altitude constraint");
  }
  if (!std::isfinite(altitude.value)) {
    throw GeolocError(ErrorKind::invalid_argument, "altitude must be finite");
  }
  auto eqs = system.family.equations();
  auto params = system.family.parameters();
  const std::size_t n_vars = system.family.num_variables();
  const Frame& fr = system.layout.frame();
  const int ap = static_cast<int>(params.size());
  const ParamExpr a = ParamExpr::parameter(ap);
  auto& eq = eqs.emplace_back();
  if (altitude.model == AltitudeModel::flat) {
    // u_z - (alt - c_z)/L
    params.emplace_back("alt");
    system.parameters.emplace_back((altitude.value - fr.center.z()) / fr.scale);
    eq.push_back({ParamExpr::constant(1.0), Monomial::variable(n_vars, 2)});
    eq.push_back({-a, Monomial(n_vars)});
  } else {
    // |u|^2 + 2 c.u / L + |c|^2 / L^2 - (R/L)^2
    if (!(altitude.value > 0.0)) {
      throw GeolocError(ErrorKind::invalid_argument, "sphere radius must be positive");
    }
    params.emplace_back("radius");
    system.parameters.emplace_back(altitude.value / fr.scale);
    for (std::size_t d = 0; d < 3; ++d) {
      eq.push_back({ParamExpr::constant(1.0), Monomial::variable(n_vars, d, 2)});
      eq.push_back({ParamExpr::constant(2.0 * fr.center[static_cast<Eigen::Index>(d)] / fr.scale),
                    Monomial::variable(n_vars, d)});
    }
    eq.push_back({ParamExpr::constant(fr.center.squaredNorm() / (fr.scale * fr.scale)) - a * a,
                  Monomial(n_vars)});
  }
  system.family = poly::ParameterizedSystem(std::move(eqs), system.family.unknowns(), std::move(params));
  system.spec.altitude = altitude;
  return system;
}

}  // namespace geoloc
