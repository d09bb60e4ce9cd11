#pragma once

#include <stdexcept>
#include <string>

namespace geoloc {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  singular_geometry,
  degenerate_pair,
  unsupported,
  no_estimate,
  parse,
  io,
};

const char* to_string(ErrorKind kind);

class GeolocError : public std::runtime_error {
 public:
  GeolocError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace geoloc
