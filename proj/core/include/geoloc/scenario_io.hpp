#pragma once

// Scenario files.
//
// JSON document:
//   { "format_version": 1,
//     "rng_seed": 7,                                   (optional)
//     "truth": [x, y, z],                              (optional, m)
//     "measurements": [
//       { "epoch": 0,
//         "rx1": {"id": "a", "pos": [x, y, z], "vel": [vx, vy, vz]},
//         "rx2": {...},
//         "fdoa_mps": 0.42, "tdoa_s": 1.2e-8 } ] }     (at least one of the two)
// rx1 is the reference receiver, rx2 the moving one; "id" is optional.
//
// Text format, one record per line, '#' starts a comment:
//   format 1
//   seed 7
//   truth x y z
//   fdoa <epoch> <id1> x y z vx vy vz <id2> x y z vx vy vz <value m/s>
//   tdoa <epoch> <id1> ... <id2> ... <value s>
// An id of "-" means no id.

#include <filesystem>
#include <string>

#include "geoloc/geometry.hpp"

namespace geoloc {

inline constexpr int kScenarioFormatVersion = 1;

/// Throws GeolocError(parse) on malformed input or unknown fields.
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);

Scenario scenario_from_text(const std::string& text);
std::string scenario_to_text(const Scenario& scenario);

/// Reads JSON when the first non-blank character is '{', text otherwise.
Scenario load_scenario(const std::filesystem::path& path);
/// JSON for a ".json" extension, text otherwise. Written atomically.
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never see a partial file. Throws GeolocError(io).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace geoloc
