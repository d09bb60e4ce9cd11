#include "geoloc/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace geoloc {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw GeolocError(ErrorKind::parse, what); }

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) fail(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) fail(where + ": unknown field '" + key + "'");
  }
}

const json& required(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where + ": expected a number");
  return v.get<double>();
}

Vec3 vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) fail(where + ": expected an array of 3 numbers");
  return Vec3(number(v[0], where), number(v[1], where), number(v[2], where));
}

ordered vec3_json(const Vec3& v) { return ordered::array({v.x(), v.y(), v.z()}); }

ReceiverState receiver(const json& v, int epoch, const std::string& where) {
  only_keys(v, {"id", "pos", "vel"}, where);
  ReceiverState rx;
  rx.epoch = epoch;
  if (const auto it = v.find("id"); it != v.end()) {
    if (!it->is_string()) fail(where + ".id: expected a string");
    rx.id = it->get<std::string>();
  }
  rx.position = vec3(required(v, "pos", where), where + ".pos");
  rx.velocity = vec3(required(v, "vel", where), where + ".vel");
  return rx;
}

ordered receiver_json(const ReceiverState& rx) {
  ordered out = ordered::object();
  if (!rx.id.empty()) out["id"] = rx.id;
  out["pos"] = vec3_json(rx.position);
  out["vel"] = vec3_json(rx.velocity);
  return out;
}

ordered pair_json(const ReceiverPair& p) {
  ordered out = ordered::object();
  out["epoch"] = p.reference.epoch;
  out["rx1"] = receiver_json(p.reference);
  out["rx2"] = receiver_json(p.moving);
  return out;
}

void finish(Scenario& s) {
  try {
    s.validate();
  } catch (const GeolocError& e) {
    fail(std::string("invalid scenario: ") + e.what());
  }
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  only_keys(doc, {"format_version", "rng_seed", "truth", "measurements"}, "scenario");
  const auto& version = required(doc, "format_version", "scenario");
  if (!version.is_number_integer() || version.get<int>() != kScenarioFormatVersion) {
    fail("scenario: unsupported format_version (expected " + std::to_string(kScenarioFormatVersion) + ")");
  }
  Scenario s;
  if (const auto it = doc.find("rng_seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) fail("scenario.rng_seed: expected a non-negative integer");
    s.rng_seed = it->get<std::uint64_t>();
  }
  if (const auto it = doc.find("truth"); it != doc.end()) s.truth = Emitter{vec3(*it, "scenario.truth")};
  const auto& list = required(doc, "measurements", "scenario");
  if (!list.is_array()) fail("scenario.measurements: expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "measurements[" + std::to_string(i) + "]";
    const auto& m = list[i];
    only_keys(m, {"epoch", "rx1", "rx2", "fdoa_mps", "tdoa_s"}, where);
    const auto& epoch = required(m, "epoch", where);
    if (!epoch.is_number_integer()) fail(where + ".epoch: expected an integer");
    const int e = epoch.get<int>();
    const auto pair = ReceiverPair{receiver(required(m, "rx1", where), e, where + ".rx1"),
                                   receiver(required(m, "rx2", where), e, where + ".rx2")};
    const auto f = m.find("fdoa_mps");
    const auto t = m.find("tdoa_s");
    if (f == m.end() && t == m.end()) fail(where + ": needs fdoa_mps or tdoa_s");
    if (f != m.end()) s.fdoa.push_back({pair, number(*f, where + ".fdoa_mps")});
    if (t != m.end()) s.tdoa.push_back({pair, number(*t, where + ".tdoa_s")});
  }
  finish(s);
  return s;
}

std::string scenario_to_json(const Scenario& scenario) {
  ordered doc = ordered::object();
  doc["format_version"] = kScenarioFormatVersion;
  doc["rng_seed"] = scenario.rng_seed;
  if (scenario.truth) doc["truth"] = vec3_json(scenario.truth->position);
  ordered list = ordered::array();
  for (const auto& m : scenario.fdoa) {
    auto entry = pair_json(m.pair);
    entry["fdoa_mps"] = m.value;
    list.push_back(std::move(entry));
  }
  for (const auto& m : scenario.tdoa) {
    auto entry = pair_json(m.pair);
    entry["tdoa_s"] = m.value;
    list.push_back(std::move(entry));
  }
  doc["measurements"] = std::move(list);
  return doc.dump(2) + "\n";
}

// --------------------------------------------------------------- text

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(where + ": '" + tok + "' is not a number");
  }
}

std::string text_receiver(const ReceiverState& rx) {
  std::string out = rx.id.empty() ? "-" : rx.id;
  for (int d = 0; d < 3; ++d) out += " " + fmt(rx.position[d]);
  for (int d = 0; d < 3; ++d) out += " " + fmt(rx.velocity[d]);
  return out;
}

std::string text_line(const char* kind, const ReceiverPair& p, double value) {
  return std::string(kind) + " " + std::to_string(p.reference.epoch) + " " + text_receiver(p.reference) +
         " " + text_receiver(p.moving) + " " + fmt(value) + "\n";
}

}  // namespace

Scenario scenario_from_text(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_format = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto& kind = tok[0];
    if (kind == "format") {
      if (tok.size() != 2 || tok[1] != std::to_string(kScenarioFormatVersion)) {
        fail(where + ": unsupported format line");
      }
      have_format = true;
    } else if (kind == "seed") {
      if (tok.size() != 2) fail(where + ": seed takes one value");
      try {
        std::size_t used = 0;
        s.rng_seed = std::stoull(tok[1], &used);
        if (used != tok[1].size() || tok[1][0] == '-') throw std::invalid_argument(tok[1]);
      } catch (const std::exception&) {
        fail(where + ": bad seed '" + tok[1] + "'");
      }
    } else if (kind == "truth") {
      if (tok.size() != 4) fail(where + ": truth takes three values");
      s.truth = Emitter{Vec3(parse_number(tok[1], where), parse_number(tok[2], where),
                             parse_number(tok[3], where))};
    } else if (kind == "fdoa" || kind == "tdoa") {
      if (tok.size() != 17) fail(where + ": expected 17 fields, found " + std::to_string(tok.size()));
      int epoch = 0;
      try {
        std::size_t used = 0;
        epoch = std::stoi(tok[1], &used);
        if (used != tok[1].size()) throw std::invalid_argument(tok[1]);
      } catch (const std::exception&) {
        fail(where + ": bad epoch '" + tok[1] + "'");
      }
      auto rx = [&](std::size_t at) {
        ReceiverState r;
        r.epoch = epoch;
        r.id = tok[at] == "-" ? "" : tok[at];
        for (int d = 0; d < 3; ++d) r.position[d] = parse_number(tok[at + 1 + d], where);
        for (int d = 0; d < 3; ++d) r.velocity[d] = parse_number(tok[at + 4 + d], where);
        return r;
      };
      ReceiverPair pair{rx(2), rx(9)};
      const double value = parse_number(tok[16], where);
      if (kind == "fdoa") {
        s.fdoa.push_back({std::move(pair), value});
      } else {
        s.tdoa.push_back({std::move(pair), value});
      }
    } else {
      fail(where + ": unknown record '" + kind + "'");
    }
  }
  if (!have_format) fail("missing 'format " + std::to_string(kScenarioFormatVersion) + "' line");
  finish(s);
  return s;
}

std::string scenario_to_text(const Scenario& scenario) {
  std::string out = "format " + std::to_string(kScenarioFormatVersion) + "\n";
  out += "seed " + std::to_string(scenario.rng_seed) + "\n";
  if (scenario.truth) {
    const auto& t = scenario.truth->position;
    out += "truth " + fmt(t.x()) + " " + fmt(t.y()) + " " + fmt(t.z()) + "\n";
  }
  for (const auto& m : scenario.fdoa) out += text_line("fdoa", m.pair, m.value);
  for (const auto& m : scenario.tdoa) out += text_line("tdoa", m.pair, m.value);
  return out;
}

// --------------------------------------------------------------- files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeolocError(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw GeolocError(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw GeolocError(ErrorKind::io, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw GeolocError(ErrorKind::io, "cannot move output into '" + path.string() + "'");
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  const auto text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return scenario_from_json(text);
  return scenario_from_text(text);
}

void save_scenario(const std::filesystem::path& path, const Scenario& scenario) {
  write_file_atomic(path, path.extension() == ".json" ? scenario_to_json(scenario)
                                                      : scenario_to_text(scenario));
}

}  // namespace geoloc
