#pragma once

// Run configuration. TOML and JSON files share one schema: TOML is converted
// to JSON and both go through the same reader. Unknown keys are rejected.
//
// Angles (sampler cones, omega) accept a number in radians or an expression
// such as "pi/6", "2pi/3", "0.5*pi". Grid rotation steps are in degrees.

#include "graspcov/core/error.hpp"
#include "graspcov/gripper/gripper.hpp"
#include "graspcov/mesh/io.hpp"
#include "graspcov/oracle/oracle.hpp"
#include "graspcov/pipeline/hash.hpp"
#include "graspcov/samplers/samplers.hpp"

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace graspcov {

inline constexpr const char* kToolkitVersion = "0.1.0";

using Json = nlohmann::json;

struct ObjectConfig {
  std::string id;
  std::filesystem::path path;  // as written in the config
  double scale = kMetresToMillimetres;
};

enum class PrecisionDenominator { Valid, Attempts };

struct RunConfig {
  std::string name = "run";
  std::vector<ObjectConfig> objects;
  GripperSpec gripper;
  double translation_step = 10.0;  // mm
  double rotation_step = 30.0;     // degrees
  MetricParams metric;
  double mu = 1.0;
  std::vector<SamplerSpec> samplers;  // seeds come from `seeds`
  std::vector<double> eps = {0.05, 0.109, 0.2};
  std::vector<double> gamma = {0.5, 0.9};
  std::vector<std::uint64_t> checkpoints = {100, 1000, 10000, 100000};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double robustness_eps = 0.109;
  NeighbourhoodMode neighbourhood = NeighbourhoodMode::Valid;
  PrecisionDenominator precision_denominator = PrecisionDenominator::Valid;
  bool record_wall_time = true;
  double line_spacing = 0.0;  // 0: translation_step
  std::uint64_t max_attempts = 0;
  std::uint64_t max_enumerated = 50'000'000;
  std::filesystem::path output_dir = "out";
  std::filesystem::path base_dir;  // relative object paths resolve against this

  std::filesystem::path mesh_path(const ObjectConfig& o) const {
    return o.path.is_absolute() ? o.path : base_dir / o.path;
  }

  GridSpec grid_for(const TriMesh& mesh) const {
    GridSpec g;
    g.translation_step = translation_step;
    g.rotation_step = rotation_step;
    g.bounds = reference_bounds(mesh, gripper);
    return g;
  }

  SamplerOptions sampler_options() const {
    SamplerOptions o;
    o.line_spacing = line_spacing > 0.0 ? line_spacing : translation_step;
    o.max_attempts = max_attempts;
    return o;
  }

  /// Gammas evaluated for every run; 0 (the plain success set) comes first.
  std::vector<double> report_gammas() const {
    std::vector<double> g = {0.0};
    for (double v : gamma)
      if (v != 0.0) g.push_back(v);
    return g;
  }

  void validate() const;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

inline bool safe_id(const std::string& s) {
  return !s.empty() && s != "." && s != ".." && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

/// "pi/6", "2pi/3", "0.5*pi", "-pi", "0.25".
inline double parse_angle_expr(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  const auto fail = [&]() -> double { config_error("cannot parse angle '" + text + "'"); };
  if (s.empty()) return fail();
  const auto pi_at = s.find("pi");
  std::size_t used = 0;
  if (pi_at == std::string::npos) {
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != s.size()) return fail();
    return v;
  }
  std::string coef = s.substr(0, pi_at);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  double k = 1.0;
  if (coef == "-") {
    k = -1.0;
  } else if (!coef.empty()) {
    try {
      k = std::stod(coef, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != coef.size()) return fail();
  }
  const std::string rest = s.substr(pi_at + 2);
  double den = 1.0;
  if (!rest.empty()) {
    if (rest[0] != '/') return fail();
    try {
      den = std::stod(rest.substr(1), &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != rest.size() - 1 || den == 0.0) return fail();
  }
  return k * kPi / den;
}

class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) config_error(where_ + " must be a table/object");
  }

  /// Rejects keys that were never asked for.
  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) config_error("unknown key '" + k + "' in " + where_);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ == "config" ? key : where_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number()) config_error(path(key) + " must be a number");
    return v.get<double>();
  }

  double angle(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_angle_expr(v.get<std::string>());
    config_error(path(key) + " must be a number or an angle expression");
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    return as_count(at(key), path(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) config_error(path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_string()) config_error(path(key) + " must be a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const std::string& key, const Vec3& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_array() || v.size() != 3) config_error(path(key) + " must be an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) config_error(path(key) + " must be an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_array()) config_error(path(key) + " must be an array");
    std::vector<double> out;
    for (const Json& e : v) {
      if (!e.is_number()) config_error(path(key) + " must contain numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::uint64_t> counts(const std::string& key, const std::vector<std::uint64_t>& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_array()) config_error(path(key) + " must be an array");
    std::vector<std::uint64_t> out;
    for (const Json& e : v) out.push_back(as_count(e, path(key)));
    return out;
  }

 private:
  static std::uint64_t as_count(const Json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    config_error(where + " must be a non-negative integer");
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "uniform") return SamplerKind::Uniform;
  if (s == "line_com") return SamplerKind::LineCom;
  if (s == "approach") return SamplerKind::Approach;
  if (s == "antipodal") return SamplerKind::Antipodal;
  config_error("unknown sampler kind '" + s + "' (uniform, line_com, approach, antipodal)");
}

}  // namespace detail

inline RunConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  using detail::config_error;
  RunConfig c;
  c.base_dir = base_dir;
  detail::Reader r(j, "config");
  c.name = r.string("name", c.name);
  c.mu = r.number("mu", c.mu);
  c.record_wall_time = r.boolean("record_wall_time", c.record_wall_time);
  c.checkpoints = r.counts("checkpoints", c.checkpoints);
  c.seeds = r.counts("seeds", c.seeds);
  c.eps = r.numbers("eps", c.eps);
  c.gamma = r.numbers("gamma", c.gamma);
  c.output_dir = r.string("output_dir", c.output_dir.string());

  if (!r.has("objects")) config_error("config needs an 'objects' list");
  const Json& objs = r.at("objects");
  if (!objs.is_array()) config_error("objects must be an array of tables");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    detail::Reader o(objs[i], "objects[" + std::to_string(i) + "]");
    ObjectConfig oc;
    if (!o.has("path")) config_error("objects[" + std::to_string(i) + "] needs a 'path'");
    oc.path = o.string("path", "");
    oc.id = o.string("id", oc.path.stem().string());
    oc.scale = o.number("scale", oc.scale);
    o.done();
    c.objects.push_back(oc);
  }

  if (r.has("gripper")) {
    detail::Reader g(r.at("gripper"), "gripper");
    GripperSpec& s = c.gripper;
    s.max_opening = g.number("max_opening", s.max_opening);
    s.finger_length = g.number("finger_length", s.finger_length);
    s.finger_box = g.vec3("finger_box", s.finger_box);
    s.palm_box = g.vec3("palm_box", s.palm_box);
    s.closing_axis = g.vec3("closing_axis", s.closing_axis);
    s.approach_axis = g.vec3("approach_axis", s.approach_axis);
    s.contact_spacing = g.number("contact_spacing", s.contact_spacing);
    g.done();
  }
  if (r.has("grid")) {
    detail::Reader g(r.at("grid"), "grid");
    c.translation_step = g.number("translation_step", c.translation_step);
    c.rotation_step = g.number("rotation_step", c.rotation_step);
    g.done();
  }
  if (r.has("metric")) {
    detail::Reader m(r.at("metric"), "metric");
    const double omega = m.angle("omega", c.metric.omega);
    m.done();
    if (!(omega > 0.0)) config_error("metric.omega must be > 0");
    c.metric = MetricParams(omega);
  }
  if (r.has("robustness")) {
    detail::Reader m(r.at("robustness"), "robustness");
    c.robustness_eps = m.number("eps", c.robustness_eps);
    const std::string mode = m.string("neighbourhood", "valid");
    if (mode == "valid") c.neighbourhood = NeighbourhoodMode::Valid;
    else if (mode == "enumerated") c.neighbourhood = NeighbourhoodMode::Enumerated;
    else config_error("robustness.neighbourhood must be 'valid' or 'enumerated'");
    m.done();
  }
  if (r.has("precision")) {
    detail::Reader m(r.at("precision"), "precision");
    const std::string d = m.string("denominator", "valid");
    if (d == "valid") c.precision_denominator = PrecisionDenominator::Valid;
    else if (d == "attempts") c.precision_denominator = PrecisionDenominator::Attempts;
    else config_error("precision.denominator must be 'valid' or 'attempts'");
    m.done();
  }
  if (r.has("sampling")) {
    detail::Reader m(r.at("sampling"), "sampling");
    c.line_spacing = m.number("line_spacing", c.line_spacing);
    c.max_attempts = m.count("max_attempts", c.max_attempts);
    m.done();
  }
  if (r.has("budget")) {
    detail::Reader m(r.at("budget"), "budget");
    c.max_enumerated = m.count("max_enumerated", c.max_enumerated);
    m.done();
  }

  if (!r.has("samplers")) config_error("config needs a 'samplers' list");
  const Json& ss = r.at("samplers");
  if (!ss.is_array()) config_error("samplers must be an array of tables");
  for (std::size_t i = 0; i < ss.size(); ++i) {
    detail::Reader s(ss[i], "samplers[" + std::to_string(i) + "]");
    SamplerSpec spec;
    spec.kind = detail::parse_sampler_kind(s.string("kind", ""));
    spec.alpha = s.angle("alpha", 0.0);
    spec.beta = s.angle("beta", 0.0);
    spec.s_min = s.number("s_min", 0.0);
    s.done();
    c.samplers.push_back(spec);
  }
  r.done();
  return c;
}

inline void RunConfig::validate() const {
  using detail::config_error;
  if (objects.empty()) config_error("objects list is empty");
  std::set<std::string> ids;
  for (const ObjectConfig& o : objects) {
    if (!detail::safe_id(o.id)) config_error("object id '" + o.id + "' must use only [A-Za-z0-9_.-]");
    if (!ids.insert(o.id).second) config_error("duplicate object id '" + o.id + "'");
    if (!(o.scale > 0.0)) config_error("object '" + o.id + "' scale must be > 0");
    const auto p = mesh_path(o);
    if (!std::filesystem::is_regular_file(p))
      throw Error(ErrorCode::FileNotFound, "mesh file not found: " + p.string());
  }
  try {
    gripper.validate();
  } catch (const Error& e) {
    config_error(std::string("gripper: ") + e.what());
  }
  if (!(translation_step > 0.0)) config_error("grid.translation_step must be > 0");
  if (!(rotation_step > 0.0 && rotation_step <= 180.0)) config_error("grid.rotation_step must be in (0, 180]");
  if (!(mu > 0.0)) config_error("mu must be > 0");
  if (samplers.empty()) config_error("samplers list is empty");
  std::set<std::string> names;
  for (const SamplerSpec& s : samplers) {
    try {
      s.validate();
    } catch (const Error& e) {
      config_error("sampler " + s.name() + ": " + e.what());
    }
    if (!names.insert(s.name()).second) config_error("duplicate sampler '" + s.name() + "'");
  }
  if (eps.empty()) config_error("eps list is empty");
  for (double e : eps)
    if (!(e >= 0.0)) config_error("eps values must be >= 0");
  for (double g : gamma)
    if (!(g >= 0.0 && g <= 1.0)) config_error("gamma values must be in [0, 1]");
  if (checkpoints.empty()) config_error("checkpoints list is empty");
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    if (checkpoints[i] == 0 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      config_error("checkpoints must be positive and strictly increasing");
  if (seeds.empty()) config_error("seeds list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    config_error("seeds must be distinct");
  if (!(robustness_eps >= 0.0)) config_error("robustness.eps must be >= 0");
  if (!(line_spacing >= 0.0)) config_error("sampling.line_spacing must be >= 0");
}

/// Reads a .toml or .json file (by extension) into a RunConfig.
inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(ErrorCode::FileNotFound, "config file not found: " + path.string());
  const std::string ext = lowercase_extension(path);
  Json j;
  if (ext == ".json") {
    try {
      j = Json::parse(read_file_bytes(path));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
  } else if (ext == ".toml") {
    try {
      const toml::table tbl = toml::parse_file(path.string());
      std::ostringstream ss;
      ss << toml::json_formatter{tbl};
      j = Json::parse(ss.str());
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
      throw Error(ErrorCode::ConfigError, msg.str());
    }
  } else {
    throw Error(ErrorCode::ConfigError, path.string() + ": config must be .toml or .json");
  }
  return config_from_json(j, path.parent_path());
}

inline Json to_json(const GripperSpec& g) {
  const auto v = [](const Vec3& x) { return Json::array({x.x(), x.y(), x.z()}); };
  return {{"max_opening", g.max_opening},   {"finger_length", g.finger_length},
          {"finger_box", v(g.finger_box)},  {"palm_box", v(g.palm_box)},
          {"closing_axis", v(g.closing_axis)}, {"approach_axis", v(g.approach_axis)},
          {"contact_spacing", g.contact_spacing}};
}

inline Json to_json(const SamplerSpec& s) {
  static constexpr const char* kinds[] = {"uniform", "line_com", "approach", "antipodal"};
  return {{"kind", kinds[static_cast<int>(s.kind)]}, {"alpha", s.alpha}, {"beta", s.beta}, {"s_min", s.s_min}};
}

/// Fully resolved configuration (defaults filled in). The output directory
/// is left out: it does not affect results.
inline Json to_json(const RunConfig& c) {
  Json objs = Json::array();
  for (const ObjectConfig& o : c.objects)
    objs.push_back({{"id", o.id}, {"path", o.path.generic_string()}, {"scale", o.scale}});
  Json samplers = Json::array();
  for (const SamplerSpec& s : c.samplers) samplers.push_back(to_json(s));
  return {
      {"name", c.name},
      {"objects", objs},
      {"gripper", to_json(c.gripper)},
      {"grid", {{"translation_step", c.translation_step}, {"rotation_step", c.rotation_step}}},
      {"metric", {{"omega", c.metric.omega}}},
      {"mu", c.mu},
      {"samplers", samplers},
      {"eps", c.eps},
      {"gamma", c.gamma},
      {"checkpoints", c.checkpoints},
      {"seeds", c.seeds},
      {"robustness",
       {{"eps", c.robustness_eps}, {"neighbourhood", std::string(to_string(c.neighbourhood))}}},
      {"precision",
       {{"denominator", c.precision_denominator == PrecisionDenominator::Valid ? "valid" : "attempts"}}},
      {"record_wall_time", c.record_wall_time},
      {"sampling", {{"line_spacing", c.line_spacing}, {"max_attempts", c.max_attempts}}},
      {"budget", {{"max_enumerated", c.max_enumerated}}},
  };
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(to_json(c).dump()); }

/// Identifies everything a reference file depends on: if this changes the
/// stored reference no longer matches the config.
inline std::string reference_hash(const RunConfig& c, const ObjectConfig& o, const std::string& mesh_sha256) {
  const Json j = {{"object", o.id},
                  {"mesh_sha256", mesh_sha256},
                  {"scale", o.scale},
                  {"gripper", to_json(c.gripper)},
                  {"grid", {{"translation_step", c.translation_step}, {"rotation_step", c.rotation_step}}},
                  {"omega", c.metric.omega},
                  {"mu", c.mu},
                  {"robustness", {{"eps", c.robustness_eps},
                                  {"neighbourhood", std::string(to_string(c.neighbourhood))}}},
                  {"oracle_version", kOracleVersion}};
  return sha256_hex(j.dump());
}

}  // namespace graspcov
