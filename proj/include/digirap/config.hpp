#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "digirap/digitizer.hpp"
#include "digirap/dynamics.hpp"
#include "digirap/pulses.hpp"

namespace digirap::cli {

using nlohmann::json;

enum class Experiment {
  Continuous,
  Digitize,
  Compare,
  ErrorSweep,
  SidebandScan,
  DetuningProfile,
  Superposition,
};

inline constexpr std::string_view experiment_names[] = {
    "continuous", "digitize", "compare", "error-sweep", "sideband-scan", "detuning-profile",
    "superposition"};

inline std::string_view to_string(Experiment e) {
  return experiment_names[static_cast<std::size_t>(e)];
}

inline std::optional<Experiment> parse_experiment(std::string_view name) {
  for (std::size_t i = 0; i < std::size(experiment_names); ++i) {
    if (experiment_names[i] == name) return static_cast<Experiment>(i);
  }
  return std::nullopt;
}

enum class DiagnosticCode {
  ParseError,
  UnknownKey,
  MissingKey,
  WrongType,
  OutOfRange,
  ExclusiveKeys,
  UnknownName,
  NotApplicable,
};

inline std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::ParseError: return "parse-error";
    case DiagnosticCode::UnknownKey: return "unknown-key";
    case DiagnosticCode::MissingKey: return "missing-key";
    case DiagnosticCode::WrongType: return "wrong-type";
    case DiagnosticCode::OutOfRange: return "out-of-range";
    case DiagnosticCode::ExclusiveKeys: return "exclusive-keys";
    case DiagnosticCode::UnknownName: return "unknown-name";
    case DiagnosticCode::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

struct Diagnostic {
  DiagnosticCode code;
  std::string path;  // JSON pointer to the offending field
  std::string message;
  std::size_t line = 0;  // 1-based; 0 when unknown

  /// "line 7: out-of-range /train/r1: subpulses overlap: r1 must be >= 1"
  std::string to_string() const {
    std::string s;
    if (line > 0) s += "line " + std::to_string(line) + ": ";
    s += std::string(cli::to_string(code)) + " " + (path.empty() ? "/" : path) + ": " + message;
    return s;
  }
};

struct PulseSpec {
  EnvelopeShape envelope = EnvelopeShape::blackman();
  std::optional<double> area;
  std::optional<double> peak_rabi;
  double duration = 1.0;
  double chirp = 0.0;  // dimensionless chirp_rate * duration^2
  double carrier_offset = 0.0;

  ContinuousPulse resolve() const {
    if (area) return ContinuousPulse::from_area(*area, duration, chirp, envelope, carrier_offset);
    ContinuousPulse p;
    p.peak_rabi = peak_rabi.value_or(0.0);
    p.duration = duration;
    p.chirp_rate = chirp / (duration * duration);
    p.envelope = envelope;
    p.carrier_offset = carrier_offset;
    p.validate();
    return p;
  }
};

struct TrainSpec {
  std::size_t n = 100;
  double r1 = 100.0;
  std::optional<double> r2;
  EnvelopeShape envelope = EnvelopeShape::blackman();
  double subpulse_duration = 1.0;  // comb experiments only
  double area = pi;                // comb experiments: area at the carrier
};

struct SystemSpec {
  bool sidebands = false;  // values are tooth orders instead of frequencies
  std::vector<double> values{0.0};
  std::vector<double> couplings{1.0};

  LevelSystem resolve(double tooth_spacing = 0.0) const {
    LevelSystem s;
    s.detunings.clear();
    for (double v : values) s.detunings.push_back(sidebands ? v * tooth_spacing : v);
    s.couplings = couplings;
    s.validate();
    return s;
  }
};

struct IntegratorSpec {
  std::size_t steps_per_subpulse = 400;
  std::size_t samples_per_subpulse = 20;
  std::size_t continuous_samples = 2000;
  std::size_t steps_per_sample = 400;

  TrainOptions train() const { return {samples_per_subpulse, steps_per_subpulse}; }
  ContinuousOptions continuous() const {
    return {continuous_samples, steps_per_sample, ContinuousFrame::Detuning};
  }
};

struct SweepCase {
  double area;
  double chirp;
};

struct SweepSpec {
  // error-sweep
  std::vector<std::size_t> n_values{10, 20, 30, 50, 70, 100, 150, 200, 300, 400, 500};
  std::vector<SweepCase> cases{{pi, 291.6}, {5 * pi, 291.6}, {5 * pi, 64.8}, {5 * pi, 32.4}};
  std::size_t level = 0;
  // sideband-scan
  int n_min = 0;
  int n_max = 300;
  std::size_t points_per_tooth = 1;
  bool rescale = false;
  // detuning-profile, superposition
  std::vector<int> teeth{0, 10, 100, 150, 200};
  double offset_span = 0.2;  // fraction of the tooth spacing
  std::size_t offset_points = 41;
  double kappa = 1.0;
  bool prefactor = true;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Compare;
  PulseSpec pulse;
  TrainSpec train;
  SystemSpec system;
  IntegratorSpec integrator;
  SweepSpec sweep;
  std::string output_directory = "out";
  /// JSON pointers of every field that took its default value.
  std::vector<std::string> defaults_applied;
};

namespace detail {

inline json envelope_json(const EnvelopeShape& shape) {
  if (shape.kind() != EnvelopeKind::SampledTable) return shape.name();
  json pts = json::array();
  for (const auto& p : shape.samples()) pts.push_back({p.fraction, p.amplitude});
  return json{{"table", pts}};
}

inline bool uses_pulse(Experiment e) {
  return e == Experiment::Continuous || e == Experiment::Digitize || e == Experiment::Compare ||
         e == Experiment::ErrorSweep;
}
inline bool uses_source_train(Experiment e) {
  return e == Experiment::Digitize || e == Experiment::Compare || e == Experiment::ErrorSweep;
}
inline bool uses_comb(Experiment e) {
  return e == Experiment::SidebandScan || e == Experiment::DetuningProfile ||
         e == Experiment::Superposition;
}
inline bool uses_system(Experiment e) {
  return e == Experiment::Continuous || e == Experiment::Compare || e == Experiment::ErrorSweep;
}

}  // namespace detail

/// Fully resolved configuration, defaults included.
inline json resolved_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = std::string(to_string(c.experiment));
  const Experiment e = c.experiment;
  if (detail::uses_pulse(e)) {
    json p;
    p["envelope"] = detail::envelope_json(c.pulse.envelope);
    if (c.pulse.area) p["area"] = *c.pulse.area;
    if (c.pulse.peak_rabi) p["peak_rabi"] = *c.pulse.peak_rabi;
    p["duration"] = c.pulse.duration;
    if (e != Experiment::ErrorSweep) p["chirp"] = c.pulse.chirp;
    p["carrier_offset"] = c.pulse.carrier_offset;
    j["pulse"] = p;
  }
  if (e != Experiment::Continuous) {
    json t;
    if (e != Experiment::ErrorSweep) t["N"] = c.train.n;
    t["r1"] = c.train.r1;
    if (c.train.r2) t["r2"] = *c.train.r2;
    t["envelope"] = detail::envelope_json(c.train.envelope);
    if (detail::uses_comb(e)) {
      t["subpulse_duration"] = c.train.subpulse_duration;
      t["area"] = c.train.area;
    }
    j["train"] = t;
  }
  if (detail::uses_system(e)) {
    json s;
    s[c.system.sidebands ? "sidebands" : "detunings"] = c.system.values;
    s["couplings"] = c.system.couplings;
    j["system"] = s;
  }
  if (e != Experiment::Digitize) {
    json g;
    if (e != Experiment::Continuous) {
      g["steps_per_subpulse"] = c.integrator.steps_per_subpulse;
      g["samples_per_subpulse"] = c.integrator.samples_per_subpulse;
    }
    if (detail::uses_system(e)) {
      g["continuous_samples"] = c.integrator.continuous_samples;
      g["steps_per_sample"] = c.integrator.steps_per_sample;
    }
    j["integrator"] = g;
  }
  const auto& s = c.sweep;
  switch (e) {
    case Experiment::ErrorSweep: {
      json cases = json::array();
      for (const auto& k : s.cases) cases.push_back({{"area", k.area}, {"chirp", k.chirp}});
      j["sweep"] = {{"N", s.n_values}, {"cases", cases}, {"level", s.level}};
      break;
    }
    case Experiment::SidebandScan:
      j["sweep"] = {{"n_min", s.n_min},
                    {"n_max", s.n_max},
                    {"points_per_tooth", s.points_per_tooth},
                    {"rescale", s.rescale}};
      break;
    case Experiment::DetuningProfile:
      j["sweep"] = {
          {"teeth", s.teeth}, {"offset_span", s.offset_span}, {"offset_points", s.offset_points}};
      break;
    case Experiment::Superposition:
      j["sweep"] = {{"teeth", s.teeth}, {"kappa", s.kappa}, {"prefactor", s.prefactor}};
      break;
    default:
      break;
  }
  j["output"] = {{"directory", c.output_directory}};
  return j;
}

struct ValidationResult {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return config.has_value() && diagnostics.empty(); }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(std::string_view text, std::vector<Diagnostic>& diags) : text_(text), diags_(diags) {}

  void error(DiagnosticCode code, const std::string& path, std::string message) {
    diags_.push_back({code, path, std::move(message), locate(path)});
  }

  /// Line of the last key in `path`, found by walking the keys in order
  /// through the raw text.
  std::size_t locate(const std::string& path) const {
    if (path.empty()) return 0;
    std::size_t pos = 0;
    std::size_t start = 1;
    while (start <= path.size()) {
      const std::size_t end = std::min(path.find('/', start), path.size());
      const std::string key = path.substr(start, end - start);
      start = end + 1;
      if (key.empty() || std::all_of(key.begin(), key.end(), ::isdigit)) continue;
      const std::size_t found = text_.find("\"" + key + "\"", pos);
      if (found == std::string_view::npos) break;
      pos = found;
    }
    if (pos == 0) return 0;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  bool check_object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(DiagnosticCode::WrongType, path, "expected an object");
    return false;
  }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed,
                  const std::set<std::string>& not_applicable = {},
                  std::string_view experiment = {}) {
    for (const auto& [key, value] : obj.items()) {
      if (not_applicable.count(key)) {
        error(DiagnosticCode::NotApplicable, path + "/" + key,
              "not used by experiment '" + std::string(experiment) + "'");
      } else if (!allowed.count(key)) {
        error(DiagnosticCode::UnknownKey, path + "/" + key, "unknown key '" + key + "'");
      }
    }
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(DiagnosticCode::WrongType, path + "/" + key, "expected a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      error(DiagnosticCode::OutOfRange, path + "/" + key, "must be finite");
      return std::nullopt;
    }
    return d;
  }

  std::optional<long long> integer(const json& obj, const std::string& key,
                                   const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(DiagnosticCode::WrongType, path + "/" + key, "expected an integer");
      return std::nullopt;
    }
    return v.get<long long>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(DiagnosticCode::WrongType, path + "/" + key, "expected true or false");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  /// Radians, either a number or a string such as "pi", "5pi", "0.5 * pi".
  std::optional<double> area(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    const std::string p = path + "/" + key;
    double value = 0.0;
    if (v.is_number()) {
      value = v.get<double>();
    } else if (v.is_string()) {
      static const std::regex re(R"(^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)?\s*\*?\s*pi\s*$)");
      std::smatch m;
      const std::string s = v.get<std::string>();
      if (!std::regex_match(s, m, re)) {
        error(DiagnosticCode::WrongType, p, "expected radians or a multiple of pi such as \"5pi\"");
        return std::nullopt;
      }
      value = (m[1].matched ? std::stod(m[1].str()) : 1.0) * pi;
    } else {
      error(DiagnosticCode::WrongType, p, "expected radians or a multiple of pi such as \"5pi\"");
      return std::nullopt;
    }
    if (!std::isfinite(value) || value < 0.0) {
      error(DiagnosticCode::OutOfRange, p, "area must be non-negative");
      return std::nullopt;
    }
    return value;
  }

  std::optional<EnvelopeShape> envelope(const json& obj, const std::string& key,
                                        const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    const std::string p = path + "/" + key;
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      if (name == "blackman") return EnvelopeShape::blackman();
      if (name == "gaussian") return EnvelopeShape::gaussian();
      error(DiagnosticCode::UnknownName, p,
            "unknown envelope '" + name + "' (blackman, gaussian or {\"table\": ...})");
      return std::nullopt;
    }
    if (v.is_object() && v.contains("table") && v.size() == 1 && v.at("table").is_array()) {
      std::vector<TablePoint> pts;
      for (const auto& row : v.at("table")) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
          error(DiagnosticCode::WrongType, p + "/table",
                "table rows must be [fraction, amplitude] pairs");
          return std::nullopt;
        }
        pts.push_back({row[0].get<double>(), row[1].get<double>()});
      }
      try {
        return EnvelopeShape::table(std::move(pts));
      } catch (const InvalidArgument& ex) {
        error(DiagnosticCode::OutOfRange, p + "/table", ex.what());
        return std::nullopt;
      }
    }
    error(DiagnosticCode::WrongType, p,
          "expected \"blackman\", \"gaussian\" or {\"table\": [[fraction, amplitude], ...]}");
    return std::nullopt;
  }

  template <class T>
  std::optional<std::vector<T>> array(const json& obj, const std::string& key,
                                      const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    const std::string p = path + "/" + key;
    if (!v.is_array() || v.empty()) {
      error(DiagnosticCode::WrongType, p, "expected a non-empty array");
      return std::nullopt;
    }
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok) {
        error(DiagnosticCode::WrongType, p + "/" + std::to_string(i),
              std::is_integral_v<T> ? "expected an integer" : "expected a number");
        return std::nullopt;
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (v[i].get<long long>() < 0) {
          error(DiagnosticCode::OutOfRange, p + "/" + std::to_string(i), "must be non-negative");
          return std::nullopt;
        }
      }
      out.push_back(v[i].get<T>());
    }
    return out;
  }

 private:
  std::string_view text_;
  std::vector<Diagnostic>& diags_;
};

}  // namespace detail

/// Parse and fully validate a configuration document. `requested` is the
/// experiment named on the command line; when the document also names one
/// they must agree. Nothing is computed and nothing is written here.
inline ValidationResult validate_config(std::string_view text,
                                        std::optional<Experiment> requested = std::nullopt) {
  using detail::ConfigReader;
  ValidationResult result;
  auto& diags = result.diagnostics;
  ConfigReader rd(text, diags);

  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& ex) {
    // byte offset -> line
    const std::size_t byte = std::min<std::size_t>(ex.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    diags.push_back({DiagnosticCode::ParseError, "", ex.what(), line});
    return result;
  }
  if (!rd.check_object(root, "")) return result;

  ExperimentConfig cfg;
  auto defaulted = [&](const std::string& path) { cfg.defaults_applied.push_back(path); };

  rd.check_keys(root, "",
                {"experiment", "pulse", "train", "system", "integrator", "sweep", "output"});

  // experiment
  std::optional<Experiment> named;
  if (root.contains("experiment")) {
    if (!root["experiment"].is_string()) {
      rd.error(DiagnosticCode::WrongType, "/experiment", "expected a string");
    } else {
      named = parse_experiment(root["experiment"].get<std::string>());
      if (!named) {
        rd.error(DiagnosticCode::UnknownName, "/experiment",
                 "unknown experiment '" + root["experiment"].get<std::string>() + "'");
      }
    }
  }
  if (requested && named && *requested != *named) {
    rd.error(DiagnosticCode::UnknownName, "/experiment",
             "config names '" + std::string(to_string(*named)) + "' but '" +
                 std::string(to_string(*requested)) + "' was requested");
  }
  if (!requested && !named) {
    if (!root.contains("experiment")) {
      rd.error(DiagnosticCode::MissingKey, "/experiment", "no experiment given");
    }
    return result;
  }
  cfg.experiment = requested ? *requested : *named;
  const Experiment e = cfg.experiment;
  const std::string ename(to_string(e));

  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    if (!root.contains(name)) return empty;
    if (!rd.check_object(root[name], std::string("/") + name)) return empty;
    return root[name];
  };

  // pulse
  if (detail::uses_pulse(e)) {
    if (!root.contains("pulse") && e != Experiment::ErrorSweep) {
      rd.error(DiagnosticCode::MissingKey, "/pulse", "experiment '" + ename + "' needs a pulse section");
    }
    const json& p = section("pulse");
    const std::string path = "/pulse";
    std::set<std::string> na;
    if (e == Experiment::ErrorSweep) na = {"area", "peak_rabi", "chirp"};
    rd.check_keys(p, path, {"envelope", "area", "peak_rabi", "duration", "chirp", "carrier_offset"},
                  na, ename);
    if (auto v = rd.envelope(p, "envelope", path)) cfg.pulse.envelope = *v;
    else if (!p.contains("envelope")) defaulted("/pulse/envelope");
    if (auto v = rd.number(p, "duration", path)) {
      if (*v <= 0.0) rd.error(DiagnosticCode::OutOfRange, "/pulse/duration", "duration must be positive");
      else cfg.pulse.duration = *v;
    } else if (!p.contains("duration")) {
      defaulted("/pulse/duration");
    }
    if (auto v = rd.number(p, "carrier_offset", path)) cfg.pulse.carrier_offset = *v;
    else if (!p.contains("carrier_offset")) defaulted("/pulse/carrier_offset");
    if (e != Experiment::ErrorSweep) {
      if (auto v = rd.number(p, "chirp", path)) cfg.pulse.chirp = *v;
      else if (!p.contains("chirp")) defaulted("/pulse/chirp");
      const bool has_area = p.contains("area");
      const bool has_peak = p.contains("peak_rabi");
      if (has_area == has_peak && root.contains("pulse")) {
        rd.error(DiagnosticCode::ExclusiveKeys, "/pulse",
                 "exactly one of 'area' or 'peak_rabi' must be given");
      }
      if (has_area) cfg.pulse.area = rd.area(p, "area", path);
      if (has_peak) {
        if (auto v = rd.number(p, "peak_rabi", path)) {
          if (*v < 0.0) rd.error(DiagnosticCode::OutOfRange, "/pulse/peak_rabi", "must be non-negative");
          else cfg.pulse.peak_rabi = *v;
        }
      }
    }
  } else if (root.contains("pulse")) {
    rd.error(DiagnosticCode::NotApplicable, "/pulse", "not used by experiment '" + ename + "'");
  }

  // train
  if (e != Experiment::Continuous) {
    const json& t = section("train");
    const std::string path = "/train";
    std::set<std::string> na;
    if (detail::uses_comb(e)) na = {"r2"};
    else na = {"subpulse_duration", "area"};
    if (e == Experiment::ErrorSweep) na.insert("N");
    rd.check_keys(t, path, {"N", "r1", "r2", "envelope", "subpulse_duration", "area"}, na, ename);
    if (e != Experiment::ErrorSweep) {
      if (auto v = rd.integer(t, "N", path)) {
        if (*v < 2) rd.error(DiagnosticCode::OutOfRange, "/train/N", "N must be at least 2");
        else cfg.train.n = static_cast<std::size_t>(*v);
      } else if (!t.contains("N")) {
        defaulted("/train/N");
      }
    }
    if (auto v = rd.number(t, "r1", path)) {
      if (*v < 1.0) rd.error(DiagnosticCode::OutOfRange, "/train/r1", "subpulses overlap: r1 must be >= 1");
      else cfg.train.r1 = *v;
    } else if (!t.contains("r1")) {
      defaulted("/train/r1");
    }
    if (!detail::uses_comb(e) && t.contains("r2")) {
      if (auto v = rd.number(t, "r2", path)) {
        if (*v <= 0.0) rd.error(DiagnosticCode::OutOfRange, "/train/r2", "r2 must be positive");
        else cfg.train.r2 = *v;
      }
    }
    if (auto v = rd.envelope(t, "envelope", path)) cfg.train.envelope = *v;
    else if (!t.contains("envelope")) defaulted("/train/envelope");
    if (detail::uses_comb(e)) {
      if (auto v = rd.number(t, "subpulse_duration", path)) {
        if (*v <= 0.0) rd.error(DiagnosticCode::OutOfRange, "/train/subpulse_duration", "must be positive");
        else cfg.train.subpulse_duration = *v;
      } else if (!t.contains("subpulse_duration")) {
        defaulted("/train/subpulse_duration");
      }
      if (auto v = rd.area(t, "area", path)) cfg.train.area = *v;
      else if (!t.contains("area")) defaulted("/train/area");
    }
  } else if (root.contains("train")) {
    rd.error(DiagnosticCode::NotApplicable, "/train", "not used by experiment '" + ename + "'");
  }

  // system
  if (detail::uses_system(e)) {
    const json& s = section("system");
    const std::string path = "/system";
    rd.check_keys(s, path, {"detunings", "sidebands", "couplings"});
    if (s.contains("detunings") && s.contains("sidebands")) {
      rd.error(DiagnosticCode::ExclusiveKeys, path, "give either 'detunings' or 'sidebands', not both");
    } else if (s.contains("sidebands")) {
      if (auto v = rd.array<double>(s, "sidebands", path)) {
        cfg.system.values = *v;
        cfg.system.sidebands = true;
      }
    } else if (auto v = rd.array<double>(s, "detunings", path)) {
      cfg.system.values = *v;
    } else if (!s.contains("detunings")) {
      defaulted("/system/detunings");
    }
    if (auto v = rd.array<double>(s, "couplings", path)) {
      if (std::any_of(v->begin(), v->end(), [](double g) { return g < 0.0; })) {
        rd.error(DiagnosticCode::OutOfRange, "/system/couplings", "coupling weights must be non-negative");
      }
      cfg.system.couplings = *v;
    } else if (!s.contains("couplings")) {
      cfg.system.couplings.assign(cfg.system.values.size(), 1.0);
      defaulted("/system/couplings");
    }
    if (cfg.system.couplings.size() != cfg.system.values.size()) {
      rd.error(DiagnosticCode::OutOfRange, "/system/couplings",
               "one coupling weight per excited level is required");
    }
    if (cfg.system.sidebands && e != Experiment::Compare) {
      rd.error(DiagnosticCode::NotApplicable, "/system/sidebands",
               "sideband orders need a single train; use 'detunings' for '" + ename + "'");
    }
  } else if (root.contains("system")) {
    rd.error(DiagnosticCode::NotApplicable, "/system", "not used by experiment '" + ename + "'");
  }

  // integrator
  if (e != Experiment::Digitize) {
    const json& g = section("integrator");
    const std::string path = "/integrator";
    std::set<std::string> na;
    if (e == Experiment::Continuous) na = {"steps_per_subpulse", "samples_per_subpulse"};
    if (!detail::uses_system(e)) na = {"continuous_samples", "steps_per_sample"};
    rd.check_keys(g, path,
                  {"steps_per_subpulse", "samples_per_subpulse", "continuous_samples", "steps_per_sample"},
                  na, ename);
    auto count = [&](const char* key, std::size_t minimum, std::size_t& target) {
      if (na.count(key)) return;
      if (auto v = rd.integer(g, key, path)) {
        if (*v < static_cast<long long>(minimum)) {
          rd.error(DiagnosticCode::OutOfRange, path + "/" + key,
                   "must be at least " + std::to_string(minimum));
        } else {
          target = static_cast<std::size_t>(*v);
        }
      } else if (!g.contains(key)) {
        defaulted(path + "/" + key);
      }
    };
    count("steps_per_subpulse", 1, cfg.integrator.steps_per_subpulse);
    count("samples_per_subpulse", 2, cfg.integrator.samples_per_subpulse);
    count("continuous_samples", 2, cfg.integrator.continuous_samples);
    count("steps_per_sample", 1, cfg.integrator.steps_per_sample);
  } else if (root.contains("integrator")) {
    rd.error(DiagnosticCode::NotApplicable, "/integrator", "not used by experiment '" + ename + "'");
  }

  // sweep
  const std::string spath = "/sweep";
  auto& sw = cfg.sweep;
  switch (e) {
    case Experiment::ErrorSweep: {
      const json& s = section("sweep");
      rd.check_keys(s, spath, {"N", "cases", "level"});
      if (auto v = rd.array<std::size_t>(s, "N", spath)) {
        if (std::any_of(v->begin(), v->end(), [](std::size_t n) { return n < 2; })) {
          rd.error(DiagnosticCode::OutOfRange, "/sweep/N", "every N must be at least 2");
        }
        sw.n_values = *v;
      } else if (!s.contains("N")) {
        defaulted("/sweep/N");
      }
      if (s.contains("cases")) {
        const json& cs = s["cases"];
        if (!cs.is_array() || cs.empty()) {
          rd.error(DiagnosticCode::WrongType, "/sweep/cases", "expected a non-empty array");
        } else {
          sw.cases.clear();
          for (std::size_t i = 0; i < cs.size(); ++i) {
            const std::string cp = "/sweep/cases/" + std::to_string(i);
            if (!rd.check_object(cs[i], cp)) continue;
            rd.check_keys(cs[i], cp, {"area", "chirp"});
            auto a = rd.area(cs[i], "area", cp);
            auto c = rd.number(cs[i], "chirp", cp);
            if (!cs[i].contains("area")) rd.error(DiagnosticCode::MissingKey, cp + "/area", "case needs an area");
            if (!cs[i].contains("chirp")) rd.error(DiagnosticCode::MissingKey, cp + "/chirp", "case needs a chirp");
            if (a && c) sw.cases.push_back({*a, *c});
          }
        }
      } else {
        defaulted("/sweep/cases");
      }
      if (auto v = rd.integer(s, "level", spath)) {
        const auto levels = static_cast<long long>(cfg.system.values.size());
        if (*v < 0 || *v > levels) rd.error(DiagnosticCode::OutOfRange, "/sweep/level", "no such level");
        else sw.level = static_cast<std::size_t>(*v);
      } else if (!s.contains("level")) {
        defaulted("/sweep/level");
      }
      break;
    }
    case Experiment::SidebandScan: {
      const json& s = section("sweep");
      rd.check_keys(s, spath, {"n_min", "n_max", "points_per_tooth", "rescale"});
      if (auto v = rd.integer(s, "n_min", spath)) sw.n_min = static_cast<int>(*v);
      else if (!s.contains("n_min")) defaulted("/sweep/n_min");
      if (auto v = rd.integer(s, "n_max", spath)) sw.n_max = static_cast<int>(*v);
      else if (!s.contains("n_max")) defaulted("/sweep/n_max");
      if (sw.n_max < sw.n_min) rd.error(DiagnosticCode::OutOfRange, "/sweep/n_max", "n_max must be >= n_min");
      if (auto v = rd.integer(s, "points_per_tooth", spath)) {
        if (*v < 1) rd.error(DiagnosticCode::OutOfRange, "/sweep/points_per_tooth", "must be at least 1");
        else sw.points_per_tooth = static_cast<std::size_t>(*v);
      } else if (!s.contains("points_per_tooth")) {
        defaulted("/sweep/points_per_tooth");
      }
      if (auto v = rd.boolean(s, "rescale", spath)) sw.rescale = *v;
      else if (!s.contains("rescale")) defaulted("/sweep/rescale");
      break;
    }
    case Experiment::DetuningProfile:
    case Experiment::Superposition: {
      const json& s = section("sweep");
      if (e == Experiment::DetuningProfile) {
        rd.check_keys(s, spath, {"teeth", "offset_span", "offset_points"});
      } else {
        rd.check_keys(s, spath, {"teeth", "kappa", "prefactor"});
        sw.teeth = {1, 2, 5, 10, 20, 50, 100, 150, 200, 300};
      }
      if (auto v = rd.array<int>(s, "teeth", spath)) sw.teeth = *v;
      else if (!s.contains("teeth")) defaulted("/sweep/teeth");
      if (e == Experiment::DetuningProfile) {
        if (auto v = rd.number(s, "offset_span", spath)) {
          if (*v < 0.0) rd.error(DiagnosticCode::OutOfRange, "/sweep/offset_span", "must be non-negative");
          else sw.offset_span = *v;
        } else if (!s.contains("offset_span")) {
          defaulted("/sweep/offset_span");
        }
        if (auto v = rd.integer(s, "offset_points", spath)) {
          if (*v < 1) rd.error(DiagnosticCode::OutOfRange, "/sweep/offset_points", "must be at least 1");
          else sw.offset_points = static_cast<std::size_t>(*v);
        } else if (!s.contains("offset_points")) {
          defaulted("/sweep/offset_points");
        }
      } else {
        if (auto v = rd.number(s, "kappa", spath)) {
          if (*v <= 0.0) rd.error(DiagnosticCode::OutOfRange, "/sweep/kappa", "must be positive");
          else sw.kappa = *v;
        } else if (!s.contains("kappa")) {
          defaulted("/sweep/kappa");
        }
        if (auto v = rd.boolean(s, "prefactor", spath)) sw.prefactor = *v;
        else if (!s.contains("prefactor")) defaulted("/sweep/prefactor");
      }
      break;
    }
    default:
      if (root.contains("sweep")) {
        rd.error(DiagnosticCode::NotApplicable, spath, "not used by experiment '" + ename + "'");
      }
  }

  // output
  {
    const json& o = section("output");
    rd.check_keys(o, "/output", {"directory"});
    if (o.contains("directory")) {
      if (!o["directory"].is_string() || o["directory"].get<std::string>().empty()) {
        rd.error(DiagnosticCode::WrongType, "/output/directory", "expected a non-empty path");
      } else {
        cfg.output_directory = o["directory"].get<std::string>();
      }
    } else {
      defaulted("/output/directory");
    }
  }

  // cross-field checks that need resolved values
  if (diags.empty() && detail::uses_pulse(e) && e != Experiment::ErrorSweep) {
    try {
      (void)cfg.pulse.resolve();
    } catch (const InvalidArgument& ex) {
      rd.error(DiagnosticCode::OutOfRange, "/pulse", ex.what());
    }
  }

  if (diags.empty()) result.config = std::move(cfg);
  return result;
}

}  // namespace digirap::cli
