#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace lspdyn::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string key_path, const std::string& message)
    : std::runtime_error(key_path.empty() ? message : fmt::format("{}: {}", key_path, message)),
      key_path_(std::move(key_path)) {}

std::string_view scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::dynamics: return "dynamics";
    case ScenarioKind::spectrum_scan: return "spectrum_scan";
    case ScenarioKind::spectral_density: return "spectral_density";
    case ScenarioKind::steady_sweep: return "steady_sweep";
  }
  return "dynamics";
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Walks one section: every present key must be consumed by a reader.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError(path_, "expected a mapping");
    doc_ = &doc;
  }

  bool has(const std::string& key) const { return doc_ && doc_->contains(key) && !(*doc_)[key].is_null(); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &(*doc_)[key] : nullptr;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double positive(const std::string& key, double fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v->get<double>();
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path(key), fmt::format("must be > 0 (got {})", x));
    return x;
  }

  int positive_int(const std::string& key, int fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < 1 || x > 100000000) throw ConfigError(path(key), fmt::format("must be a positive integer (got {})", x));
    return int(x);
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    if (!doc_) return;
    for (const auto& [key, value] : doc_->items())
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown key");
  }

 private:
  const json* doc_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

const json& child(const json& doc, const std::string& key) {
  static const json null_value;
  return doc.is_object() && doc.contains(key) ? doc[key] : null_value;
}

Sweep parse_sweep(const json& doc, const std::string& path) {
  Section s(doc, path);
  Sweep sweep;
  const std::string parameter = s.string("parameter", "distance_nm");
  if (parameter == "distance_nm")
    sweep.parameter = SweepParameter::distance_nm;
  else if (parameter == "count")
    sweep.parameter = SweepParameter::count;
  else
    throw ConfigError(s.path("parameter"), fmt::format("expected distance_nm or count (got '{}')", parameter));

  if (const json* values = s.get("values")) {
    if (!values->is_array()) throw ConfigError(s.path("values"), "expected a list of numbers");
    for (std::size_t i = 0; i < values->size(); ++i) {
      const auto& v = (*values)[i];
      if (!v.is_number()) throw ConfigError(fmt::format("{}[{}]", s.path("values"), i), "expected a number");
      sweep.values.push_back(v.get<double>());
    }
    for (const char* k : {"start", "stop", "step"})
      if (s.has(k)) throw ConfigError(s.path(k), "give either values or start/stop/step");
  } else if (s.has("start") || s.has("stop") || s.has("step")) {
    for (const char* k : {"start", "stop", "step"})
      if (!s.has(k)) throw ConfigError(s.path(k), "required together with start/stop/step");
    const double start = s.positive("start", 0.0);
    const double stop = s.positive("stop", 0.0);
    const double step = s.positive("step", 0.0);
    if (stop < start) throw ConfigError(s.path("stop"), "must not be below start");
    const long n = long(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 100000) throw ConfigError(s.path("step"), "sweep has more than 100000 points");
    for (long i = 0; i < n; ++i) sweep.values.push_back(start + double(i) * step);
  }
  if (sweep.parameter == SweepParameter::count)
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
      const double v = sweep.values[i];
      if (v < 1.0 || v != std::floor(v))
        throw ConfigError(fmt::format("{}[{}]", s.path("values"), i), "emitter counts must be positive integers");
    }
  s.finish();
  return sweep;
}

}  // namespace

SystemGeometry RunConfig::geometry_at(double sweep_value) const {
  SystemGeometry g = geom;
  if (!sweep) return g;
  if (sweep->parameter == SweepParameter::distance_nm)
    g.distance_nm = sweep_value;
  else
    g.n_emitters = int(sweep_value);
  return g;
}

std::vector<double> RunConfig::points() const { return sweep ? sweep->values : std::vector<double>{}; }

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "configuration must be a mapping of sections");
  RunConfig cfg;
  Section root(doc, "");
  for (const char* section : {"name", "metal", "medium", "sphere", "emitters", "numerics", "scenario", "output"})
    root.get(section);
  root.finish();

  if (root.has("name")) {
    if (!doc["name"].is_string()) throw ConfigError("name", "expected a string");
    cfg.name = doc["name"].get<std::string>();
    if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
      throw ConfigError("name", "must be a non-empty file-name prefix");
  }

  Section metal(child(doc, "metal"), "metal");
  cfg.metal.hbar_omega_p = metal.positive("hbar_omega_p_ev", cfg.metal.hbar_omega_p);
  cfg.metal.eps_inf = metal.positive("eps_inf", cfg.metal.eps_inf);
  cfg.metal.hbar_gamma_p = metal.positive("hbar_gamma_p_ev", cfg.metal.hbar_gamma_p);
  metal.finish();

  Section medium(child(doc, "medium"), "medium");
  if (!medium.has("eps_d")) cfg.notes.push_back("medium.eps_d not given; using 1.0 (vacuum)");
  cfg.geom.eps_d = medium.positive("eps_d", 1.0);
  medium.finish();

  Section sphere(child(doc, "sphere"), "sphere");
  cfg.geom.radius_nm = sphere.positive("radius_nm", cfg.geom.radius_nm);
  sphere.finish();

  Section emitters(child(doc, "emitters"), "emitters");
  cfg.geom.n_emitters = emitters.positive_int("count", cfg.geom.n_emitters);
  cfg.geom.distance_nm = emitters.positive("distance_nm", cfg.geom.distance_nm);
  cfg.geom.hbar_omega0 = emitters.positive("hbar_omega0_ev", cfg.geom.hbar_omega0);
  cfg.geom.hbar_gamma0 = emitters.positive("hbar_gamma0_ev", cfg.geom.hbar_gamma0);
  emitters.finish();
  if (!(cfg.geom.distance_nm > cfg.geom.radius_nm))
    throw ConfigError("emitters.distance_nm", fmt::format("distance {} nm must exceed the sphere radius {} nm",
                                                          cfg.geom.distance_nm, cfg.geom.radius_nm));

  Section numerics(child(doc, "numerics"), "numerics");
  cfg.numerics.n_max = numerics.positive_int("n_max", cfg.numerics.n_max);
  cfg.numerics.grid.omega_min = numerics.positive("omega_min_ev", cfg.numerics.grid.omega_min);
  cfg.numerics.grid.omega_max = numerics.positive("omega_max_ev", cfg.numerics.grid.omega_max);
  cfg.numerics.grid.n_points = numerics.positive_int("omega_points", cfg.numerics.grid.n_points);
  cfg.numerics.t_max_fs = numerics.positive("t_max_fs", cfg.numerics.t_max_fs);
  cfg.numerics.dt_fs = numerics.positive("dt_fs", cfg.numerics.dt_fs);
  numerics.finish();
  if (cfg.numerics.n_max > 100) throw ConfigError("numerics.n_max", "at most 100 multipole orders are supported");
  if (!(cfg.numerics.grid.omega_max > cfg.numerics.grid.omega_min))
    throw ConfigError("numerics.omega_max_ev", "must exceed omega_min_ev");
  if (cfg.numerics.grid.n_points < 3) throw ConfigError("numerics.omega_points", "needs at least 3 points");

  Section scenario(child(doc, "scenario"), "scenario");
  const std::string kind = scenario.string("kind", "dynamics");
  if (kind == "dynamics")
    cfg.kind = ScenarioKind::dynamics;
  else if (kind == "spectrum_scan")
    cfg.kind = ScenarioKind::spectrum_scan;
  else if (kind == "spectral_density")
    cfg.kind = ScenarioKind::spectral_density;
  else if (kind == "steady_sweep")
    cfg.kind = ScenarioKind::steady_sweep;
  else
    throw ConfigError(scenario.path("kind"),
                      fmt::format("expected dynamics, spectrum_scan, spectral_density or steady_sweep (got '{}')", kind));
  const std::string initial = scenario.string("initial", "single_excited");
  if (initial == "single_excited")
    cfg.initial = InitialKind::single_excited;
  else if (initial == "w_state")
    cfg.initial = InitialKind::w_state;
  else
    throw ConfigError(scenario.path("initial"), fmt::format("expected single_excited or w_state (got '{}')", initial));
  if (const json* sweep = scenario.get("sweep")) cfg.sweep = parse_sweep(*sweep, scenario.path("sweep"));
  scenario.finish();
  if (cfg.sweep && cfg.sweep->parameter == SweepParameter::distance_nm)
    for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i)
      if (!(cfg.sweep->values[i] > cfg.geom.radius_nm))
        throw ConfigError(fmt::format("scenario.sweep.values[{}]", i),
                          fmt::format("distance {} nm must exceed the sphere radius {} nm", cfg.sweep->values[i],
                                      cfg.geom.radius_nm));
  if (cfg.kind == ScenarioKind::spectrum_scan && !cfg.sweep)
    throw ConfigError("scenario.sweep", "spectrum_scan needs a sweep");
  if (cfg.kind == ScenarioKind::steady_sweep && !cfg.sweep)
    throw ConfigError("scenario.sweep", "steady_sweep needs a sweep");

  Section output(child(doc, "output"), "output");
  cfg.out_dir = output.string("directory", cfg.out_dir.string());
  cfg.emit_plots = output.boolean("emit_plots", cfg.emit_plots);
  output.finish();
  return cfg;
}

namespace {

json scalar_to_json(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "~" || text == "null") return nullptr;
  long long i = 0;
  auto [pi, ei] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ei == std::errc() && pi == text.data() + text.size()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (ed == std::errc() && pd == text.data() + text.size()) return d;
  return text;
}

json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(node_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (out.contains(key)) throw ConfigError(key, "duplicate key");
        out[key] = node_to_json(kv.second);
      }
      return out;
    }
  }
  return nullptr;
}

}  // namespace

json yaml_to_json(const std::string& text) {
  try {
    return node_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("", fmt::format("YAML parse error at line {}: {}", e.mark.line + 1, e.msg));
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot read config file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  if (path.extension() == ".json") {
    try {
      doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw ConfigError("", fmt::format("JSON parse error: {}", e.what()));
    }
  } else {
    doc = yaml_to_json(buf.str());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json sweep = nullptr;
  if (c.sweep)
    sweep = {{"parameter", c.sweep->parameter == SweepParameter::distance_nm ? "distance_nm" : "count"},
             {"values", c.sweep->values}};
  return {
      {"name", c.name},
      {"metal",
       {{"hbar_omega_p_ev", c.metal.hbar_omega_p}, {"eps_inf", c.metal.eps_inf}, {"hbar_gamma_p_ev", c.metal.hbar_gamma_p}}},
      {"medium", {{"eps_d", c.geom.eps_d}}},
      {"sphere", {{"radius_nm", c.geom.radius_nm}}},
      {"emitters",
       {{"count", c.geom.n_emitters},
        {"distance_nm", c.geom.distance_nm},
        {"hbar_omega0_ev", c.geom.hbar_omega0},
        {"hbar_gamma0_ev", c.geom.hbar_gamma0}}},
      {"numerics",
       {{"n_max", c.numerics.n_max},
        {"omega_min_ev", c.numerics.grid.omega_min},
        {"omega_max_ev", c.numerics.grid.omega_max},
        {"omega_points", c.numerics.grid.n_points},
        {"t_max_fs", c.numerics.t_max_fs},
        {"dt_fs", c.numerics.dt_fs}}},
      {"scenario",
       {{"kind", scenario_name(c.kind)},
        {"initial", c.initial == InitialKind::w_state ? "w_state" : "single_excited"},
        {"sweep", sweep}}},
      {"output", {{"directory", c.out_dir.string()}, {"emit_plots", c.emit_plots}}},
  };
}

}  // namespace lspdyn::cli
