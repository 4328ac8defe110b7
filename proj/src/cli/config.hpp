#pragma once

// Run configuration: schema, defaults and strict loading from YAML or JSON.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lspdyn/dynamics.hpp"

namespace lspdyn::cli {

/// Schema violation; `key_path` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message);
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

enum class ScenarioKind { dynamics, spectrum_scan, spectral_density, steady_sweep };

std::string_view scenario_name(ScenarioKind kind);

enum class SweepParameter { distance_nm, count };

struct Sweep {
  SweepParameter parameter = SweepParameter::distance_nm;
  std::vector<double> values;
};

struct Numerics {
  int n_max = 30;
  FrequencyGrid grid;
  double t_max_fs = 2500.0;
  double dt_fs = 0.001;
};

struct RunConfig {
  std::string name = "run";  ///< file prefix
  DrudeMetal metal;
  SystemGeometry geom;
  Numerics numerics;
  ScenarioKind kind = ScenarioKind::dynamics;
  InitialKind initial = InitialKind::single_excited;
  std::optional<Sweep> sweep;
  std::filesystem::path out_dir = "out";
  bool emit_plots = false;
  std::vector<std::string> notes;  ///< defaults worth telling the user about

  /// Geometry for one sweep value (the base geometry without a sweep).
  SystemGeometry geometry_at(double sweep_value) const;
  /// Sweep values, or an empty list meaning "the base geometry only".
  std::vector<double> points() const;
};

/// Validates a parsed document against the schema and fills defaults.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads YAML (any extension) or JSON (.json) from disk.
RunConfig load_config(const std::filesystem::path& path);

/// YAML text to a JSON document; scalars become bool, integer, number or string.
nlohmann::json yaml_to_json(const std::string& text);

/// Fully resolved configuration, the form embedded in every output file.
nlohmann::json to_json(const RunConfig& config);

}  // namespace lspdyn::cli
