#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensf_da/assimilation.hpp"
#include "ensf_da/error.hpp"
#include "ensf_da/scenarios.hpp"

namespace ensf_da {

/// Invalid configuration. `field` is "section.key" when one is to blame and
/// `line` is 1-based (0 when the field is missing entirely).
class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::size_t line, std::string field, const std::string& message);

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Sectioned key=value text. '#' and ';' start comments; keys outside any
/// section belong to section "run".
class IniDocument {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static IniDocument parse(std::string_view text, std::string source = "<config>");
  static IniDocument load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  const Entry* find(const std::string& section, const std::string& key) const;
  /// All "section.key" names present, for rejecting unknown fields.
  std::vector<std::pair<std::string, Entry>> entries() const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

enum class ScenarioKind { example1, synthetic_fire, external };

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::example1;
  AssimilationConfig assim;
  std::uint64_t truth_seed = 7;
  std::filesystem::path out_dir = "out";
  /// When false the timing columns of the records CSV are written as 0 so
  /// that reruns are byte-identical.
  bool record_timing = true;
  /// Write per-step ensemble-mean perimeters as GeoJSON (perimeter states).
  bool write_geojson = true;

  Example1Params example1;
  SyntheticFireScenarioParams synthetic;
  ExternalScenarioParams external;

  std::vector<double> sweep_eps_alpha;
  std::vector<double> sweep_eps_beta;
  std::size_t bench_trials = 20;
};

std::string to_string(ScenarioKind k);

/// Builds and validates a RunConfig. Required: run.scenario, run.method,
/// run.ensemble_size, run.steps. Relative external paths resolve against
/// `base_dir`.
RunConfig parse_run_config(const IniDocument& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses a grid: "coarse" (0.01, 0.1, ..., 0.9, 0.99), "fine-alpha"
/// (0.80..1.00 step 0.01, capped at 0.99), "fine-beta" (0.01..0.20 step
/// 0.01), a comma list, or "start:step:stop" inclusive.
std::vector<double> parse_grid(const std::string& text);

/// Builds the scenario described by the config.
Scenario build_scenario(const RunConfig& cfg);

}  // namespace ensf_da
