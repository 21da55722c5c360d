#include "ensf_da/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ensf_da {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

/// Typed access to an IniDocument that remembers which fields were read.
class Reader {
 public:
  explicit Reader(const IniDocument& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    const auto* e = doc_.find(section, key);
    throw ConfigError(doc_.source(), e ? e->line : 0, section + "." + key, msg);
  }

  const IniDocument::Entry* get(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return doc_.find(section, key);
  }

  std::string require_string(const std::string& section, const std::string& key) {
    const auto* e = get(section, key);
    if (!e) fail(section, key, "missing required field");
    return e->value;
  }

  std::string string_or(const std::string& section, const std::string& key, std::string fallback) {
    const auto* e = get(section, key);
    return e ? e->value : fallback;
  }

  double real_or(const std::string& section, const std::string& key, double fallback) {
    const auto* e = get(section, key);
    if (!e) return fallback;
    return to_real(section, key, e->value);
  }

  template <typename T>
  T integer_or(const std::string& section, const std::string& key, T fallback) {
    const auto* e = get(section, key);
    if (!e) return fallback;
    return to_integer<T>(section, key, e->value);
  }

  template <typename T>
  T require_integer(const std::string& section, const std::string& key) {
    return to_integer<T>(section, key, require_string(section, key));
  }

  bool bool_or(const std::string& section, const std::string& key, bool fallback) {
    const auto* e = get(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    fail(section, key, "expected true or false, got '" + e->value + "'");
  }

  void reject_unknown() const {
    for (const auto& [name, entry] : doc_.entries())
      if (!used_.count(name)) throw ConfigError(doc_.source(), entry.line, name, "unknown field");
  }

 private:
  double to_real(const std::string& section, const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
      fail(section, key, "expected a finite number, got '" + text + "'");
    return v;
  }

  template <typename T>
  T to_integer(const std::string& section, const std::string& key, const std::string& text) const {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail(section, key, "expected a nonnegative integer, got '" + text + "'");
    return v;
  }

  const IniDocument& doc_;
  std::set<std::string> used_;
};

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line, std::string field, const std::string& message)
    : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
            (field.empty() ? std::string() : "field '" + field + "': ") + message),
      line_(line),
      field_(std::move(field)) {}

IniDocument IniDocument::parse(std::string_view text, std::string source) {
  IniDocument doc;
  doc.source_ = std::move(source);
  std::string section = "run";
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = raw;
    if (const auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(doc.source_, line_no, "", "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(doc.source_, line_no, "", "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(doc.source_, line_no, "", "empty key");
    auto& slot = doc.sections_[section];
    if (slot.count(key)) throw ConfigError(doc.source_, line_no, section + "." + key, "duplicate field");
    slot[key] = {value, line_no};
  }
  return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const IniDocument::Entry* IniDocument::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto e = s->second.find(key);
  return e == s->second.end() ? nullptr : &e->second;
}

std::vector<std::pair<std::string, IniDocument::Entry>> IniDocument::entries() const {
  std::vector<std::pair<std::string, Entry>> out;
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, entry] : keys) out.emplace_back(section + "." + key, entry);
  return out;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::example1: return "example1";
    case ScenarioKind::synthetic_fire: return "synthetic-fire";
    case ScenarioKind::external: return "external";
  }
  return "unknown";
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  auto steps = [&](int first, int last, double scale) {
    for (int i = first; i <= last; ++i) out.push_back(static_cast<double>(i) * scale);
  };
  if (t == "coarse") {
    out.push_back(0.01);
    steps(1, 9, 0.1);
    out.push_back(0.99);
    return out;
  }
  if (t == "fine-alpha") {
    steps(80, 99, 0.01);
    return out;
  }
  if (t == "fine-beta") {
    steps(1, 20, 0.01);
    return out;
  }

  auto number = [](const std::string& s) {
    const std::string v = trim(s);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
      throw std::invalid_argument("grid value '" + v + "' is not a finite number");
    return x;
  };

  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::istringstream in(t);
    for (std::string piece; std::getline(in, piece, ':');) parts.push_back(number(piece));
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0])
      throw std::invalid_argument("grid range must be start:step:stop with step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
    return out;
  }

  std::istringstream in(t);
  for (std::string piece; std::getline(in, piece, ',');) out.push_back(number(piece));
  if (out.empty()) throw std::invalid_argument("grid is empty");
  return out;
}

RunConfig parse_run_config(const IniDocument& doc, const std::filesystem::path& base_dir) {
  Reader r(doc);
  RunConfig cfg;

  const std::string scenario = r.require_string("run", "scenario");
  if (scenario == "example1") cfg.scenario = ScenarioKind::example1;
  else if (scenario == "synthetic-fire") cfg.scenario = ScenarioKind::synthetic_fire;
  else if (scenario == "external") cfg.scenario = ScenarioKind::external;
  else r.fail("run", "scenario", "expected example1, synthetic-fire or external, got '" + scenario + "'");

  try {
    cfg.assim.method = parse_method(r.require_string("run", "method"));
  } catch (const std::invalid_argument& e) {
    r.fail("run", "method", e.what());
  }
  cfg.assim.ensemble_size = r.require_integer<std::size_t>("run", "ensemble_size");
  if (cfg.assim.ensemble_size < 2) r.fail("run", "ensemble_size", "must be at least 2");
  cfg.assim.steps = r.require_integer<std::size_t>("run", "steps");
  if (cfg.assim.steps < 1) r.fail("run", "steps", "must be at least 1");
  cfg.assim.rng_seed = r.integer_or<std::uint64_t>("run", "seed", 0);
  cfg.truth_seed = r.integer_or<std::uint64_t>("run", "truth_seed", 7);
  cfg.assim.threads = r.integer_or<unsigned>("run", "threads", 1);
  cfg.out_dir = r.string_or("run", "out_dir", "out");
  cfg.record_timing = r.bool_or("run", "record_timing", true);
  cfg.write_geojson = r.bool_or("run", "write_geojson", true);
  cfg.assim.drop_failed_members = r.bool_or("run", "drop_failed_members", true);

  const double eps_alpha = r.real_or("ensf", "eps_alpha", 0.96);
  const double eps_beta = r.real_or("ensf", "eps_beta", 0.03);
  try {
    cfg.assim.ensf.schedule = NoiseSchedule(eps_alpha, eps_beta);
  } catch (const std::invalid_argument& e) {
    r.fail("ensf", eps_alpha > 0.0 && eps_alpha < 1.0 ? "eps_beta" : "eps_alpha", e.what());
  }
  cfg.assim.ensf.n_reverse_steps = r.integer_or<std::size_t>("ensf", "reverse_steps", 100);
  if (cfg.assim.ensf.n_reverse_steps < 1) r.fail("ensf", "reverse_steps", "must be at least 1");

  // Scenario-specific defaults for the observation model.
  double default_c = 1.0;
  double default_sigma = 0.1;
  if (cfg.scenario == ScenarioKind::example1) default_c = 0.25;
  const double c = r.real_or("observation", "c", default_c);
  const double sigma_obs = r.real_or("observation", "sigma_obs", default_sigma);
  if (!(sigma_obs > 0.0)) r.fail("observation", "sigma_obs", "must be positive");
  if (cfg.scenario != ScenarioKind::example1 && c != 1.0)
    r.fail("observation", "c", "perimeter scenarios observe vertices directly and require c = 1");
  cfg.assim.obs = ObservationModel::scaled_identity(c, sigma_obs);

  auto& e1 = cfg.example1;
  e1.dim = r.integer_or<std::size_t>("example1", "dim", e1.dim);
  if (e1.dim < 2 || e1.dim % 2 != 0) r.fail("example1", "dim", "must be an even number >= 2");
  e1.delta_k = r.real_or("example1", "delta_k", e1.delta_k);
  if (!(e1.delta_k > 0.0)) r.fail("example1", "delta_k", "must be positive");
  e1.sigma_sde = r.real_or("example1", "sigma_sde", e1.sigma_sde);
  if (!(e1.sigma_sde >= 0.0)) r.fail("example1", "sigma_sde", "must be nonnegative");
  e1.drift = r.real_or("example1", "drift", e1.drift);
  e1.c = c;
  e1.sigma_obs = sigma_obs;

  auto& sf = cfg.synthetic;
  sf.center_lon = r.real_or("synthetic", "center_lon", sf.center_lon);
  sf.center_lat = r.real_or("synthetic", "center_lat", sf.center_lat);
  sf.radius = r.real_or("synthetic", "radius", sf.radius);
  if (!(sf.radius > 0.0)) r.fail("synthetic", "radius", "must be positive");
  sf.vertices = r.integer_or<std::size_t>("synthetic", "vertices", sf.vertices);
  if (sf.vertices < 3) r.fail("synthetic", "vertices", "must be at least 3");
  sf.growth = r.real_or("synthetic", "growth", sf.growth);
  if (!(sf.growth >= 0.0)) r.fail("synthetic", "growth", "must be nonnegative");
  sf.jitter = r.real_or("synthetic", "jitter", sf.jitter);
  if (!(sf.jitter >= 0.0 && sf.jitter <= 1.0)) r.fail("synthetic", "jitter", "must lie in [0, 1]");
  sf.initial_spread = r.real_or("synthetic", "initial_spread", sf.initial_spread);
  sf.obs_vertices = r.integer_or<std::size_t>("synthetic", "obs_vertices", sf.obs_vertices);
  if (sf.obs_vertices != 0 && sf.obs_vertices < 3) r.fail("synthetic", "obs_vertices", "must be 0 or >= 3");
  sf.delta_k = r.real_or("synthetic", "delta_k", sf.delta_k);
  if (!(sf.delta_k > 0.0)) r.fail("synthetic", "delta_k", "must be positive");
  sf.sigma_sde = r.real_or("synthetic", "sigma_sde", sf.sigma_sde);
  if (!(sf.sigma_sde >= 0.0)) r.fail("synthetic", "sigma_sde", "must be nonnegative");
  sf.sigma_obs = sigma_obs;

  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  auto& ex = cfg.external;
  if (cfg.scenario == ScenarioKind::external) {
    ex.model.launch = r.require_string("external", "command");
    ex.initial = resolve(r.require_string("external", "initial"));
    ex.observations = resolve(r.require_string("external", "observations"));
  }
  ex.model.workdir = resolve(r.string_or("external", "workdir", (cfg.out_dir / "external").string()));
  const double timeout_s = r.real_or("external", "timeout_s", 60.0);
  if (!(timeout_s > 0.0)) r.fail("external", "timeout_s", "must be positive");
  ex.model.timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil(timeout_s * 1000.0)));
  ex.model.delta_days = r.real_or("external", "delta_days", 1.0);
  ex.max_processes = r.integer_or<unsigned>("external", "max_processes", 4);
  ex.initial_spread = r.real_or("external", "initial_spread", 0.0);

  for (const char* key : {"eps_alpha", "eps_beta"}) {
    const auto* e = r.get("sweep", key);
    std::vector<double> grid;
    try {
      grid = parse_grid(e ? e->value : "coarse");
    } catch (const std::invalid_argument& err) {
      r.fail("sweep", key, err.what());
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0 && grid[i] < 1.0)) r.fail("sweep", key, "grid values must lie in (0, 1)");
      if (i > 0 && !(grid[i] > grid[i - 1])) r.fail("sweep", key, "grid values must be strictly increasing");
    }
    (std::string(key) == "eps_alpha" ? cfg.sweep_eps_alpha : cfg.sweep_eps_beta) = std::move(grid);
  }

  cfg.bench_trials = r.integer_or<std::size_t>("bench", "trials", 20);

  r.reject_unknown();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(IniDocument::load(path), path.parent_path());
}

Scenario build_scenario(const RunConfig& cfg) {
  const auto n = cfg.assim.ensemble_size;
  const auto k = cfg.assim.steps;
  switch (cfg.scenario) {
    case ScenarioKind::example1: return make_example1(cfg.example1, n, k, cfg.truth_seed, cfg.assim.rng_seed);
    case ScenarioKind::synthetic_fire:
      return make_synthetic_fire(cfg.synthetic, n, k, cfg.truth_seed, cfg.assim.rng_seed);
    case ScenarioKind::external: return make_external(cfg.external, n, k, cfg.assim.rng_seed);
  }
  throw std::invalid_argument("unknown scenario");
}

}  // namespace ensf_da
