#include "dhc/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidArgument("not a boolean: '" + v + "'");
}

int parse_count(const std::string& v, int min) {
  const long long n = parse_int(v);
  if (n < min || n > 1'000'000'000) throw InvalidArgument("out of range: '" + v + "'");
  return static_cast<int>(n);
}

double parse_positive(const std::string& v) {
  const double x = parse_double(v);
  if (!(x > 0.0)) throw InvalidArgument("must be positive: '" + v + "'");
  return x;
}

}  // namespace

void apply_run_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  const auto dot = key.find('.');
  const std::string group = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
  try {
    if (group == "agent") {
      apply_agent_setting(c.agent, name, value);
    } else if (group == "plant") {
      apply_plant_setting(c.plant, name, parse_double(value));
    } else if (group == "standard") {
      apply_standard_setting(c.standard, name, parse_double(value));
    } else if (key == "seed") {
      const long long s = parse_int(value);
      if (s < 0) throw InvalidArgument("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "days") {
      c.days = parse_count(value, 1);
    } else if (key == "interval_minutes") {
      c.interval_minutes = parse_positive(value);
    } else if (key == "measurement_noise") {
      c.measurement_noise = parse_bool(value);
    } else if (key == "surrogate.layers") {
      c.surrogate_arch.layers = parse_count(value, 0);
    } else if (key == "surrogate.nodes") {
      c.surrogate_arch.nodes = parse_count(value, 1);
    } else if (key == "surrogate.steps") {
      c.surrogate_steps = parse_count(value, 1);
    } else if (key == "sweep.steps") {
      c.sweep_steps = parse_count(value, 1);
    } else if (key == "sweep.budget") {
      c.sweep_budget = parse_positive(value);
    } else if (key == "sweep.timing") {
      if (value == "cost") c.sweep_timing = SweepTiming::cost_model;
      else if (value == "wall") c.sweep_timing = SweepTiming::wall_clock;
      else throw InvalidArgument("expected cost or wall, got '" + value + "'");
    } else if (key == "sweep.grid") {
      // 2x50,3x100
      c.sweep_grid.clear();
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const auto comma = std::min(value.find(',', pos), value.size());
        const std::string item = trim(value.substr(pos, comma - pos));
        const auto x = item.find('x');
        if (x == std::string::npos) throw InvalidArgument("expected LAYERSxNODES, got '" + item + "'");
        c.sweep_grid.push_back({parse_count(item.substr(0, x), 0), parse_count(item.substr(x + 1), 1)});
        pos = comma + 1;
      }
    } else if (key == "sl.tolerance") {
      c.sl_tolerance = parse_double(value);
      if (!(c.sl_tolerance >= 0.0)) throw InvalidArgument("must be >= 0");
    } else if (key == "sl.layers") {
      c.sl.arch.layers = parse_count(value, 0);
    } else if (key == "sl.nodes") {
      c.sl.arch.nodes = parse_count(value, 1);
    } else if (key == "sl.steps") {
      c.sl.steps = parse_count(value, 1);
    } else if (key == "env.reward") {
      c.env.reward_kind = reward_kind_from_string(value);
    } else if (key == "env.episode_len") {
      c.env.episode_len = parse_count(value, 1);
    } else if (key == "env.backend") {
      c.env.backend = backend_kind_from_string(value);
    } else if (key == "env.normalize") {
      c.env.normalize_observations = parse_bool(value);
    } else if (key == "rolling.steps") {
      c.rolling_steps = parse_count(value, 1);
    } else if (key == "rolling.fresh") {
      c.rolling_fresh = parse_bool(value);
    } else if (key == "rolling.windows") {
      c.rolling_windows = parse_count(value, 0);
    } else if (key == "pid.kp") {
      c.pid.kp = parse_double(value);
    } else if (key == "pid.ki") {
      c.pid.ki = parse_double(value);
    } else if (key == "pid.kd") {
      c.pid.kd = parse_double(value);
    } else if (key == "balance.steps") {
      c.balance_steps = parse_count(value, 1);
    } else if (key == "histogram_bins") {
      c.histogram_bins = parse_count(value, 1);
    } else {
      throw ConfigError("unknown setting '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("setting '" + key + "': " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

void read_run_config(std::istream& in, RunConfig& config) {
  for (const auto& [k, v] : parse_key_values(in)) apply_run_setting(config, k, v);
}

void read_run_config_file(const std::string& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  read_run_config(in, config);
}

}  // namespace dhc
