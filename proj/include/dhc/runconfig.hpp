#pragma once

// Every knob a pipeline stage reads, settable from a `key = value` file and
// from command-line flags (flags win). Unknown keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dhc/agent.hpp"
#include "dhc/balance.hpp"
#include "dhc/env.hpp"
#include "dhc/plant.hpp"
#include "dhc/regressor.hpp"
#include "dhc/surrogate.hpp"

namespace dhc {

struct RunConfig {
  std::uint64_t seed = 1;

  // gen-data
  int days = 96;
  double interval_minutes = 30.0;
  bool measurement_noise = true;
  PlantParams plant;
  StandardParams standard;

  // fit-surrogate / sweep-arch
  Architecture surrogate_arch{4, 64};
  int surrogate_steps = 20000;
  int sweep_steps = 2000;
  double sweep_budget = 1.5;
  SweepTiming sweep_timing = SweepTiming::cost_model;
  std::vector<Architecture> sweep_grid;  // empty: default grid

  // train / eval
  EnvConfig env;
  AgentConfig agent;
  double sl_tolerance = 0.0;  // 0: 5% of the mean target heat
  SlOptions sl;
  int histogram_bins = 20;

  // rolling
  long rolling_steps = 20000;
  bool rolling_fresh = false;
  int rolling_windows = 0;

  // balance-sim
  PidGains pid;
  int balance_steps = 400;
};

// Keys: seed, days, interval_minutes, measurement_noise, surrogate.{layers,
// nodes,steps}, sweep.{steps,budget,timing,grid}, sl.{tolerance,layers,nodes,steps},
// env.{reward,episode_len,backend,normalize}, rolling.{steps,fresh,windows},
// pid.{kp,ki,kd}, balance.steps, histogram_bins, and the prefixed groups
// plant.*, standard.*, agent.*.
void apply_run_setting(RunConfig& config, const std::string& key, const std::string& value);

// `key = value` lines; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);
void read_run_config(std::istream& in, RunConfig& config);
void read_run_config_file(const std::string& path, RunConfig& config);

}  // namespace dhc
