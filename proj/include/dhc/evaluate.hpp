#pragma once

// Running controllers over a dataset, and the rolling 7-day-train / 1-day-test
// schedule.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "dhc/agent.hpp"
#include "dhc/controls.hpp"
#include "dhc/data.hpp"
#include "dhc/env.hpp"
#include "dhc/metrics.hpp"

namespace dhc {

// One control setting per dataset row.
std::vector<Controls> agent_controls(const DdpgAgent& agent, const Dataset& ds);
std::vector<Controls> sl_controller_controls(const SlController& sl, const Dataset& ds);
std::vector<Controls> manual_controls(const Dataset& ds, const PlantParams& plant, const StandardParams& standard);
std::vector<Controls> fixed_controls(const Dataset& ds, const Controls& c = {});

// Applies controls row by row and records what the backend delivers.
ControlTrace evaluate_controls(const Dataset& ds, std::span<const Controls> controls, HeatBackend& backend);

struct RollingOptions {
  AgentConfig agent;
  EnvConfig env;
  long steps_per_window = 20000;
  bool warm_start = true;  // start each window from the previous window's agent
  int max_windows = 0;     // 0: every window the data allows
  int window_days = 7;
};

struct RollingPoint {
  int window = 0;
  int first_train_day = 0;
  int test_day = 0;
  double ar = 0.0;
};

// Window k trains on days [k, k+6] and is scored by AR on day k+7. Episodes
// are shortened to the window's row count when the configured length does not fit.
std::vector<RollingPoint> run_rolling(const Dataset& ds, const RollingOptions& options, std::uint64_t seed,
                                      const std::shared_ptr<HeatBackend>& backend,
                                      const std::function<void(const RollingPoint&)>& progress = {});

void write_rolling_csv(std::ostream& out, std::span<const RollingPoint> points);

}  // namespace dhc
