#pragma once

// Control settings at the heat-exchange station and the operator ("manual")
// baseline that sets them.

#include <cstdint>
#include <span>
#include <vector>

#include "dhc/plant.hpp"
#include "dhc/timeutil.hpp"

namespace dhc {

inline constexpr double kFlow1Min = 10.0;
inline constexpr double kFlow1Max = 100.0;

struct Controls {
  double flow1 = 55.0;   // t/h, primary side
  double pump_f = 35.0;  // Hz, secondary circulating pump
};

// Exogenous conditions at one sampling instant.
struct OperatingCondition {
  Seconds timestamp = 0;
  double t_out = 0.0;
  double t1_supply = 0.0;
  double q_target = 0.0;
};

struct ManualOptions {
  int days_per_reset = 7;
};

// Operator reconstruction: once per block of days_per_reset days (counted from
// the first sample's midnight) the operator moves valve and pump together to
// the lowest common setting whose delivered (secondary) heat covers the
// block's coldest-hour demand, and leaves it there for the whole block.
std::vector<Controls> manual_baseline(std::span<const OperatingCondition> conditions, const PlantParams& plant,
                                      const StandardParams& standard, const ManualOptions& options = {});

struct JitterOptions {
  double flow1_sigma = 15.0;
  double pump_sigma = 5.0;
};

// Seeded perturbation of an operator trace so that recorded data covers more
// of the control box. Results are clipped to [10, 100] t/h and [20, 50] Hz.
std::vector<Controls> jitter_controls(std::span<const Controls> base, std::uint64_t seed,
                                      const JitterOptions& options = {});

}  // namespace dhc
