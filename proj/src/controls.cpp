#include "dhc/controls.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "dhc/errors.hpp"

namespace dhc {

namespace {

Controls controls_for_level(double level) { return {55.0 + 45.0 * level, 35.0 + 15.0 * level}; }

double delivered_heat(const OperatingCondition& c, double level, const PlantParams& plant,
                      const StandardParams& standard) {
  const Controls ctl = controls_for_level(level);
  return plant_steady_state(plant, standard, c.t1_supply, ctl.flow1, pump_flow(ctl.pump_f, plant.pump_poly), c.t_out)
      .q2;
}

}  // namespace

std::vector<Controls> manual_baseline(std::span<const OperatingCondition> conditions, const PlantParams& plant,
                                      const StandardParams& standard, const ManualOptions& options) {
  if (options.days_per_reset < 1) throw InvalidArgument("manual_baseline: days_per_reset must be >= 1");
  std::vector<Controls> out(conditions.size());
  if (conditions.empty()) return out;

  const Seconds origin = floor_div(conditions.front().timestamp, kSecondsPerDay) * kSecondsPerDay;
  const Seconds block = options.days_per_reset * kSecondsPerDay;
  std::map<Seconds, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < conditions.size(); ++i)
    blocks[floor_div(conditions[i].timestamp - origin, block)].push_back(i);

  for (const auto& [index, members] : blocks) {
    const std::size_t coldest = *std::max_element(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return conditions[a].q_target < conditions[b].q_target;
    });
    const OperatingCondition& c = conditions[coldest];
    double lo = -1.0, hi = 1.0;
    if (delivered_heat(c, hi, plant, standard) <= c.q_target) {
      lo = hi;
    } else if (delivered_heat(c, lo, plant, standard) >= c.q_target) {
      hi = lo;
    } else {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (delivered_heat(c, mid, plant, standard) < c.q_target ? lo : hi) = mid;
      }
    }
    const Controls setting = controls_for_level(hi);
    for (std::size_t i : members) out[i] = setting;
  }
  return out;
}

std::vector<Controls> jitter_controls(std::span<const Controls> base, std::uint64_t seed,
                                      const JitterOptions& options) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Controls> out;
  out.reserve(base.size());
  for (const Controls& c : base) {
    const double df = options.flow1_sigma * unit(rng);
    const double dp = options.pump_sigma * unit(rng);
    out.push_back({std::clamp(c.flow1 + df, kFlow1Min, kFlow1Max), std::clamp(c.pump_f + dp, kPumpMinHz, kPumpMaxHz)});
  }
  return out;
}

}  // namespace dhc
