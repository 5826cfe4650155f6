#pragma once

// Synthetic weather, operating records and the day-based train/test schedules.

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dhc/controls.hpp"
#include "dhc/plant.hpp"
#include "dhc/timeutil.hpp"

namespace dhc {

struct WeatherSeries {
  std::vector<Seconds> timestamps;
  std::vector<double> t_out;

  std::size_t size() const { return timestamps.size(); }
};

struct WeatherOptions {
  Seconds start = kDefaultSeasonStart;
  double trend_start = -18.0;
  double trend_end = 5.0;
  double daily_amplitude = 4.0;
  double coldest_hour = 5.0;
  double noise_sigma = 1.5;  // stationary std of the AR(1) residual
  double noise_rho = 0.9;
};

// Hourly outdoor temperature over `days` days: linear seasonal trend, daily
// cosine with its minimum at coldest_hour, stationary AR(1) noise, clamped to
// [-35, 18].
WeatherSeries gen_weather(int days, std::uint64_t seed, const WeatherOptions& options = {});

// Hourly points of days [first_day, first_day + days) of a longer series.
WeatherSeries slice_weather(const WeatherSeries& weather, int first_day, int days);

// Seasonal trend component alone (degC) at a time offset in hours.
double weather_trend(double hours_since_start, int days, const WeatherOptions& options = {});

struct Sample {
  Seconds timestamp = 0;
  double t_out = 0.0;
  double t1_supply = 0.0;
  double flow1 = 0.0;
  double flow2 = 0.0;
  double pump_f = 0.0;
  double tdp = 0.0;
  double tds = 0.0;
  double swts = 0.0;
  double t2_return = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q_target = 0.0;

  OperatingCondition condition() const { return {timestamp, t_out, t1_supply, q_target}; }
};

struct Dataset {
  std::vector<Sample> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  const Sample& operator[](std::size_t i) const { return rows[i]; }

  // Midnight of the first sample's day.
  Seconds origin() const;
  // Day index of row i relative to origin().
  int day_of(std::size_t i) const;
  int day_count() const;
  std::vector<OperatingCondition> conditions() const;
};

using OperatorPolicy = std::function<std::vector<Controls>(std::span<const OperatingCondition>)>;

// Manual operator trace plus seeded jitter.
OperatorPolicy default_operator_policy(const PlantParams& plant, const StandardParams& standard, std::uint64_t seed);

struct DatasetOptions {
  double interval_minutes = 30.0;
  bool measurement_noise = true;
  double supply_noise_sigma = 2.0;
};

// One record per sampling instant from the weather start to the end of the
// last weather day. Outdoor temperature comes from pchip over the hourly
// series (queries beyond the last hourly knot hold its value), supply
// temperature from the heat curve, controls from the policy, and everything
// else from the plant.
Dataset gen_dataset(const PlantParams& plant, const StandardParams& standard, const WeatherSeries& weather,
                    const OperatorPolicy& policy, std::uint64_t seed, const DatasetOptions& options = {});

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Repeating 8-day pattern: days 0-6 train, day 7 test, and so on.
TrainTestSplit split_7_1(const Dataset& dataset);

struct RollingWindow {
  int first_train_day = 0;
  int test_day = 0;
  Dataset train;
  Dataset test;
};

// Windows train on days [d, d + window_days - 1] and test on day d + window_days.
std::vector<RollingWindow> rolling_windows(const Dataset& dataset, int window_days = 7);

Dataset select_days(const Dataset& dataset, int first_day, int last_day);

const std::vector<std::string>& sample_columns();
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_csv(std::istream& in);
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

void write_weather_csv(std::ostream& out, const WeatherSeries& weather);
WeatherSeries read_weather_csv(std::istream& in);

}  // namespace dhc
