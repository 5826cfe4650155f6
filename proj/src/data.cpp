#include "dhc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "dhc/csv.hpp"
#include "dhc/errors.hpp"
#include "dhc/format.hpp"
#include "dhc/interp.hpp"

namespace dhc {

double weather_trend(double hours_since_start, int days, const WeatherOptions& o) {
  const double span = 24.0 * days;
  return o.trend_start + (o.trend_end - o.trend_start) * hours_since_start / span;
}

WeatherSeries gen_weather(int days, std::uint64_t seed, const WeatherOptions& o) {
  if (days < 1) throw InvalidArgument("gen_weather: days must be >= 1");
  if (!(std::abs(o.noise_rho) < 1.0)) throw InvalidArgument("gen_weather: |rho| must be < 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int hours = 24 * days;
  const double innovation = o.noise_sigma * std::sqrt(1.0 - o.noise_rho * o.noise_rho);

  WeatherSeries w;
  w.timestamps.reserve(hours);
  w.t_out.reserve(hours);
  double residual = o.noise_sigma > 0.0 ? o.noise_sigma * unit(rng) : 0.0;
  for (int h = 0; h < hours; ++h) {
    if (h > 0 && o.noise_sigma > 0.0) residual = o.noise_rho * residual + innovation * unit(rng);
    const double hour_of_day = h % 24;
    const double daily = -o.daily_amplitude * std::cos(2.0 * std::numbers::pi * (hour_of_day - o.coldest_hour) / 24.0);
    w.timestamps.push_back(o.start + static_cast<Seconds>(h) * kSecondsPerHour);
    w.t_out.push_back(std::clamp(weather_trend(h, days, o) + daily + residual, -35.0, 18.0));
  }
  return w;
}

WeatherSeries slice_weather(const WeatherSeries& weather, int first_day, int days) {
  if (first_day < 0 || days < 1) throw InvalidArgument("slice_weather: bad day range");
  const std::size_t begin = static_cast<std::size_t>(first_day) * 24;
  const std::size_t end = begin + static_cast<std::size_t>(days) * 24;
  if (end > weather.size()) throw RangeError("slice_weather: range exceeds the series");
  WeatherSeries out;
  out.timestamps.assign(weather.timestamps.begin() + begin, weather.timestamps.begin() + end);
  out.t_out.assign(weather.t_out.begin() + begin, weather.t_out.begin() + end);
  return out;
}

Seconds Dataset::origin() const {
  if (rows.empty()) throw InvalidArgument("dataset is empty");
  return floor_div(rows.front().timestamp, kSecondsPerDay) * kSecondsPerDay;
}

int Dataset::day_of(std::size_t i) const {
  return static_cast<int>(floor_div(rows.at(i).timestamp - origin(), kSecondsPerDay));
}

int Dataset::day_count() const { return rows.empty() ? 0 : day_of(rows.size() - 1) + 1; }

std::vector<OperatingCondition> Dataset::conditions() const {
  std::vector<OperatingCondition> out;
  out.reserve(rows.size());
  for (const Sample& s : rows) out.push_back(s.condition());
  return out;
}

OperatorPolicy default_operator_policy(const PlantParams& plant, const StandardParams& standard,
                                       std::uint64_t seed) {
  return [plant, standard, seed](std::span<const OperatingCondition> conditions) {
    const auto manual = manual_baseline(conditions, plant, standard);
    return jitter_controls(manual, seed);
  };
}

Dataset gen_dataset(const PlantParams& plant, const StandardParams& standard, const WeatherSeries& weather,
                    const OperatorPolicy& policy, std::uint64_t seed, const DatasetOptions& options) {
  if (weather.size() < 2) throw InvalidArgument("gen_dataset: weather needs at least two hourly points");
  const auto step = static_cast<Seconds>(std::llround(options.interval_minutes * 60.0));
  if (step <= 0) throw InvalidArgument("gen_dataset: sampling interval must be positive");

  const Seconds start = weather.timestamps.front();
  const Seconds end = start + static_cast<Seconds>(weather.size()) * kSecondsPerHour;
  std::vector<double> knot_hours(weather.size());
  for (std::size_t i = 0; i < weather.size(); ++i)
    knot_hours[i] = static_cast<double>(weather.timestamps[i] - start) / kSecondsPerHour;

  std::vector<Seconds> times;
  std::vector<double> query_hours;
  for (Seconds t = start; t < end; t += step) {
    times.push_back(t);
    query_hours.push_back(std::min(static_cast<double>(t - start) / kSecondsPerHour, knot_hours.back()));
  }
  const std::vector<double> t_out = pchip(knot_hours, weather.t_out, query_hours);

  std::mt19937_64 master(seed);
  std::mt19937_64 supply_rng(master());
  std::mt19937_64 noise_rng(master());

  std::vector<OperatingCondition> conditions(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t1s = supply_temp_schedule(t_out[i], options.supply_noise_sigma > 0.0 ? &supply_rng : nullptr,
                                            options.supply_noise_sigma);
    conditions[i] = {times[i], t_out[i], t1s, target_heat(standard, t_out[i])};
  }
  const std::vector<Controls> controls = policy(conditions);
  if (controls.size() != conditions.size()) throw InvalidArgument("gen_dataset: policy returned wrong length");

  Dataset ds;
  ds.rows.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto& c = conditions[i];
    const double flow2 = pump_flow(controls[i].pump_f, plant.pump_poly);
    const PlantState st = plant_steady_state(plant, standard, c.t1_supply, controls[i].flow1, flow2, c.t_out,
                                             options.measurement_noise ? &noise_rng : nullptr);
    Sample s;
    s.timestamp = c.timestamp;
    s.t_out = c.t_out;
    s.t1_supply = st.t1_supply;
    s.flow1 = st.flow1;
    s.flow2 = st.flow2;
    s.pump_f = controls[i].pump_f;
    s.tdp = st.t1_supply - st.t1_return;
    s.tds = st.t2_supply - st.t2_return;
    s.swts = st.t2_supply;
    s.t2_return = st.t2_return;
    s.q1 = st.q1;
    s.q2 = st.q2;
    s.q_target = c.q_target;
    ds.rows.push_back(s);
  }
  return ds;
}

Dataset select_days(const Dataset& dataset, int first_day, int last_day) {
  Dataset out;
  if (dataset.empty()) return out;
  const Seconds origin = dataset.origin();
  for (const Sample& s : dataset.rows) {
    const auto day = floor_div(s.timestamp - origin, kSecondsPerDay);
    if (day >= first_day && day <= last_day) out.rows.push_back(s);
  }
  return out;
}

TrainTestSplit split_7_1(const Dataset& dataset) {
  if (dataset.day_count() < 8) throw RangeError("split_7_1: dataset covers fewer than 8 days");
  TrainTestSplit split;
  const Seconds origin = dataset.origin();
  for (const Sample& s : dataset.rows) {
    const auto day = floor_div(s.timestamp - origin, kSecondsPerDay);
    (day % 8 == 7 ? split.test : split.train).rows.push_back(s);
  }
  return split;
}

std::vector<RollingWindow> rolling_windows(const Dataset& dataset, int window_days) {
  if (window_days < 1) throw InvalidArgument("rolling_windows: window must be >= 1 day");
  const int days = dataset.day_count();
  if (days < window_days + 1) throw RangeError("rolling_windows: dataset shorter than one window plus a test day");
  std::vector<RollingWindow> windows;
  for (int d = 0; d + window_days < days; ++d) {
    RollingWindow w;
    w.first_train_day = d;
    w.test_day = d + window_days;
    w.train = select_days(dataset, d, d + window_days - 1);
    w.test = select_days(dataset, w.test_day, w.test_day);
    windows.push_back(std::move(w));
  }
  return windows;
}

const std::vector<std::string>& sample_columns() {
  static const std::vector<std::string> columns{"timestamp", "t_out", "t1_supply", "flow1", "flow2",
                                                "pump_f",    "tdp",   "tds",       "swts",  "t2_return",
                                                "q1",        "q2",    "q_target"};
  return columns;
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << join_csv(sample_columns()) << '\n';
  for (const Sample& s : dataset.rows) {
    out << format_iso8601(s.timestamp);
    for (double v : {s.t_out, s.t1_supply, s.flow1, s.flow2, s.pump_f, s.tdp, s.tds, s.swts, s.t2_return, s.q1, s.q2,
                     s.q_target})
      out << ',' << format_double(v);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  std::vector<std::size_t> idx;
  for (const auto& name : sample_columns()) idx.push_back(table.column(name));
  Dataset ds;
  ds.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Sample s;
    s.timestamp = parse_iso8601(row[idx[0]]);
    double* fields[] = {&s.t_out, &s.t1_supply, &s.flow1, &s.flow2, &s.pump_f, &s.tdp,
                        &s.tds,   &s.swts,      &s.t2_return, &s.q1, &s.q2,    &s.q_target};
    for (std::size_t k = 0; k < 12; ++k) *fields[k] = parse_double(row[idx[k + 1]]);
    if (!ds.rows.empty() && s.timestamp <= ds.rows.back().timestamp)
      throw SchemaError("dataset rows must be in strictly increasing time order");
    ds.rows.push_back(s);
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_dataset_csv(out, dataset);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_dataset_csv(in);
}

void write_weather_csv(std::ostream& out, const WeatherSeries& weather) {
  out << "timestamp,t_out\n";
  for (std::size_t i = 0; i < weather.size(); ++i)
    out << format_iso8601(weather.timestamps[i]) << ',' << format_double(weather.t_out[i]) << '\n';
}

WeatherSeries read_weather_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const auto ts = table.column("timestamp");
  const auto t = table.column("t_out");
  WeatherSeries w;
  for (const auto& row : table.rows) {
    w.timestamps.push_back(parse_iso8601(row[ts]));
    w.t_out.push_back(parse_double(row[t]));
  }
  return w;
}

}  // namespace dhc
