#pragma once

// Evaluation metrics over control traces: cumulative and average heat error,
// water/heat totals, ratios against a baseline, error histograms, and the
// long-format report CSV (controller,metric,value).

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dhc/timeutil.hpp"

namespace dhc {

// What a controller did over a dataset and what the plant (or surrogate) made of it.
struct ControlTrace {
  std::vector<Seconds> timestamp;
  std::vector<double> flow1;  // t/h
  std::vector<double> flow2;  // t/h
  std::vector<double> pump_f;
  std::vector<double> q1;  // GJ/h
  std::vector<double> q2;
  std::vector<double> q_target;

  std::size_t size() const { return timestamp.size(); }
  void validate() const;
};

// timestamp,flow1,flow2,pump_f,q1,q2,q_target
void write_control_trace_csv(std::ostream& out, const ControlTrace& trace);

// sum |q - q_target|
double cumulative_error(std::span<const double> qs, std::span<const double> q_targets);
// sum (|q1 - qt| + |q2 - qt|) / 2M
double average_reward(std::span<const double> q1s, std::span<const double> q2s, std::span<const double> q_targets);

struct Consumption {
  double water1 = 0.0;  // t
  double water2 = 0.0;
  double heat1 = 0.0;  // GJ
  double heat2 = 0.0;

  bool operator==(const Consumption&) const = default;
};

// Sampling interval of a trace in hours: the median gap between consecutive
// timestamps, so the jumps between non-adjacent test days do not count.
double sample_hours(std::span<const Seconds> timestamps);

Consumption consumption_totals(const ControlTrace& trace);
// Per-side ratios trace / baseline; throws NumericError on a zero baseline total.
Consumption normalize_vs(const ControlTrace& trace, const ControlTrace& baseline);
Consumption normalize_vs(const Consumption& totals, const Consumption& baseline);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<long> counts;

  long total() const;
  // index of the bin containing x (right edge closed for the last bin), -1 outside
  int bin_of(double x) const;

  bool operator==(const Histogram&) const = default;
};

// Signed errors q - q_target binned uniformly over [min, max]. A degenerate
// range is widened to +-0.5 around its value.
Histogram error_histogram(std::span<const double> qs, std::span<const double> q_targets, int bins);

struct MetricsReport {
  std::string controller;
  long samples = 0;
  double ce1 = 0.0;
  double ce2 = 0.0;
  double ar = 0.0;
  Consumption totals;
  std::optional<Consumption> normalized;  // vs the baseline, when one was given
  Histogram histogram;                    // secondary-side errors

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport make_report(const std::string& controller, const ControlTrace& trace,
                          const ControlTrace* baseline = nullptr, int bins = 20);

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports);
std::vector<MetricsReport> read_metrics_csv(std::istream& in);

// Readable side-by-side table of the headline numbers.
void print_report_table(std::ostream& out, std::span<const MetricsReport> reports);

}  // namespace dhc
