#include "dhc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "dhc/csv.hpp"
#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
  if (a == 0) throw InvalidArgument(std::string(what) + ": empty input");
}

double ratio(double num, double den, const char* what) {
  if (!(std::abs(den) > 0.0)) throw NumericError(std::string("normalize_vs: baseline ") + what + " is zero");
  return num / den;
}

}  // namespace

void ControlTrace::validate() const {
  const std::size_t n = timestamp.size();
  for (const auto* v : {&flow1, &flow2, &pump_f, &q1, &q2, &q_target})
    if (v->size() != n) throw ShapeError("ControlTrace: columns differ in length");
  if (n == 0) throw InvalidArgument("ControlTrace: empty trace");
}

void write_control_trace_csv(std::ostream& out, const ControlTrace& t) {
  t.validate();
  out << "timestamp,flow1,flow2,pump_f,q1,q2,q_target\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out << format_iso8601(t.timestamp[i]) << ',' << format_double(t.flow1[i]) << ',' << format_double(t.flow2[i]) << ','
        << format_double(t.pump_f[i]) << ',' << format_double(t.q1[i]) << ',' << format_double(t.q2[i]) << ','
        << format_double(t.q_target[i]) << '\n';
}

double cumulative_error(std::span<const double> qs, std::span<const double> q_targets) {
  check_lengths(qs.size(), q_targets.size(), "cumulative_error");
  double sum = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) sum += std::abs(qs[i] - q_targets[i]);
  return sum;
}

double average_reward(std::span<const double> q1s, std::span<const double> q2s, std::span<const double> q_targets) {
  check_lengths(q1s.size(), q_targets.size(), "average_reward");
  check_lengths(q2s.size(), q_targets.size(), "average_reward");
  return (cumulative_error(q1s, q_targets) + cumulative_error(q2s, q_targets)) / (2.0 * q_targets.size());
}

double sample_hours(std::span<const Seconds> timestamps) {
  std::vector<Seconds> gaps;
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (timestamps[i] > timestamps[i - 1]) gaps.push_back(timestamps[i] - timestamps[i - 1]);
  if (gaps.empty()) throw InvalidArgument("sample_hours: need two increasing timestamps");
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return static_cast<double>(*mid) / 3600.0;
}

Consumption consumption_totals(const ControlTrace& trace) {
  trace.validate();
  const double dt = sample_hours(trace.timestamp);
  Consumption c;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    c.water1 += trace.flow1[i] * dt;
    c.water2 += trace.flow2[i] * dt;
    c.heat1 += trace.q1[i] * dt;
    c.heat2 += trace.q2[i] * dt;
  }
  return c;
}

Consumption normalize_vs(const Consumption& totals, const Consumption& baseline) {
  return {ratio(totals.water1, baseline.water1, "primary water"), ratio(totals.water2, baseline.water2, "secondary water"),
          ratio(totals.heat1, baseline.heat1, "primary heat"), ratio(totals.heat2, baseline.heat2, "secondary heat")};
}

Consumption normalize_vs(const ControlTrace& trace, const ControlTrace& baseline) {
  return normalize_vs(consumption_totals(trace), consumption_totals(baseline));
}

long Histogram::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

int Histogram::bin_of(double x) const {
  if (edges.size() < 2 || !(x >= edges.front() && x <= edges.back())) return -1;
  const int bins = static_cast<int>(edges.size()) - 1;
  const double width = (edges.back() - edges.front()) / bins;
  int k = static_cast<int>(std::floor((x - edges.front()) / width));
  return std::clamp(k, 0, bins - 1);
}

Histogram error_histogram(std::span<const double> qs, std::span<const double> q_targets, int bins) {
  if (bins < 1) throw InvalidArgument("error_histogram: bins must be >= 1");
  if (qs.size() != q_targets.size()) throw ShapeError("error_histogram: length mismatch");
  std::vector<double> err(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) err[i] = qs[i] - q_targets[i];
  double lo = -0.5, hi = 0.5;
  if (!err.empty()) {
    const auto [mn, mx] = std::minmax_element(err.begin(), err.end());
    lo = *mn;
    hi = *mx;
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[k] = lo + (hi - lo) * k / bins;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double e : err) ++h.counts[static_cast<std::size_t>(h.bin_of(e))];
  return h;
}

MetricsReport make_report(const std::string& controller, const ControlTrace& trace, const ControlTrace* baseline,
                          int bins) {
  trace.validate();
  MetricsReport r;
  r.controller = controller;
  r.samples = static_cast<long>(trace.size());
  r.ce1 = cumulative_error(trace.q1, trace.q_target);
  r.ce2 = cumulative_error(trace.q2, trace.q_target);
  r.ar = average_reward(trace.q1, trace.q2, trace.q_target);
  r.totals = consumption_totals(trace);
  if (baseline) r.normalized = normalize_vs(r.totals, consumption_totals(*baseline));
  r.histogram = error_histogram(trace.q2, trace.q_target, bins);
  return r;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "controller,metric,value\n";
  for (const MetricsReport& r : reports) {
    if (r.controller.empty() || r.controller.find_first_of(",\n\r") != std::string::npos)
      throw InvalidArgument("write_metrics_csv: bad controller name '" + r.controller + "'");
    auto row = [&](const std::string& metric, const std::string& value) {
      out << r.controller << ',' << metric << ',' << value << '\n';
    };
    auto num = [&](const std::string& metric, double v) { row(metric, format_double(v)); };
    row("samples", std::to_string(r.samples));
    num("ce_primary", r.ce1);
    num("ce_secondary", r.ce2);
    num("ar", r.ar);
    num("water_primary", r.totals.water1);
    num("water_secondary", r.totals.water2);
    num("heat_primary", r.totals.heat1);
    num("heat_secondary", r.totals.heat2);
    if (r.normalized) {
      num("norm_water_primary", r.normalized->water1);
      num("norm_water_secondary", r.normalized->water2);
      num("norm_heat_primary", r.normalized->heat1);
      num("norm_heat_secondary", r.normalized->heat2);
    }
    row("hist_bins", std::to_string(r.histogram.counts.size()));
    for (std::size_t k = 0; k < r.histogram.edges.size(); ++k) num("hist_edge_" + std::to_string(k), r.histogram.edges[k]);
    for (std::size_t k = 0; k < r.histogram.counts.size(); ++k)
      row("hist_count_" + std::to_string(k), std::to_string(r.histogram.counts[k]));
  }
}

std::vector<MetricsReport> read_metrics_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t c_ctrl = t.column("controller"), c_metric = t.column("metric"), c_value = t.column("value");

  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw SchemaError("metrics csv: ragged row");
    const std::string& name = row[c_ctrl];
    if (!values.count(name)) order.push_back(name);
    if (!values[name].emplace(row[c_metric], row[c_value]).second)
      throw SchemaError("metrics csv: duplicate metric " + row[c_metric] + " for " + name);
  }

  std::vector<MetricsReport> out;
  for (const std::string& name : order) {
    auto& m = values[name];
    auto take = [&](const std::string& key) -> std::string {
      auto it = m.find(key);
      if (it == m.end()) throw SchemaError("metrics csv: " + name + " lacks " + key);
      std::string v = it->second;
      m.erase(it);
      return v;
    };
    try {
      MetricsReport r;
      r.controller = name;
      r.samples = parse_int(take("samples"));
      r.ce1 = parse_double(take("ce_primary"));
      r.ce2 = parse_double(take("ce_secondary"));
      r.ar = parse_double(take("ar"));
      r.totals = {parse_double(take("water_primary")), parse_double(take("water_secondary")),
                  parse_double(take("heat_primary")), parse_double(take("heat_secondary"))};
      if (m.count("norm_water_primary"))
        r.normalized = Consumption{parse_double(take("norm_water_primary")), parse_double(take("norm_water_secondary")),
                                   parse_double(take("norm_heat_primary")), parse_double(take("norm_heat_secondary"))};
      const long bins = parse_int(take("hist_bins"));
      if (bins < 0) throw SchemaError("metrics csv: negative hist_bins");
      for (long k = 0; k <= bins; ++k) r.histogram.edges.push_back(parse_double(take("hist_edge_" + std::to_string(k))));
      for (long k = 0; k < bins; ++k) r.histogram.counts.push_back(parse_int(take("hist_count_" + std::to_string(k))));
      if (!m.empty()) throw SchemaError("metrics csv: unknown metric " + m.begin()->first + " for " + name);
      out.push_back(std::move(r));
    } catch (const InvalidArgument& e) {
      throw SchemaError("metrics csv: " + name + ": " + e.what());
    }
  }
  return out;
}

void print_report_table(std::ostream& out, std::span<const MetricsReport> reports) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::left << std::setw(12) << "controller" << std::right << std::setw(12) << "CE1" << std::setw(12) << "CE2"
      << std::setw(10) << "AR" << std::setw(14) << "water1 t" << std::setw(14) << "water2 t" << std::setw(10)
      << "w1 ratio" << std::setw(10) << "w2 ratio" << '\n';
  out << std::fixed;
  for (const auto& r : reports) {
    out << std::left << std::setw(12) << r.controller << std::right << std::setprecision(2) << std::setw(12) << r.ce1
        << std::setw(12) << r.ce2 << std::setprecision(4) << std::setw(10) << r.ar << std::setprecision(1)
        << std::setw(14) << r.totals.water1 << std::setw(14) << r.totals.water2 << std::setprecision(3);
    if (r.normalized)
      out << std::setw(10) << r.normalized->water1 << std::setw(10) << r.normalized->water2;
    else
      out << std::setw(10) << "-" << std::setw(10) << "-";
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

}  // namespace dhc
