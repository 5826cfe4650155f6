#include "dhc/balance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

void PidGains::validate() const {
  if (!(out_min < out_max)) throw InvalidArgument("PidGains: output limits must satisfy min < max");
  if (!(sample_dt > 0.0)) throw InvalidArgument("PidGains: sample_dt must be positive");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd))
    throw InvalidArgument("PidGains: gains must be finite");
}

PidStep pid_step(const PidGains& gains, double setpoint, double measured, const PidState& state) {
  const double e = setpoint - measured;
  const double dt = gains.sample_dt;
  const double p = gains.kp * (e - state.e_prev);
  const double i = gains.ki * e * dt;
  const double d = gains.kd * (e - 2.0 * state.e_prev + state.e_prev2) / dt;

  double du = p + i + d;
  double integrator = state.integrator + i;
  const double raw = state.opening + du;
  // anti-windup: while pinned against a limit, drop the integral push into it
  if ((raw > gains.out_max && i > 0.0) || (raw < gains.out_min && i < 0.0)) {
    du -= i;
    integrator = state.integrator;
  }
  PidStep out;
  out.state.opening = std::clamp(state.opening + du, gains.out_min, gains.out_max);
  out.state.integrator = integrator;
  out.state.e_prev = e;
  out.state.e_prev2 = state.e_prev;
  out.delta = out.state.opening - state.opening;
  return out;
}

Eigen::VectorXd flow_split(const Eigen::VectorXd& valves, const std::vector<UnitHydraulics>& units,
                           double total_flow) {
  if (static_cast<std::size_t>(valves.size()) != units.size())
    throw ShapeError("flow_split: valves and units differ in length");
  Eigen::VectorXd g(valves.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(units[i].base_resistance > 0.0)) throw InvalidArgument("flow_split: base_resistance must be positive");
    g(i) = std::max(valves(i), 0.0) / std::sqrt(units[i].base_resistance);
  }
  const double sum = g.sum();
  if (!(sum > 0.0)) throw NumericError("flow_split: every valve is closed (dead network)");
  return total_flow * g / sum;
}

double unit_return_temp(double flow, double t2_supply, const UnitHydraulics& unit, double c) {
  if (flow <= 0.0) return unit.t_indoor;
  const double a = c * flow;
  const double h = 0.5 * unit.radiator_ua;
  const double tr = ((a - h) * t2_supply + unit.radiator_ua * unit.t_indoor) / (a + h);
  return std::clamp(tr, std::min(unit.t_indoor, t2_supply), t2_supply);
}

ValveCurrent valve_to_current(double opening) {
  ValveCurrent out;
  double u = opening;
  if (!(u >= 0.0 && u <= 1.0)) {
    out.clamped = true;
    u = std::isnan(u) ? 0.0 : std::clamp(u, 0.0, 1.0);
  }
  out.milliamps = 4.0 + 16.0 * u;
  return out;
}

namespace {

void measure(BalanceState& s, const std::vector<UnitHydraulics>& units, double t2_supply, double total_flow,
             double c) {
  s.flows = flow_split(s.valve_openings, units, total_flow);
  s.return_temps.resize(s.flows.size());
  for (Eigen::Index i = 0; i < s.flows.size(); ++i)
    s.return_temps(i) = unit_return_temp(s.flows(i), t2_supply, units[i], c);
}

}  // namespace

std::vector<BalanceState> balance_sim(const std::vector<UnitHydraulics>& units, const PidGains& gains,
                                      double t2_supply, double total_flow, int steps,
                                      const BalanceOptions& options) {
  if (units.size() < 2) throw InvalidArgument("balance_sim: need at least two units");
  if (steps < 0) throw InvalidArgument("balance_sim: steps must be non-negative");
  gains.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(units.size());

  BalanceState s;
  s.valve_openings = Eigen::VectorXd::Constant(n, std::clamp(options.initial_opening, gains.out_min, gains.out_max));
  s.integrators = Eigen::VectorXd::Zero(n);
  // bumpless start: the first proportional term sees no jump from zero
  measure(s, units, t2_supply, total_flow, options.c);
  s.e_prev = Eigen::VectorXd::Constant(n, s.return_temps.mean()) - s.return_temps;
  s.e_prev2 = s.e_prev;

  std::vector<BalanceState> history;
  history.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    measure(s, units, t2_supply, total_flow, options.c);
    const double setpoint = s.return_temps.mean();
    BalanceState next = s;
    for (Eigen::Index i = 0; i < n; ++i) {
      const PidState ps{s.valve_openings(i), s.integrators(i), s.e_prev(i), s.e_prev2(i)};
      const PidStep r = pid_step(gains, setpoint, s.return_temps(i), ps);
      next.valve_openings(i) = r.state.opening;
      next.integrators(i) = r.state.integrator;
      next.e_prev(i) = r.state.e_prev;
      next.e_prev2(i) = r.state.e_prev2;
    }
    BalanceState record = s;
    record.integrators = next.integrators;
    record.e_prev = next.e_prev;
    record.e_prev2 = next.e_prev2;
    history.push_back(std::move(record));
    s = std::move(next);
  }
  return history;
}

std::vector<UnitHydraulics> default_balance_units() {
  std::vector<UnitHydraulics> units(8);
  for (int i = 0; i < 8; ++i) {
    units[i].unit_id = i;
    units[i].base_resistance = 1.0 + 8.0 * i / 7.0;
  }
  return units;
}

BalanceScenario read_balance_scenario(std::istream& in) {
  BalanceScenario sc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "scenario line " + std::to_string(lineno);
    try {
      if (tok[0] == "unit") {
        if (tok.size() < 3 || tok.size() > 4) throw SchemaError(where + ": expected unit <resistance> <ua> [t_indoor]");
        UnitHydraulics u;
        u.unit_id = static_cast<int>(sc.units.size());
        u.base_resistance = parse_double(tok[1]);
        u.radiator_ua = parse_double(tok[2]);
        if (tok.size() == 4) u.t_indoor = parse_double(tok[3]);
        if (!(u.base_resistance > 0.0) || !(u.radiator_ua > 0.0))
          throw SchemaError(where + ": resistance and radiator_ua must be positive");
        sc.units.push_back(u);
      } else if (tok[0] == "t2_supply" && tok.size() == 2) {
        sc.t2_supply = parse_double(tok[1]);
      } else if (tok[0] == "total_flow" && tok.size() == 2) {
        sc.total_flow = parse_double(tok[1]);
      } else {
        throw SchemaError(where + ": unknown entry '" + tok[0] + "'");
      }
    } catch (const InvalidArgument& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  if (sc.units.size() < 2) throw SchemaError("scenario: need at least two units");
  return sc;
}

BalanceScenario read_balance_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_balance_scenario(in);
}

void write_balance_scenario(std::ostream& out, const BalanceScenario& scenario) {
  out << "t2_supply " << format_double(scenario.t2_supply) << "\n";
  out << "total_flow " << format_double(scenario.total_flow) << "\n";
  for (const auto& u : scenario.units)
    out << "unit " << format_double(u.base_resistance) << " " << format_double(u.radiator_ua) << " "
        << format_double(u.t_indoor) << "\n";
}

void write_balance_csv(std::ostream& out, const std::vector<BalanceState>& history) {
  const Eigen::Index n = history.empty() ? 0 : history.front().valve_openings.size();
  out << "step";
  for (const char* prefix : {"open_", "flow_", "tr_"})
    for (Eigen::Index i = 0; i < n; ++i) out << "," << prefix << i;
  out << ",spread\n";
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& s = history[k];
    out << k;
    for (const Eigen::VectorXd* v : {&s.valve_openings, &s.flows, &s.return_temps})
      for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double((*v)(i));
    out << "," << format_double(s.spread()) << "\n";
  }
}

}  // namespace dhc
