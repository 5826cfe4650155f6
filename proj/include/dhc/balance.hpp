#pragma once

// Branch-network imbalance and the per-unit PID valve controllers that pull
// every unit's return water temperature to a common value.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhc/plant.hpp"

namespace dhc {

struct UnitHydraulics {
  int unit_id = 0;
  double base_resistance = 1.0;  // grows with distance from the station
  double radiator_ua = 0.01;     // GJ/(h C)
  double t_indoor = 18.0;
};

struct PidGains {
  double kp = 0.05;  // per C
  double ki = 0.01;
  double kd = 0.0;
  double out_min = 0.0;
  double out_max = 1.0;
  double sample_dt = 1.0;

  void validate() const;
};

// Controller memory for one unit.
struct PidState {
  double opening = 1.0;
  double integrator = 0.0;  // accumulated ki e dt, frozen while saturated
  double e_prev = 0.0;
  double e_prev2 = 0.0;
};

struct PidStep {
  double delta = 0.0;  // applied change of opening
  PidState state;
};

// Velocity form; the error is setpoint - measured, so a unit running colder
// than the setpoint opens up.
PidStep pid_step(const PidGains& gains, double setpoint, double measured, const PidState& state);

// Flow share by conductance valve / sqrt(resistance); throws NumericError when
// every valve is shut.
Eigen::VectorXd flow_split(const Eigen::VectorXd& valves, const std::vector<UnitHydraulics>& units,
                           double total_flow);

// Steady radiator balance c F (ts - tr) = ua ((ts + tr)/2 - t_in), clamped to [t_in, ts].
double unit_return_temp(double flow, double t2_supply, const UnitHydraulics& unit, double c = kWaterSpecificHeat);

struct ValveCurrent {
  double milliamps = 4.0;
  bool clamped = false;
};
ValveCurrent valve_to_current(double opening);

struct BalanceState {
  Eigen::VectorXd valve_openings;
  Eigen::VectorXd flows;         // t/h
  Eigen::VectorXd return_temps;  // C
  Eigen::VectorXd integrators;
  Eigen::VectorXd e_prev;
  Eigen::VectorXd e_prev2;

  double spread() const { return return_temps.maxCoeff() - return_temps.minCoeff(); }
};

struct BalanceOptions {
  double initial_opening = 1.0;
  double c = kWaterSpecificHeat;
};

// history[k] holds the openings used at step k, the flows and return temps they
// produced, and the controller memory after the step's update.
std::vector<BalanceState> balance_sim(const std::vector<UnitHydraulics>& units, const PidGains& gains,
                                      double t2_supply, double total_flow, int steps,
                                      const BalanceOptions& options = {});

// Eight units, resistances evenly from 1 (next to the station) to 9.
std::vector<UnitHydraulics> default_balance_units();

struct BalanceScenario {
  std::vector<UnitHydraulics> units;
  double t2_supply = 50.0;
  double total_flow = 80.0;
};

// Scenario file: `#` comments, optional `t2_supply <v>` / `total_flow <v>` lines,
// then one `unit <resistance> <radiator_ua> [t_indoor]` line per unit.
BalanceScenario read_balance_scenario(std::istream& in);
BalanceScenario read_balance_scenario_file(const std::string& path);
void write_balance_scenario(std::ostream& out, const BalanceScenario& scenario);

// step, open_<i>..., flow_<i>..., tr_<i>..., spread
void write_balance_csv(std::ostream& out, const std::vector<BalanceState>& history);

}  // namespace dhc
