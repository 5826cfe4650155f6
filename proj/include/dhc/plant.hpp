#pragma once

// Ground-truth model of one heat-exchange station: a counter-flow exchanger
// between the primary (source) loop and the secondary (building) loop, a
// lumped building load and a lumped secondary supply-pipe loss.
//
// Units: temperatures in degC, flows in t/h, heat rates in GJ/h,
// conductances in GJ/(h*degC), specific heat in GJ/(t*degC).

#include <optional>
#include <random>
#include <string>

namespace dhc {

struct PumpPoly {
  double a2 = 0.1492;
  double a1 = -5.177;
  double a0 = 168.2;

  double operator()(double f) const { return (a2 * f + a1) * f + a0; }
};

inline constexpr double kWaterSpecificHeat = 4.186e-3;
inline constexpr double kPumpMinHz = 20.0;
inline constexpr double kPumpMaxHz = 50.0;

struct PlantParams {
  double c = kWaterSpecificHeat;
  double ua_hx = 1.2;
  double ua_building = 0.569;
  double ua_pipe = 0.015;
  double t_indoor = 18.0;
  double noise_sigma_temp = 0.3;
  double noise_sigma_flow = 1.0;
  PumpPoly pump_poly;

  void validate() const;
};

struct StandardParams {
  double k_loss = 42.9;      // W/m^2
  double area = 6.2e4;       // m^2
  double t_required = 18.0;  // degC
  double t_design = -22.4;   // degC
  double duration = 3600.0;  // s

  void validate() const;
};

struct PlantState {
  double t1_supply = 0.0;
  double t1_return = 0.0;
  double t2_supply = 0.0;  // after the supply-pipe loss, as measured at the buildings
  double t2_return = 0.0;
  double flow1 = 0.0;
  double flow2 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q_target = 0.0;
  double t_out = 0.0;
};

// National-standard heat demand, GJ/h. Zero once t_out reaches t_required.
double target_heat(const StandardParams& std_params, double t_out);

double heat_quantity(double c, double flow, double td);

// Secondary-loop flow for a circulating-pump frequency in [20, 50] Hz.
double pump_flow(double f_hz, const PumpPoly& poly = {});

// Inverse of pump_flow on [20, 50] Hz (monotone there); flows outside the
// reachable band are clamped to the band edges.
double pump_frequency_for_flow(double flow, const PumpPoly& poly = {});

double hx_effectiveness(const PlantParams& params, double flow1, double flow2);

struct SolveOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;
  std::optional<double> initial_t2_return;
};

// Steady state for given supply temperature, flows and weather. With rng set,
// Gaussian measurement noise is added to reported temperatures and flows and the
// reported heat rates are recomputed from the noisy readings.
PlantState plant_steady_state(const PlantParams& params, const StandardParams& std_params, double t1_supply,
                              double flow1, double flow2, double t_out, std::mt19937_64* noise_rng = nullptr,
                              const SolveOptions& options = {});

// Operator heat curve for the primary supply temperature.
double supply_temp_schedule(double t_out, std::mt19937_64* rng = nullptr, double noise_sigma = 2.0);

// Re-runnable calibration of ua_building: the value for which the midpoint
// action (55 t/h, 35 Hz) at design conditions delivers the standard target on
// average over both sides.
double calibrate_building_ua(PlantParams params, const StandardParams& std_params);

// key = value loading; unknown keys raise ConfigError.
void apply_plant_setting(PlantParams& params, const std::string& key, double value);
void apply_standard_setting(StandardParams& params, const std::string& key, double value);

}  // namespace dhc
