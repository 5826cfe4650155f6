#include "dhc/plant.hpp"

#include <algorithm>
#include <cmath>

#include "dhc/errors.hpp"

namespace dhc {

void PlantParams::validate() const {
  if (!(c > 0.0)) throw InvalidArgument("plant: c must be positive");
  if (!(ua_hx > 0.0)) throw InvalidArgument("plant: ua_hx must be positive");
  if (!(ua_building >= 0.0) || !(ua_pipe >= 0.0)) throw InvalidArgument("plant: conductances must be >= 0");
  if (!(noise_sigma_temp >= 0.0) || !(noise_sigma_flow >= 0.0))
    throw InvalidArgument("plant: noise sigmas must be >= 0");
  for (double f : {kPumpMinHz, kPumpMaxHz})
    if (!(pump_poly(f) > 0.0)) throw InvalidArgument("plant: pump polynomial must give positive flow on [20, 50]");
}

void StandardParams::validate() const {
  if (!(k_loss > 0.0 && area > 0.0 && duration > 0.0)) throw InvalidArgument("standard: K, S, t must be positive");
  if (!(t_required > t_design)) throw InvalidArgument("standard: t_required must exceed t_design");
}

double target_heat(const StandardParams& s, double t_out) {
  if (t_out >= s.t_required) return 0.0;
  const double joules = s.k_loss * s.area * (s.t_required - t_out) / (s.t_required - s.t_design) * s.duration;
  return joules * 1e-9;
}

double heat_quantity(double c, double flow, double td) {
  if (flow < 0.0) throw InvalidArgument("heat_quantity: negative flow");
  return c * flow * td;
}

double pump_flow(double f_hz, const PumpPoly& poly) {
  if (!(f_hz >= kPumpMinHz && f_hz <= kPumpMaxHz))
    throw RangeError("pump_flow: frequency " + std::to_string(f_hz) + " Hz outside [20, 50]");
  return poly(f_hz);
}

double pump_frequency_for_flow(double flow, const PumpPoly& poly) {
  double lo = kPumpMinHz, hi = kPumpMaxHz;
  if (flow <= poly(lo)) return lo;
  if (flow >= poly(hi)) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (poly(mid) < flow ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double hx_effectiveness(const PlantParams& p, double flow1, double flow2) {
  if (!(flow1 > 0.0) || !(flow2 > 0.0)) throw InvalidArgument("hx_effectiveness: flows must be positive");
  const double c1 = p.c * flow1;
  const double c2 = p.c * flow2;
  const double c_min = std::min(c1, c2);
  const double cr = c_min / std::max(c1, c2);
  const double ntu = p.ua_hx / c_min;
  if (std::abs(1.0 - cr) < 1e-12) return ntu / (1.0 + ntu);
  const double e = std::exp(-ntu * (1.0 - cr));
  return (1.0 - e) / (1.0 - cr * e);
}

namespace {

struct SecondaryBalance {
  double q_exchanger;
  double q_building;
  double q_pipe;
  double t2_supply_station;
  double t2_supply_delivered;

  double residual() const { return q_exchanger - q_building - q_pipe; }
};

SecondaryBalance secondary_balance(const PlantParams& p, double effectiveness, double c_min, double t1_supply,
                                   double flow2, double t_out, double t2_return) {
  SecondaryBalance b{};
  const double c2 = p.c * flow2;
  b.q_exchanger = effectiveness * c_min * (t1_supply - t2_return);
  b.t2_supply_station = t2_return + b.q_exchanger / c2;
  b.q_pipe = p.ua_pipe * (b.t2_supply_station - t_out);
  b.t2_supply_delivered = b.t2_supply_station - b.q_pipe / c2;
  b.q_building = p.ua_building * (0.5 * (b.t2_supply_delivered + t2_return) - p.t_indoor);
  return b;
}

}  // namespace

PlantState plant_steady_state(const PlantParams& p, const StandardParams& s, double t1_supply, double flow1,
                              double flow2, double t_out, std::mt19937_64* noise_rng, const SolveOptions& options) {
  p.validate();
  if (!(flow1 > 0.0) || !(flow2 > 0.0)) throw InvalidArgument("plant_steady_state: flows must be positive");

  const double eff = hx_effectiveness(p, flow1, flow2);
  const double c_min = p.c * std::min(flow1, flow2);
  auto balance_at = [&](double t2r) { return secondary_balance(p, eff, c_min, t1_supply, flow2, t_out, t2r); };

  // Newton iteration on the energy residual; the slope is taken by a unit
  // secant, which is exact while the balance stays affine in t2_return.
  double t2r = options.initial_t2_return.value_or(t1_supply);
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double r = balance_at(t2r).residual();
    const double slope = balance_at(t2r + 1.0).residual() - r;
    if (!(std::abs(slope) > 0.0) || !std::isfinite(slope)) throw ConvergenceError("plant: degenerate energy balance");
    const double next = t2r - r / slope;
    const double step = std::abs(next - t2r);
    t2r = next;
    if (step < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(t2r)) throw ConvergenceError("plant: steady state did not converge");

  const SecondaryBalance b = balance_at(t2r);
  PlantState st;
  st.t_out = t_out;
  st.q_target = target_heat(s, t_out);
  st.t1_supply = t1_supply;
  st.t1_return = t1_supply - b.q_exchanger / (p.c * flow1);
  st.t2_supply = b.t2_supply_delivered;
  st.t2_return = t2r;
  st.flow1 = flow1;
  st.flow2 = flow2;

  if (noise_rng != nullptr) {
    std::normal_distribution<double> temp_noise(0.0, p.noise_sigma_temp);
    std::normal_distribution<double> flow_noise(0.0, p.noise_sigma_flow);
    if (p.noise_sigma_temp > 0.0) {
      st.t1_supply += temp_noise(*noise_rng);
      st.t1_return += temp_noise(*noise_rng);
      st.t2_supply += temp_noise(*noise_rng);
      st.t2_return += temp_noise(*noise_rng);
    }
    if (p.noise_sigma_flow > 0.0) {
      st.flow1 = std::max(1e-6, st.flow1 + flow_noise(*noise_rng));
      st.flow2 = std::max(1e-6, st.flow2 + flow_noise(*noise_rng));
    }
    st.t1_return = std::min(st.t1_return, st.t1_supply);
    st.t2_return = std::min(st.t2_return, st.t2_supply);
  }
  st.q1 = heat_quantity(p.c, st.flow1, st.t1_supply - st.t1_return);
  st.q2 = heat_quantity(p.c, st.flow2, st.t2_supply - st.t2_return);
  return st;
}

double supply_temp_schedule(double t_out, std::mt19937_64* rng, double noise_sigma) {
  double t = 70.0 - 0.9 * (t_out + 20.0);
  if (rng != nullptr && noise_sigma > 0.0) t += std::normal_distribution<double>(0.0, noise_sigma)(*rng);
  return std::clamp(t, 45.0, 95.0);
}

double calibrate_building_ua(PlantParams params, const StandardParams& s) {
  const double t_out = s.t_design;
  const double t1s = supply_temp_schedule(t_out);
  const double target = target_heat(s, t_out);
  const double flow1 = 55.0;
  const double flow2 = pump_flow(35.0, params.pump_poly);
  auto excess = [&](double ua) {
    params.ua_building = ua;
    const PlantState st = plant_steady_state(params, s, t1s, flow1, flow2, t_out);
    return 0.5 * (st.q1 + st.q2) - target;
  };
  double lo = 1e-3, hi = 10.0;
  if (excess(lo) > 0.0 || excess(hi) < 0.0) throw ConvergenceError("calibrate_building_ua: target not bracketed");
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void apply_plant_setting(PlantParams& p, const std::string& key, double v) {
  if (key == "c") p.c = v;
  else if (key == "ua_hx") p.ua_hx = v;
  else if (key == "ua_building") p.ua_building = v;
  else if (key == "ua_pipe") p.ua_pipe = v;
  else if (key == "t_indoor") p.t_indoor = v;
  else if (key == "noise_sigma_temp") p.noise_sigma_temp = v;
  else if (key == "noise_sigma_flow") p.noise_sigma_flow = v;
  else if (key == "pump_a2") p.pump_poly.a2 = v;
  else if (key == "pump_a1") p.pump_poly.a1 = v;
  else if (key == "pump_a0") p.pump_poly.a0 = v;
  else throw ConfigError("unknown plant key '" + key + "'");
}

void apply_standard_setting(StandardParams& s, const std::string& key, double v) {
  if (key == "k_loss") s.k_loss = v;
  else if (key == "area") s.area = v;
  else if (key == "t_required") s.t_required = v;
  else if (key == "t_design") s.t_design = v;
  else if (key == "duration") s.duration = v;
  else throw ConfigError("unknown standard key '" + key + "'");
}

}  // namespace dhc
