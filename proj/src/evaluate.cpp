#include "dhc/evaluate.hpp"

#include <algorithm>
#include <optional>
#include <ostream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

std::vector<Controls> agent_controls(const DdpgAgent& agent, const Dataset& ds) {
  std::vector<Controls> out;
  out.reserve(ds.size());
  for (const Sample& s : ds.rows)
    out.push_back(action_to_controls(actor_action(agent.actor, agent.obs_stats, Observation::of(s))).controls);
  return out;
}

std::vector<Controls> sl_controller_controls(const SlController& sl, const Dataset& ds) {
  std::vector<Controls> out;
  out.reserve(ds.size());
  for (const Sample& s : ds.rows) out.push_back(sl_controls(sl, Observation::of(s), s.swts));
  return out;
}

std::vector<Controls> manual_controls(const Dataset& ds, const PlantParams& plant, const StandardParams& standard) {
  const auto cond = ds.conditions();
  return manual_baseline(cond, plant, standard);
}

std::vector<Controls> fixed_controls(const Dataset& ds, const Controls& c) {
  return std::vector<Controls>(ds.size(), c);
}

ControlTrace evaluate_controls(const Dataset& ds, std::span<const Controls> controls, HeatBackend& backend) {
  if (controls.size() != ds.size()) throw ShapeError("evaluate_controls: one control per row required");
  if (ds.empty()) throw InvalidArgument("evaluate_controls: empty dataset");
  ControlTrace t;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds[i];
    const HeatResponse r = backend.respond(Observation::of(s), controls[i]);
    t.timestamp.push_back(s.timestamp);
    t.flow1.push_back(controls[i].flow1);
    t.flow2.push_back(r.flow2);
    t.pump_f.push_back(controls[i].pump_f);
    t.q1.push_back(r.q1);
    t.q2.push_back(r.q2);
    t.q_target.push_back(s.q_target);
  }
  return t;
}

std::vector<RollingPoint> run_rolling(const Dataset& ds, const RollingOptions& options, std::uint64_t seed,
                                      const std::shared_ptr<HeatBackend>& backend,
                                      const std::function<void(const RollingPoint&)>& progress) {
  if (!backend) throw InvalidArgument("run_rolling: no backend");
  if (options.steps_per_window < 1) throw InvalidArgument("run_rolling: steps_per_window must be >= 1");
  auto windows = rolling_windows(ds, options.window_days);
  if (options.max_windows > 0 && windows.size() > static_cast<std::size_t>(options.max_windows))
    windows.resize(static_cast<std::size_t>(options.max_windows));
  if (windows.size() < 2) throw RangeError("run_rolling: need at least two rolling windows");

  AgentConfig cfg = options.agent;
  cfg.train_steps = options.steps_per_window;
  std::vector<RollingPoint> out;
  std::optional<DdpgAgent> previous;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const RollingWindow& w = windows[k];
    EnvConfig ec = options.env;
    ec.episode_len = std::min<int>(ec.episode_len, static_cast<int>(w.train.size()));
    HeatingEnv env(w.train, ec, backend);
    const DdpgAgent* init = options.warm_start && previous ? &*previous : nullptr;
    TrainResult res = train_ddpg(env, cfg, seed + k, init);

    const auto controls = agent_controls(res.agent, w.test);
    const ControlTrace trace = evaluate_controls(w.test, controls, *backend);
    RollingPoint p{static_cast<int>(k), w.first_train_day, w.test_day,
                   average_reward(trace.q1, trace.q2, trace.q_target)};
    out.push_back(p);
    if (progress) progress(p);
    previous = std::move(res.agent);
  }
  return out;
}

void write_rolling_csv(std::ostream& out, std::span<const RollingPoint> points) {
  out << "window,first_train_day,test_day,ar\n";
  for (const auto& p : points)
    out << p.window << ',' << p.first_train_day << ',' << p.test_day << ',' << format_double(p.ar) << '\n';
}

}  // namespace dhc
