#include "dhc/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

MappedControls action_to_controls(Action a) {
  if (!std::isfinite(a.a0) || !std::isfinite(a.a1)) throw NumericError("action_to_controls: non-finite action");
  MappedControls m;
  m.applied = {std::clamp(a.a0, -1.0, 1.0), std::clamp(a.a1, -1.0, 1.0)};
  m.clipped = m.applied.a0 != a.a0 || m.applied.a1 != a.a1;
  m.controls = {55.0 + 45.0 * m.applied.a0, 35.0 + 15.0 * m.applied.a1};
  return m;
}

Action controls_to_action(const Controls& c) {
  return {std::clamp((c.flow1 - 55.0) / 45.0, -1.0, 1.0), std::clamp((c.pump_f - 35.0) / 15.0, -1.0, 1.0)};
}

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::q1: return "q1";
    case RewardKind::q2: return "q2";
    case RewardKind::q1q2: return "q1q2";
  }
  return "?";
}

RewardKind reward_kind_from_string(std::string_view s) {
  for (RewardKind k : {RewardKind::q1, RewardKind::q2, RewardKind::q1q2})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown reward kind '" + std::string(s) + "'");
}

double reward(RewardKind kind, double q1, double q2, double q_target) {
  switch (kind) {
    case RewardKind::q1: return -std::abs(q1 - q_target);
    case RewardKind::q2: return -std::abs(q2 - q_target);
    case RewardKind::q1q2: return -0.5 * (std::abs(q1 - q_target) + std::abs(q2 - q_target));
  }
  return 0.0;
}

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::surrogate ? "surrogate" : "plant_oracle";
}

BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "surrogate") return BackendKind::surrogate;
  if (s == "plant_oracle" || s == "plant") return BackendKind::plant_oracle;
  throw InvalidArgument("unknown backend '" + std::string(s) + "'");
}

PlantBackend::PlantBackend(PlantParams plant, StandardParams standard, bool measurement_noise)
    : plant_(std::move(plant)), standard_(standard), noise_(measurement_noise) {
  plant_.validate();
}

HeatResponse PlantBackend::respond(const Observation& obs, const Controls& controls) {
  const double flow2 = pump_flow(controls.pump_f, plant_.pump_poly);
  const PlantState st =
      plant_steady_state(plant_, standard_, obs.t1_supply, controls.flow1, flow2, obs.t_out, noise_ ? &rng_ : nullptr);
  return {st.q1, st.q2, flow2};
}

HeatResponse SurrogateBackend::respond(const Observation& obs, const Controls& controls) {
  const QPrediction p = predict_q(set_, obs.t1_supply, obs.t_out, controls.flow1, controls.pump_f);
  return {p.q1, p.q2, p.flow2};
}

HeatingEnv::HeatingEnv(const Dataset& data, EnvConfig config, std::shared_ptr<HeatBackend> backend)
    : config_(config), backend_(std::move(backend)) {
  if (config_.episode_len < 1) throw InvalidArgument("HeatingEnv: episode_len must be >= 1");
  if (!backend_) throw InvalidArgument("HeatingEnv: no backend");
  if (data.size() < static_cast<std::size_t>(config_.episode_len))
    throw RangeError("HeatingEnv: dataset shorter than one episode");
  observations_.reserve(data.size());
  timestamps_.reserve(data.size());
  Eigen::MatrixXd obs(static_cast<Eigen::Index>(data.size()), 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    observations_.push_back(Observation::of(data[i]));
    timestamps_.push_back(data[i].timestamp);
    obs.row(static_cast<Eigen::Index>(i)) = observations_.back().row();
  }
  stats_ = config_.normalize_observations ? Standardizer::fit(obs) : Standardizer::identity(3);
}

Observation HeatingEnv::reset(std::size_t episode_start, std::uint64_t seed) {
  if (episode_start > max_start())
    throw RangeError("reset: episode starting at " + std::to_string(episode_start) + " runs past the dataset");
  cursor_ = episode_start;
  steps_taken_ = 0;
  active_ = true;
  backend_->reseed(seed);
  return observations_[cursor_];
}

StepResult HeatingEnv::step(Action a) {
  if (!active_) throw ProtocolError("step: no active episode (call reset)");
  const Observation& obs = observations_[cursor_];
  const MappedControls m = action_to_controls(a);
  const HeatResponse h = backend_->respond(obs, m.controls);

  StepResult r;
  r.reward = reward(config_.reward_kind, h.q1, h.q2, obs.q_target);
  r.info = {h.q1, h.q2, m.controls.flow1, h.flow2, m.controls.pump_f, m.clipped};
  ++steps_taken_;
  r.done = steps_taken_ == config_.episode_len;
  if (r.done) {
    active_ = false;
    // terminal transitions carry the last observation; it is never bootstrapped
    r.next_obs = obs;
  } else {
    ++cursor_;
    r.next_obs = observations_[cursor_];
  }
  return r;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "step,timestamp,a0,a1,flow1,pump_f,flow2,q1,q2,q_target,reward\n";
  for (const TraceRow& t : trace) {
    out << t.step << ',' << format_iso8601(t.timestamp);
    for (double v : {t.action.a0, t.action.a1, t.flow1, t.pump_f, t.flow2, t.q1, t.q2, t.q_target, t.reward})
      out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace dhc
