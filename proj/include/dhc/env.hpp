#pragma once

// Dataset-driven control environment. The observation sequence is the
// dataset's exogenous conditions, and the action only determines the heat
// delivered at the current sample.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "dhc/controls.hpp"
#include "dhc/data.hpp"
#include "dhc/plant.hpp"
#include "dhc/standardize.hpp"
#include "dhc/surrogate.hpp"

namespace dhc {

struct Observation {
  double t_out = 0.0;
  double t1_supply = 0.0;
  double q_target = 0.0;

  static Observation of(const Sample& s) { return {s.t_out, s.t1_supply, s.q_target}; }
  static Observation of(const OperatingCondition& c) { return {c.t_out, c.t1_supply, c.q_target}; }
  Eigen::RowVector3d row() const { return {t_out, t1_supply, q_target}; }
};

struct Action {
  double a0 = 0.0;  // primary flow
  double a1 = 0.0;  // pump frequency
};

struct MappedControls {
  Controls controls;
  Action applied;  // after clipping
  bool clipped = false;
};

// flow1 = 55 + 45 a0, f = 35 + 15 a1, actions clipped to [-1, 1] first.
MappedControls action_to_controls(Action a);
// Inverse map, clipped to the action box.
Action controls_to_action(const Controls& c);

enum class RewardKind { q1, q2, q1q2 };
std::string_view to_string(RewardKind kind);
RewardKind reward_kind_from_string(std::string_view s);

double reward(RewardKind kind, double q1, double q2, double q_target);

struct HeatResponse {
  double q1 = 0.0;
  double q2 = 0.0;
  double flow2 = 0.0;
};

// Maps conditions and controls to delivered heat on both sides.
class HeatBackend {
 public:
  virtual ~HeatBackend() = default;
  virtual HeatResponse respond(const Observation& obs, const Controls& controls) = 0;
  // Reseeds any measurement noise.
  virtual void reseed(std::uint64_t) {}
};

class PlantBackend final : public HeatBackend {
 public:
  PlantBackend(PlantParams plant, StandardParams standard, bool measurement_noise = false);
  HeatResponse respond(const Observation& obs, const Controls& controls) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

 private:
  PlantParams plant_;
  StandardParams standard_;
  bool noise_;
  std::mt19937_64 rng_;
};

class SurrogateBackend final : public HeatBackend {
 public:
  explicit SurrogateBackend(SurrogateSet set) : set_(std::move(set)) {}
  HeatResponse respond(const Observation& obs, const Controls& controls) override;

 private:
  SurrogateSet set_;
};

enum class BackendKind { surrogate, plant_oracle };
std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

struct EnvConfig {
  RewardKind reward_kind = RewardKind::q1q2;
  int episode_len = 500;
  BackendKind backend = BackendKind::plant_oracle;
  bool normalize_observations = true;
};

struct StepInfo {
  double q1 = 0.0;
  double q2 = 0.0;
  double flow1 = 0.0;
  double flow2 = 0.0;
  double pump_f = 0.0;
  bool clipped = false;
};

struct StepResult {
  Observation next_obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class HeatingEnv {
 public:
  HeatingEnv(const Dataset& data, EnvConfig config, std::shared_ptr<HeatBackend> backend);

  Observation reset(std::size_t episode_start, std::uint64_t seed);
  StepResult step(Action a);

  const EnvConfig& config() const { return config_; }
  std::size_t size() const { return observations_.size(); }
  std::size_t max_start() const { return observations_.size() - static_cast<std::size_t>(config_.episode_len); }
  const Observation& observation(std::size_t i) const { return observations_.at(i); }
  Seconds timestamp(std::size_t i) const { return timestamps_.at(i); }
  // z-score statistics of the observations, or identity when normalization is off
  const Standardizer& observation_stats() const { return stats_; }
  bool active() const { return active_; }
  std::size_t cursor() const { return cursor_; }

 private:
  EnvConfig config_;
  std::shared_ptr<HeatBackend> backend_;
  std::vector<Observation> observations_;
  std::vector<Seconds> timestamps_;
  Standardizer stats_;
  std::size_t cursor_ = 0;
  int steps_taken_ = 0;
  bool active_ = false;
};

struct TraceRow {
  int step = 0;
  Seconds timestamp = 0;
  Action action;
  double flow1 = 0.0;
  double pump_f = 0.0;
  double flow2 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q_target = 0.0;
  double reward = 0.0;
};

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace dhc
