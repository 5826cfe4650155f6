#pragma once

// DDPG actor-critic over the heating environment, plus the supervised-learning
// flow controller used as a comparison.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dhc/env.hpp"
#include "dhc/neural.hpp"
#include "dhc/regressor.hpp"
#include "dhc/standardize.hpp"

namespace dhc {

struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_size = 64;
  int buffer_capacity = 100000;
  int warmup_steps = 1000;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_mu = 0.0;
  double ou_dt = 1.0;
  long train_steps = 100000;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  // Last actor layer drawn from U(-b, b) so the untrained policy sits near the
  // middle of the action box.
  double actor_final_bound = 3e-3;

  void validate() const;
};

// Sets one field from its config-file name; unknown keys throw ConfigError.
void apply_agent_setting(AgentConfig& config, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> agent_settings(const AgentConfig& config);

struct Transition {
  Observation obs;
  Action action;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Uniform with replacement.
  std::vector<Transition> sample(std::size_t n, std::mt19937_64& rng) const;
  // i-th oldest stored transition
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
};

struct OuState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double theta = 0.15;
  double sigma = 0.2;
  double mu = 0.0;
  double dt = 1.0;
};

OuState make_ou(const AgentConfig& config);
// x <- x + theta (mu - x) dt + sigma sqrt(dt) xi; returns the new x.
Eigen::Vector2d ou_next(OuState& state, std::mt19937_64& rng);

// Minibatch in network coordinates: normalized observations.
struct Batch {
  Eigen::MatrixXd obs;       // n x 3
  Eigen::MatrixXd actions;   // n x 2
  Eigen::VectorXd rewards;   // n
  Eigen::MatrixXd next_obs;  // n x 3
  Eigen::VectorXd done;      // n, 1 for terminal
};

Batch make_batch(const std::vector<Transition>& transitions, const Standardizer& obs_stats);

struct DdpgAgent {
  AgentConfig config;
  Standardizer obs_stats;
  nn::Mlp<double> actor;   // 3 -> 2, tanh output
  nn::Mlp<double> critic;  // 3 + 2 -> 1
  nn::Mlp<double> target_actor;
  nn::Mlp<double> target_critic;
  nn::AdamState<double> actor_opt;
  nn::AdamState<double> critic_opt;
};

DdpgAgent make_agent(const AgentConfig& config, const Standardizer& obs_stats, std::uint64_t seed);

// Greedy action of an actor on one raw observation.
Action actor_action(const nn::Mlp<double>& actor, const Standardizer& obs_stats, const Observation& obs);
// With `ou` non-null, OU noise is added and the result clipped to [-1, 1].
Action select_action(const DdpgAgent& agent, const Observation& obs, OuState* ou = nullptr,
                     std::mt19937_64* rng = nullptr);

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions);

// One step on the mean squared TD error; returns the loss before the step.
double critic_update(nn::Mlp<double>& critic, nn::AdamState<double>& opt, const nn::Mlp<double>& target_actor,
                     const nn::Mlp<double>& target_critic, const Batch& batch, double gamma);

// J = mean Q(s, mu(s)) over the batch and dJ/d(actor parameters).
struct PolicyObjective {
  double value = 0.0;
  nn::GradientSet<double> grads;
};
PolicyObjective policy_objective(const nn::Mlp<double>& actor, const nn::Mlp<double>& critic,
                                 const Eigen::MatrixXd& obs);

// One ascent step on J; returns J before the step.
double actor_update(nn::Mlp<double>& actor, nn::AdamState<double>& opt, const nn::Mlp<double>& critic,
                    const Batch& batch);

struct TrainResult {
  DdpgAgent agent;
  std::vector<double> learning_curve;  // total reward per completed episode
};

struct TrainHooks {
  // Called after each completed episode with its index and total reward.
  std::function<void(int, double)> on_episode;
};

// Trains from scratch, or continues from `init` when given (its observation
// statistics are kept).
TrainResult train_ddpg(HeatingEnv& env, const AgentConfig& config, std::uint64_t seed,
                       const DdpgAgent* init = nullptr, const TrainHooks& hooks = {});

void write_learning_curve_csv(std::ostream& out, const std::vector<double>& curve);

// Directory with actor.mlp, critic.mlp and manifest.txt.
void save_agent(const std::string& dir, const DdpgAgent& agent);
DdpgAgent load_agent(const std::string& dir);

// Supervised comparison controller: primary (t_out, q_target, t1_supply) -> flow1,
// secondary (t_out, q_target, swts, flow1) -> flow2, pump frequency from the
// pump curve.
struct SlController {
  Regressor primary;
  Regressor secondary;
  PumpPoly pump;
};

struct SlOptions {
  Architecture arch{2, 64};
  int steps = 5000;
  int min_samples = 100;
  FitOptions fit;
};

// Default selection tolerance: 5% of the mean target heat.
double default_sl_tolerance(const Dataset& train);

SlController fit_sl_controller(const Dataset& train, double tolerance, std::uint64_t seed,
                               const SlOptions& options = {});

// Controls for one sample; `swts` is the measured secondary supply temperature.
Controls sl_controls(const SlController& sl, const Observation& obs, double swts);

void save_sl_controller(const std::string& dir, const SlController& sl);
SlController load_sl_controller(const std::string& dir);

}  // namespace dhc
