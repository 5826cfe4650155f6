#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dhc/agent.hpp"
#include "dhc/errors.hpp"
#include "support/finite_diff.hpp"

using namespace dhc;

namespace {

Transition transition(double tag) {
  Transition t;
  t.obs = {tag, 70.0, 5.0};
  t.action = {0.1, -0.1};
  t.reward = -tag;
  t.next_obs = {tag + 1.0, 70.0, 5.0};
  return t;
}

Dataset agent_dataset(int days, double interval_minutes = 30.0) {
  PlantParams plant;
  StandardParams standard;
  DatasetOptions opts;
  opts.interval_minutes = interval_minutes;
  const WeatherSeries season = gen_weather(96, 31);
  const WeatherSeries w = days >= 96 ? season : slice_weather(season, 20, days);
  return gen_dataset(plant, standard, w, default_operator_policy(plant, standard, 32), 33, opts);
}

AgentConfig small_config() {
  AgentConfig c;
  c.actor_hidden = {16};
  c.critic_hidden = {16};
  c.batch_size = 16;
  c.warmup_steps = 20;
  c.buffer_capacity = 1000;
  c.train_steps = 100;
  return c;
}

}  // namespace

TEST_CASE("ou process") {
  std::mt19937_64 rng(1);
  OuState still;
  still.sigma = 0.0;
  still.mu = 0.4;
  still.x.setConstant(0.4);
  for (int i = 0; i < 100; ++i) CHECK(ou_next(still, rng)(0) == 0.4);

  OuState decay;
  decay.sigma = 0.0;
  decay.mu = 0.0;
  decay.theta = 0.15;
  decay.x.setConstant(1.0);
  CHECK(ou_next(decay, rng)(0) == doctest::Approx(0.85).epsilon(1e-15));

  OuState s;
  s.theta = 0.15;
  s.sigma = 0.2;
  s.dt = 1.0;
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < 1000; ++i) ou_next(s, rng);
  for (int i = 0; i < n; ++i) {
    const double v = ou_next(s, rng)(1);
    sum += v;
    sum2 += v * v;
  }
  const double sample_std = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  const double expected = s.sigma * std::sqrt(s.dt / (2.0 * s.theta * s.dt - s.theta * s.theta * s.dt * s.dt));
  CHECK(std::abs(sample_std - expected) <= 0.1 * expected);
}

TEST_CASE("replay buffer") {
  ReplayBuffer buf(5);
  for (int i = 0; i < 8; ++i) buf.push(transition(i));
  CHECK(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.at(i).obs.t_out == 3.0 + i);

  std::mt19937_64 a(3), b(3);
  const auto sa = buf.sample(50, a);
  const auto sb = buf.sample(50, b);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].obs.t_out == sb[i].obs.t_out);

  std::mt19937_64 rng(4);
  std::map<double, int> counts;
  for (const auto& t : buf.sample(50000, rng)) ++counts[t.obs.t_out];
  CHECK(counts.size() == 5);
  for (const auto& [k, c] : counts) CHECK(std::abs(c - 10000) < 400);
  CHECK_THROWS_AS(ReplayBuffer(0), InvalidArgument);
}

TEST_CASE("action selection") {
  AgentConfig cfg = small_config();
  DdpgAgent agent = make_agent(cfg, Standardizer::identity(3), 5);
  const Observation obs{-5.0, 65.0, 6.0};
  const Action x = select_action(agent, obs);
  const Action y = select_action(agent, obs);
  CHECK(x.a0 == y.a0);
  CHECK(x.a1 == y.a1);

  for (auto& w : agent.actor.weights) w.setZero();
  for (auto& b : agent.actor.biases) b.setZero();
  const Action zero = select_action(agent, obs);
  CHECK(zero.a0 == 0.0);
  CHECK(zero.a1 == 0.0);

  OuState push;
  push.sigma = 0.0;
  push.theta = 0.0;
  push.x << 3.0, -3.0;
  std::mt19937_64 rng(1);
  const Action clipped = select_action(agent, obs, &push, &rng);
  CHECK(clipped.a0 == 1.0);
  CHECK(clipped.a1 == -1.0);
}

TEST_CASE("critic targets") {
  AgentConfig cfg = small_config();
  DdpgAgent agent = make_agent(cfg, Standardizer::identity(3), 6);
  std::vector<Transition> ts;
  for (int i = 0; i < 8; ++i) ts.push_back(transition(0.1 * i));
  const Batch batch = make_batch(ts, agent.obs_stats);
  const Eigen::VectorXd q = nn::forward(agent.critic, critic_input(batch.obs, batch.actions)).col(0);
  const double expected = (q - batch.rewards).squaredNorm() / q.size();

  auto copy = agent;
  CHECK(critic_update(copy.critic, copy.critic_opt, copy.target_actor, copy.target_critic, batch, 0.0) ==
        doctest::Approx(expected).epsilon(1e-12));

  std::vector<Transition> terminal = ts;
  for (auto& t : terminal) t.done = true;
  const Batch done_batch = make_batch(terminal, agent.obs_stats);
  auto copy2 = agent;
  CHECK(critic_update(copy2.critic, copy2.critic_opt, copy2.target_actor, copy2.target_critic, done_batch, 0.9) ==
        doctest::Approx(expected).epsilon(1e-12));

  auto copy3 = agent;
  CHECK(critic_update(copy3.critic, copy3.critic_opt, copy3.target_actor, copy3.target_critic, batch, 0.9) !=
        doctest::Approx(expected));

  Batch empty;
  empty.obs.resize(0, 3);
  CHECK_THROWS_AS(critic_update(copy.critic, copy.critic_opt, copy.target_actor, copy.target_critic, empty, 0.9),
                  InvalidArgument);
}

TEST_CASE("critic converges on a repeated transition") {
  AgentConfig cfg = small_config();
  DdpgAgent agent = make_agent(cfg, Standardizer::identity(3), 7);
  const Transition t = transition(0.3);
  const Batch batch = make_batch(std::vector<Transition>(4, t), agent.obs_stats);
  const double gamma = 0.9;
  const Eigen::MatrixXd next_a = nn::forward(agent.target_actor, batch.next_obs.topRows(1));
  const double bootstrap = nn::forward(agent.target_critic, critic_input(batch.next_obs.topRows(1), next_a))(0, 0);
  const double target = t.reward + gamma * bootstrap;
  for (int i = 0; i < 3000; ++i)
    critic_update(agent.critic, agent.critic_opt, agent.target_actor, agent.target_critic, batch, gamma);
  const double q = nn::forward(agent.critic, critic_input(batch.obs.topRows(1), batch.actions.topRows(1)))(0, 0);
  CHECK(std::abs(q - target) < 1e-3);
}

TEST_CASE("policy gradient matches finite differences") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto actor = nn::mlp_init<double>({3, 5, 2}, nn::Activation::tanh, nn::Activation::tanh, 100 + trial);
    const auto critic = nn::mlp_init<double>({5, 6, 1}, nn::Activation::tanh, nn::Activation::identity, 200 + trial);
    Eigen::MatrixXd obs(7, 3);
    for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = unit(rng);
    const auto analytic = policy_objective(actor, critic, obs);
    const auto numeric = testing::numeric_param_grads(actor, [&](const nn::Mlp<double>& a) {
      return nn::forward(critic, critic_input(obs, nn::forward(a, obs))).mean();
    });
    CHECK(testing::max_relative_error(analytic.grads, numeric) < 1e-4);
    CHECK(analytic.value == doctest::Approx(nn::forward(critic, critic_input(obs, nn::forward(actor, obs))).mean()));
  }
}

TEST_CASE("actor ignores a critic that ignores actions") {
  AgentConfig cfg = small_config();
  DdpgAgent agent = make_agent(cfg, Standardizer::identity(3), 9);
  agent.critic.weights[0].rightCols(2).setZero();
  std::vector<Transition> ts;
  for (int i = 0; i < 8; ++i) ts.push_back(transition(0.2 * i));
  const Batch batch = make_batch(ts, agent.obs_stats);
  const auto before = agent.actor;
  actor_update(agent.actor, agent.actor_opt, agent.critic, batch);
  for (std::size_t k = 0; k < before.num_layers(); ++k) {
    CHECK(agent.actor.weights[k] == before.weights[k]);
    CHECK(agent.actor.biases[k] == before.biases[k]);
  }
}

TEST_CASE("actor climbs a frozen quadratic critic") {
  // fit a critic to Q(s, a) = -|a - a*|^2 on one state, freeze it, then train the actor on it
  const Eigen::RowVector2d best(0.4, -0.3);
  const Eigen::RowVector3d state(0.2, -0.1, 0.5);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto critic = nn::mlp_init<double>({5, 32, 32, 1}, nn::Activation::tanh, nn::Activation::identity, 11);
  auto copt = nn::adam_init(critic, 3e-3);
  Eigen::MatrixXd x(64, 5), y(64, 1);
  for (int it = 0; it < 4000; ++it) {
    for (int r = 0; r < 64; ++r) {
      const Eigen::RowVector2d a(u(rng), u(rng));
      x.row(r) << state, a;
      y(r, 0) = -(a - best).squaredNorm();
    }
    nn::adam_step(critic, nn::backward_mse(critic, x, y).grads, copt);
  }

  auto actor = nn::mlp_init<double>({3, 16, 2}, nn::Activation::relu, nn::Activation::tanh, 12);
  auto aopt = nn::adam_init(actor, 1e-2);
  Batch batch;
  batch.obs = state.replicate(8, 1);
  batch.actions = Eigen::MatrixXd::Zero(8, 2);
  const double start = policy_objective(actor, critic, batch.obs).value;
  for (int it = 0; it < 1000; ++it) actor_update(actor, aopt, critic, batch);
  const Eigen::MatrixXd a = nn::forward(actor, Eigen::MatrixXd(state));
  CHECK(std::abs(a(0, 0) - best(0)) < 0.05);
  CHECK(std::abs(a(0, 1) - best(1)) < 0.05);
  CHECK(policy_objective(actor, critic, batch.obs).value > start);
}

TEST_CASE("target networks follow soft updates") {
  DdpgAgent agent = make_agent(small_config(), Standardizer::identity(3), 13);
  auto online = nn::mlp_init<double>({3, 16, 2}, nn::Activation::relu, nn::Activation::tanh, 14);
  auto frozen = agent.target_actor;
  nn::soft_update(frozen, online, 0.0);
  CHECK(frozen.weights[0] == agent.target_actor.weights[0]);
  nn::soft_update(frozen, online, 1.0);
  CHECK(frozen.weights[0] == online.weights[0]);
  CHECK(frozen.biases[1] == online.biases[1]);
}

TEST_CASE("training is reproducible") {
  const Dataset ds = agent_dataset(4);
  EnvConfig ec;
  ec.episode_len = 50;
  AgentConfig cfg = small_config();
  auto run = [&] {
    HeatingEnv env(ds, ec, std::make_shared<PlantBackend>(PlantParams{}, StandardParams{}));
    return train_ddpg(env, cfg, 42);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.learning_curve.size() == 2);
  CHECK(a.learning_curve == b.learning_curve);
  CHECK(a.agent.actor.weights[0] == b.agent.actor.weights[0]);

  std::ostringstream csv;
  write_learning_curve_csv(csv, a.learning_curve);
  CHECK(csv.str().rfind("episode,total_reward\n0,", 0) == 0);

  int calls = 0;
  HeatingEnv env(ds, ec, std::make_shared<PlantBackend>(PlantParams{}, StandardParams{}));
  train_ddpg(env, cfg, 1, &a.agent, {[&](int, double) { ++calls; }});
  CHECK(calls == 2);
}

TEST_CASE("greedy policy beats fixed flows on the plant") {
  // whole season: the pipe loss floor is ~0.6 GJ/h, so short cold slices cannot reach the ratio
  const Dataset ds = agent_dataset(96);
  HeatingEnv env(ds, EnvConfig{}, std::make_shared<PlantBackend>(PlantParams{}, StandardParams{}));
  AgentConfig cfg;
  cfg.train_steps = 30000;
  const TrainResult res = train_ddpg(env, cfg, 3);
  PlantParams plant;
  StandardParams standard;
  double err_agent = 0.0, err_fixed = 0.0;
  for (const Sample& s : ds.rows) {
    const auto obs = Observation::of(s);
    const auto m = action_to_controls(actor_action(res.agent.actor, res.agent.obs_stats, obs));
    const auto st = plant_steady_state(plant, standard, s.t1_supply, m.controls.flow1, pump_flow(m.controls.pump_f), s.t_out);
    err_agent += std::abs(st.q1 - s.q_target) + std::abs(st.q2 - s.q_target);
    const auto fixed = action_to_controls(Action{0.0, 0.0}).controls;
    const auto fx = plant_steady_state(plant, standard, s.t1_supply, fixed.flow1, pump_flow(fixed.pump_f), s.t_out);
    err_fixed += std::abs(fx.q1 - s.q_target) + std::abs(fx.q2 - s.q_target);
  }
  MESSAGE("greedy/fixed error ratio " << err_agent / err_fixed);
  CHECK(err_agent <= 0.25 * err_fixed);
}

TEST_CASE("agent config") {
  AgentConfig c;
  apply_agent_setting(c, "gamma", "0.5");
  apply_agent_setting(c, "actor_hidden", "8,4");
  CHECK(c.gamma == 0.5);
  CHECK(c.actor_hidden == std::vector<int>{8, 4});
  CHECK_THROWS_AS(apply_agent_setting(c, "gama", "0.5"), ConfigError);
  CHECK_THROWS_AS(apply_agent_setting(c, "tau", "fast"), ConfigError);
  AgentConfig back;
  for (const auto& [k, v] : agent_settings(c)) apply_agent_setting(back, k, v);
  CHECK(back.gamma == 0.5);
  CHECK(back.actor_hidden == c.actor_hidden);
  c.batch_size = 2000;
  c.buffer_capacity = 100;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AgentConfig{};
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("agent persistence") {
  DdpgAgent agent = make_agent(small_config(), Standardizer::identity(3), 15);
  agent.obs_stats.mean << 1.0, 2.0, 3.0;
  const std::string dir = (std::filesystem::temp_directory_path() / "dhc_agent_roundtrip").string();
  save_agent(dir, agent);
  const DdpgAgent back = load_agent(dir);
  const Observation obs{-3.0, 66.0, 5.5};
  const Action a = select_action(agent, obs), b = select_action(back, obs);
  CHECK(a.a0 == b.a0);
  CHECK(a.a1 == b.a1);
  CHECK(back.config.actor_hidden == agent.config.actor_hidden);
  std::filesystem::remove_all(dir);
}

TEST_CASE("supervised controller") {
  const Dataset ds = agent_dataset(8);
  SlOptions opts;
  opts.steps = 300;
  const auto all = fit_sl_controller(ds, std::numeric_limits<double>::infinity(), 1, opts);
  CHECK(all.primary.input.dim() == 3);
  CHECK(all.secondary.input.dim() == 4);
  CHECK(all.primary.input.mean(0) == doctest::Approx(ds.conditions()[0].t_out).epsilon(10.0));
  CHECK_THROWS_AS(fit_sl_controller(ds, 0.0, 1, opts), SelectionError);

  const Controls c = sl_controls(all, Observation::of(ds[0]), ds[0].swts);
  CHECK(c.flow1 >= kFlow1Min);
  CHECK(c.flow1 <= kFlow1Max);
  CHECK(c.pump_f >= kPumpMinHz);
  CHECK(c.pump_f <= kPumpMaxHz);

  const std::string dir = (std::filesystem::temp_directory_path() / "dhc_sl_roundtrip").string();
  save_sl_controller(dir, all);
  const SlController back = load_sl_controller(dir);
  const Controls d = sl_controls(back, Observation::of(ds[3]), ds[3].swts);
  const Controls e = sl_controls(all, Observation::of(ds[3]), ds[3].swts);
  CHECK(d.flow1 == e.flow1);
  CHECK(d.pump_f == e.pump_f);
  std::filesystem::remove_all(dir);
}

TEST_CASE("supervised controller recovers a linear policy") {
  // operator sets flow1 = 60 - 1.5 t_out (+ noise); every sample counts as near-optimal
  Dataset ds = agent_dataset(8);
  std::mt19937_64 rng(16);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (Sample& s : ds.rows) {
    s.flow1 = 60.0 - 1.5 * s.t_out + noise(rng);
    s.q1 = s.q2 = s.q_target;
  }
  SlOptions opts;
  opts.steps = 4000;
  const auto sl = fit_sl_controller(ds, 0.0, 2, opts);
  double worst = 0.0;
  for (const Sample& s : ds.rows) {
    const Controls c = sl_controls(sl, Observation::of(s), s.swts);
    worst = std::max(worst, std::abs(c.flow1 - (60.0 - 1.5 * s.t_out)));
  }
  MESSAGE("worst flow1 deviation " << worst);
  CHECK(worst < 4.0 * 0.5);
}
