#include "dhc/agent.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"
#include "dhc/neural_io.hpp"

namespace dhc {

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) out.push_back(static_cast<int>(parse_int(item)));
  return out;
}

std::string int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

std::vector<std::vector<std::string>> read_manifest(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<std::string>> lines;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::vector<std::string> t;
    for (std::string w; ls >> w;) t.push_back(w);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  std::istringstream hs{std::string(header)};
  std::vector<std::string> expect;
  for (std::string w; hs >> w;) expect.push_back(w);
  if (lines.empty() || lines[0] != expect) throw SchemaError(path.string() + ": expected header '" + std::string(header) + "'");
  return lines;
}

std::ofstream open_manifest(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::ofstream out(std::filesystem::path(dir) / "manifest.txt");
  if (!out) throw IoError("cannot write manifest in " + dir);
  return out;
}

}  // namespace

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (batch_size < 1 || buffer_capacity < 1 || batch_size > buffer_capacity)
    throw ConfigError("need 1 <= batch_size <= buffer_capacity");
  if (warmup_steps < 0 || train_steps < 0) throw ConfigError("warmup_steps and train_steps must be >= 0");
  if (!(ou_dt > 0.0) || !(ou_sigma >= 0.0)) throw ConfigError("ou_dt must be positive and ou_sigma non-negative");
  if (!(actor_final_bound >= 0.0)) throw ConfigError("actor_final_bound must be non-negative");
  for (int h : actor_hidden)
    if (h < 1) throw ConfigError("actor_hidden sizes must be positive");
  for (int h : critic_hidden)
    if (h < 1) throw ConfigError("critic_hidden sizes must be positive");
}

void apply_agent_setting(AgentConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "gamma") c.gamma = parse_double(value);
    else if (key == "tau") c.tau = parse_double(value);
    else if (key == "actor_lr") c.actor_lr = parse_double(value);
    else if (key == "critic_lr") c.critic_lr = parse_double(value);
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(value));
    else if (key == "buffer_capacity") c.buffer_capacity = static_cast<int>(parse_int(value));
    else if (key == "warmup_steps") c.warmup_steps = static_cast<int>(parse_int(value));
    else if (key == "ou_theta") c.ou_theta = parse_double(value);
    else if (key == "ou_sigma") c.ou_sigma = parse_double(value);
    else if (key == "ou_mu") c.ou_mu = parse_double(value);
    else if (key == "ou_dt") c.ou_dt = parse_double(value);
    else if (key == "train_steps") c.train_steps = parse_int(value);
    else if (key == "actor_hidden") c.actor_hidden = parse_int_list(value);
    else if (key == "critic_hidden") c.critic_hidden = parse_int_list(value);
    else if (key == "actor_final_bound") c.actor_final_bound = parse_double(value);
    else throw ConfigError("unknown agent setting '" + key + "'");
  } catch (const InvalidArgument& e) {
    throw ConfigError("agent setting '" + key + "': " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> agent_settings(const AgentConfig& c) {
  return {{"gamma", format_double(c.gamma)},
          {"tau", format_double(c.tau)},
          {"actor_lr", format_double(c.actor_lr)},
          {"critic_lr", format_double(c.critic_lr)},
          {"batch_size", std::to_string(c.batch_size)},
          {"buffer_capacity", std::to_string(c.buffer_capacity)},
          {"warmup_steps", std::to_string(c.warmup_steps)},
          {"ou_theta", format_double(c.ou_theta)},
          {"ou_sigma", format_double(c.ou_sigma)},
          {"ou_mu", format_double(c.ou_mu)},
          {"ou_dt", format_double(c.ou_dt)},
          {"train_steps", std::to_string(c.train_steps)},
          {"actor_hidden", int_list(c.actor_hidden)},
          {"critic_hidden", int_list(c.critic_hidden)},
          {"actor_final_bound", format_double(c.actor_final_bound)}};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("ReplayBuffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[next_] = t;
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw RangeError("ReplayBuffer::at: index out of range");
  return items_[(next_ + i) % items_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (items_.empty()) throw InvalidArgument("ReplayBuffer::sample: buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
  return out;
}

OuState make_ou(const AgentConfig& c) {
  OuState s;
  s.theta = c.ou_theta;
  s.sigma = c.ou_sigma;
  s.mu = c.ou_mu;
  s.dt = c.ou_dt;
  s.x.setConstant(c.ou_mu);
  return s;
}

Eigen::Vector2d ou_next(OuState& s, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double scale = s.sigma * std::sqrt(s.dt);
  for (int i = 0; i < 2; ++i) {
    const double xi = unit(rng);
    s.x(i) += s.theta * (s.mu - s.x(i)) * s.dt + scale * xi;
  }
  if (!s.x.allFinite()) throw NumericError("ou_next: state became non-finite");
  return s.x;
}

Batch make_batch(const std::vector<Transition>& ts, const Standardizer& stats) {
  if (ts.empty()) throw InvalidArgument("make_batch: no transitions");
  const auto n = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd obs(n, 3), next(n, 3);
  Batch b;
  b.actions.resize(n, 2);
  b.rewards.resize(n);
  b.done.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = ts[static_cast<std::size_t>(i)];
    obs.row(i) = t.obs.row();
    next.row(i) = t.next_obs.row();
    b.actions(i, 0) = t.action.a0;
    b.actions(i, 1) = t.action.a1;
    b.rewards(i) = t.reward;
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  b.obs = stats.apply(obs);
  b.next_obs = stats.apply(next);
  return b;
}

DdpgAgent make_agent(const AgentConfig& config, const Standardizer& obs_stats, std::uint64_t seed) {
  config.validate();
  if (obs_stats.dim() != 3) throw ShapeError("make_agent: observation statistics must have 3 columns");
  DdpgAgent a;
  a.config = config;
  a.obs_stats = obs_stats;
  nn::InitOptions actor_init;
  actor_init.final_layer_bound = config.actor_final_bound;
  a.actor = nn::mlp_init<double>(layer_sizes(3, config.actor_hidden, 2), nn::Activation::relu, nn::Activation::tanh,
                                 seed, actor_init);
  a.critic = nn::mlp_init<double>(layer_sizes(5, config.critic_hidden, 1), nn::Activation::relu,
                                  nn::Activation::identity, seed + 1);
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  a.actor_opt = nn::adam_init(a.actor, config.actor_lr);
  a.critic_opt = nn::adam_init(a.critic, config.critic_lr);
  return a;
}

Action actor_action(const nn::Mlp<double>& actor, const Standardizer& obs_stats, const Observation& obs) {
  const Eigen::MatrixXd out = nn::forward(actor, obs_stats.apply(obs.row()));
  return {out(0, 0), out(0, 1)};
}

Action select_action(const DdpgAgent& agent, const Observation& obs, OuState* ou, std::mt19937_64* rng) {
  Action a = actor_action(agent.actor, agent.obs_stats, obs);
  if (ou) {
    if (!rng) throw InvalidArgument("select_action: exploration needs a random generator");
    const Eigen::Vector2d noise = ou_next(*ou, *rng);
    a.a0 = std::clamp(a.a0 + noise(0), -1.0, 1.0);
    a.a1 = std::clamp(a.a1 + noise(1), -1.0, 1.0);
  }
  return a;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) {
  if (obs.rows() != actions.rows()) throw ShapeError("critic_input: row mismatch");
  Eigen::MatrixXd x(obs.rows(), obs.cols() + actions.cols());
  x << obs, actions;
  return x;
}

double critic_update(nn::Mlp<double>& critic, nn::AdamState<double>& opt, const nn::Mlp<double>& target_actor,
                     const nn::Mlp<double>& target_critic, const Batch& batch, double gamma) {
  if (batch.obs.rows() == 0) throw InvalidArgument("critic_update: empty batch");
  const Eigen::MatrixXd next_a = nn::forward(target_actor, batch.next_obs);
  const Eigen::MatrixXd next_q = nn::forward(target_critic, critic_input(batch.next_obs, next_a));
  const Eigen::VectorXd y =
      batch.rewards + gamma * (Eigen::VectorXd::Ones(batch.done.size()) - batch.done).cwiseProduct(next_q.col(0));
  const auto lg = nn::backward_mse(critic, critic_input(batch.obs, batch.actions), y);
  nn::adam_step(critic, lg.grads, opt);
  return lg.loss;
}

PolicyObjective policy_objective(const nn::Mlp<double>& actor, const nn::Mlp<double>& critic,
                                 const Eigen::MatrixXd& obs) {
  if (obs.rows() == 0) throw InvalidArgument("policy_objective: empty batch");
  const auto actor_cache = nn::forward_cached(actor, obs);
  const Eigen::MatrixXd x = critic_input(obs, actor_cache.output());
  const auto critic_cache = nn::forward_cached(critic, x);
  const double n = static_cast<double>(obs.rows());
  const Eigen::MatrixXd head = Eigen::MatrixXd::Constant(obs.rows(), 1, 1.0 / n);
  const auto critic_vjp = nn::backward_from_cache(critic, critic_cache, head);
  const Eigen::MatrixXd d_action = critic_vjp.input_grads.rightCols(actor.output_dim());
  auto actor_vjp = nn::backward_from_cache(actor, actor_cache, d_action);
  return {critic_cache.output().mean(), std::move(actor_vjp.param_grads)};
}

double actor_update(nn::Mlp<double>& actor, nn::AdamState<double>& opt, const nn::Mlp<double>& critic,
                    const Batch& batch) {
  PolicyObjective j = policy_objective(actor, critic, batch.obs);
  // ascend J by descending -J
  for (auto& w : j.grads.weights) w = -w;
  for (auto& b : j.grads.biases) b = -b;
  nn::adam_step(actor, j.grads, opt);
  return j.value;
}

TrainResult train_ddpg(HeatingEnv& env, const AgentConfig& config, std::uint64_t seed, const DdpgAgent* init,
                       const TrainHooks& hooks) {
  config.validate();
  TrainResult result;
  DdpgAgent& agent = result.agent;
  if (init) {
    agent = *init;
    agent.config = config;
    agent.actor_opt = nn::adam_init(agent.actor, config.actor_lr);
    agent.critic_opt = nn::adam_init(agent.critic, config.critic_lr);
  } else {
    agent = make_agent(config, env.observation_stats(), seed);
  }

  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  std::uniform_int_distribution<std::size_t> start_dist(0, env.max_start());
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  long steps = 0;
  int episode = 0;
  while (steps < config.train_steps) {
    Observation obs = env.reset(start_dist(rng), rng());
    OuState ou = make_ou(config);
    double total = 0.0;
    for (;;) {
      const Action a = select_action(agent, obs, &ou, &rng);
      const StepResult r = env.step(a);
      buffer.push({obs, a, r.reward, r.next_obs, r.done});
      total += r.reward;
      obs = r.next_obs;
      ++steps;
      if (steps > config.warmup_steps && buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
        const Batch batch = make_batch(buffer.sample(static_cast<std::size_t>(config.batch_size), rng), agent.obs_stats);
        critic_update(agent.critic, agent.critic_opt, agent.target_actor, agent.target_critic, batch, config.gamma);
        actor_update(agent.actor, agent.actor_opt, agent.critic, batch);
        nn::soft_update(agent.target_actor, agent.actor, config.tau);
        nn::soft_update(agent.target_critic, agent.critic, config.tau);
      }
      if (r.done) {
        result.learning_curve.push_back(total);
        if (hooks.on_episode) hooks.on_episode(episode, total);
        ++episode;
        break;
      }
      if (steps >= config.train_steps) break;
    }
  }
  return result;
}

void write_learning_curve_csv(std::ostream& out, const std::vector<double>& curve) {
  out << "episode,total_reward\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << format_double(curve[i]) << '\n';
}

namespace {

void write_stats(std::ostream& out, const Standardizer& s) {
  for (auto [key, row] : {std::pair{"obs_mean", &s.mean}, std::pair{"obs_scale", &s.scale}, std::pair{"obs_min", &s.min},
                          std::pair{"obs_max", &s.max}}) {
    out << key;
    for (Eigen::Index i = 0; i < row->size(); ++i) out << ' ' << format_double((*row)(i));
    out << '\n';
  }
}

Eigen::RowVectorXd stats_row(const std::vector<std::string>& t) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(t.size() - 1));
  for (std::size_t i = 1; i < t.size(); ++i) v(static_cast<Eigen::Index>(i - 1)) = parse_double(t[i]);
  return v;
}

}  // namespace

void save_agent(const std::string& dir, const DdpgAgent& agent) {
  std::ofstream m = open_manifest(dir);
  nn::save_mlp_file((std::filesystem::path(dir) / "actor.mlp").string(), agent.actor);
  nn::save_mlp_file((std::filesystem::path(dir) / "critic.mlp").string(), agent.critic);
  m << "ddpg-agent v1\n";
  for (const auto& [k, v] : agent_settings(agent.config)) m << "config " << k << ' ' << v << '\n';
  write_stats(m, agent.obs_stats);
}

DdpgAgent load_agent(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto lines = read_manifest(fs::path(dir) / "manifest.txt", "ddpg-agent v1");
  DdpgAgent a;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "config" && t.size() == 3) apply_agent_setting(a.config, t[1], t[2]);
    else if (t[0] == "obs_mean") a.obs_stats.mean = stats_row(t);
    else if (t[0] == "obs_scale") a.obs_stats.scale = stats_row(t);
    else if (t[0] == "obs_min") a.obs_stats.min = stats_row(t);
    else if (t[0] == "obs_max") a.obs_stats.max = stats_row(t);
    else throw SchemaError("agent manifest: unexpected line starting '" + t[0] + "'");
  }
  a.config.validate();
  if (a.obs_stats.dim() != 3 || a.obs_stats.scale.size() != 3 || a.obs_stats.min.size() != 3 ||
      a.obs_stats.max.size() != 3)
    throw SchemaError("agent manifest: observation statistics must have 3 columns");
  a.actor = nn::load_mlp_file<double>((fs::path(dir) / "actor.mlp").string());
  a.critic = nn::load_mlp_file<double>((fs::path(dir) / "critic.mlp").string());
  if (a.actor.input_dim() != 3 || a.actor.output_dim() != 2 || a.critic.input_dim() != 5 || a.critic.output_dim() != 1)
    throw SchemaError("agent networks have the wrong shape");
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  a.actor_opt = nn::adam_init(a.actor, a.config.actor_lr);
  a.critic_opt = nn::adam_init(a.critic, a.config.critic_lr);
  return a;
}

double default_sl_tolerance(const Dataset& train) {
  if (train.empty()) throw InvalidArgument("default_sl_tolerance: empty dataset");
  double sum = 0.0;
  for (const Sample& s : train.rows) sum += s.q_target;
  return 0.05 * sum / static_cast<double>(train.size());
}

SlController fit_sl_controller(const Dataset& train, double tolerance, std::uint64_t seed, const SlOptions& options) {
  if (!(tolerance >= 0.0)) throw InvalidArgument("fit_sl_controller: tolerance must be non-negative");
  std::vector<const Sample*> chosen;
  for (const Sample& s : train.rows)
    if (std::abs(s.q1 - s.q_target) <= tolerance && std::abs(s.q2 - s.q_target) <= tolerance) chosen.push_back(&s);
  if (chosen.size() < static_cast<std::size_t>(options.min_samples))
    throw SelectionError("fit_sl_controller: only " + std::to_string(chosen.size()) + " samples within " +
                         format_double(tolerance) + " GJ/h of the target on both sides (need " +
                         std::to_string(options.min_samples) + "); try a larger tolerance");

  const auto n = static_cast<Eigen::Index>(chosen.size());
  Eigen::MatrixXd xp(n, 3), xs(n, 4);
  Eigen::VectorXd yp(n), ys(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = *chosen[static_cast<std::size_t>(i)];
    xp.row(i) << s.t_out, s.q_target, s.t1_supply;
    xs.row(i) << s.t_out, s.q_target, s.swts, s.flow1;
    yp(i) = s.flow1;
    ys(i) = s.flow2;
  }
  SlController sl;
  sl.primary = fit_regressor(xp, yp, options.arch, options.steps, seed, options.fit).model;
  sl.secondary = fit_regressor(xs, ys, options.arch, options.steps, seed + 1, options.fit).model;
  std::vector<double> f, flow;
  for (const Sample& s : train.rows) {
    f.push_back(s.pump_f);
    flow.push_back(s.flow2);
  }
  sl.pump = fit_pump_poly(f, flow);
  return sl;
}

Controls sl_controls(const SlController& sl, const Observation& obs, double swts) {
  Eigen::MatrixXd xp(1, 3);
  xp << obs.t_out, obs.q_target, obs.t1_supply;
  const double flow1 = std::clamp(sl.primary.predict(xp)(0), kFlow1Min, kFlow1Max);
  Eigen::MatrixXd xs(1, 4);
  xs << obs.t_out, obs.q_target, swts, flow1;
  const double flow2 = sl.secondary.predict(xs)(0);
  return {flow1, pump_frequency_for_flow(flow2, sl.pump)};
}

void save_sl_controller(const std::string& dir, const SlController& sl) {
  std::ofstream m = open_manifest(dir);
  nn::save_mlp_file((std::filesystem::path(dir) / "primary.mlp").string(), sl.primary.net);
  nn::save_mlp_file((std::filesystem::path(dir) / "secondary.mlp").string(), sl.secondary.net);
  m << "sl-controller v1\n";
  m << "pump " << format_double(sl.pump.a2) << ' ' << format_double(sl.pump.a1) << ' ' << format_double(sl.pump.a0)
    << '\n';
  m << "model primary\n";
  write_regressor_stats(m, sl.primary);
  m << "model secondary\n";
  write_regressor_stats(m, sl.secondary);
}

SlController load_sl_controller(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto lines = read_manifest(fs::path(dir) / "manifest.txt", "sl-controller v1");
  if (lines.size() != 2 + 2 * 6 || lines[1].size() != 4 || lines[1][0] != "pump")
    throw SchemaError("sl manifest: bad layout");
  SlController sl;
  sl.pump = {parse_double(lines[1][1]), parse_double(lines[1][2]), parse_double(lines[1][3])};
  std::size_t pos = 2;
  for (auto [name, reg] : {std::pair{"primary", &sl.primary}, std::pair{"secondary", &sl.secondary}}) {
    if (lines[pos] != std::vector<std::string>{"model", name}) throw SchemaError("sl manifest: expected model " + std::string(name));
    ++pos;
    reg->net = nn::load_mlp_file<double>((fs::path(dir) / (std::string(name) + ".mlp")).string());
    read_regressor_stats(lines, pos, *reg);
  }
  if (sl.primary.net.input_dim() != 3 || sl.secondary.net.input_dim() != 4)
    throw SchemaError("sl controller networks have the wrong shape");
  return sl;
}

}  // namespace dhc
