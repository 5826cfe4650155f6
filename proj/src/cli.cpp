#include "dhc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>

#include "CLI11.hpp"
#include "dhc/balance.hpp"
#include "dhc/data.hpp"
#include "dhc/errors.hpp"
#include "dhc/evaluate.hpp"
#include "dhc/format.hpp"
#include "dhc/metrics.hpp"
#include "dhc/runconfig.hpp"
#include "dhc/surrogate.hpp"

namespace dhc {

namespace {

namespace fs = std::filesystem;

// Flags are recorded as (key, value) pairs and applied after the config file,
// so a flag always overrides the file.
struct Settings {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  }

  void common(CLI::App* app) {
    app->add_option("--config", config_path, "key = value settings file");
    bind(app, "--seed", "seed", "random seed");
    app->add_option_function<std::vector<std::string>>(
        "--set",
        [this](const std::vector<std::string>& items) {
          for (const auto& kv : items) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
          }
        },
        "extra key=value settings")
        ->take_all();
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) read_run_config_file(config_path, c);
    for (const auto& [k, v] : overrides) apply_run_setting(c, k, v);
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

Dataset pick_split(const Dataset& ds, const std::string& split) {
  if (split == "all") return ds;
  const auto parts = split_7_1(ds);
  if (split == "train") return parts.train;
  if (split == "test") return parts.test;
  throw ConfigError("--split must be train, test or all");
}

std::shared_ptr<HeatBackend> make_backend(const RunConfig& c, const std::string& surrogate_dir) {
  if (c.env.backend == BackendKind::surrogate) {
    if (surrogate_dir.empty()) throw ConfigError("surrogate backend needs --surrogate DIR");
    return std::make_shared<SurrogateBackend>(load_surrogate_set(surrogate_dir));
  }
  return std::make_shared<PlantBackend>(c.plant, c.standard);
}

struct Command {
  Settings settings;
  std::function<void(const RunConfig&)> run;
};

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_dispatch(args, out, err);
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"District-heating flow control toolkit", "dhc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  std::vector<std::unique_ptr<Command>> commands;
  std::vector<std::pair<const CLI::App*, Command*>> subs;
  auto add = [&](const std::string& name, const std::string& help) {
    commands.push_back(std::make_unique<Command>());
    CLI::App* sub = app.add_subcommand(name, help);
    commands.back()->settings.common(sub);
    subs.emplace_back(sub, commands.back().get());
    return std::pair{sub, commands.back().get()};
  };

  // gen-data
  {
    auto [sub, cmd] = add("gen-data", "generate a synthetic operating dataset");
    auto& s = cmd->settings;
    s.bind(sub, "--days", "days", "season length in days");
    s.bind(sub, "--interval", "interval_minutes", "sampling interval in minutes");
    sub->add_flag_callback("--dense", [&s] { s.overrides.emplace_back("interval_minutes", "7.5"); },
                           "7.5-minute sampling");
    sub->add_flag_callback("--no-noise", [&s] { s.overrides.emplace_back("measurement_noise", "false"); },
                           "noise-free measurements");
    auto path = std::make_shared<std::string>();
    auto weather_path = std::make_shared<std::string>();
    sub->add_option("--out", *path, "dataset CSV")->required();
    sub->add_option("--weather-out", *weather_path, "hourly weather CSV");
    cmd->run = [&out, path, weather_path](const RunConfig& c) {
      const WeatherSeries w = gen_weather(c.days, c.seed);
      DatasetOptions opts;
      opts.interval_minutes = c.interval_minutes;
      opts.measurement_noise = c.measurement_noise;
      const Dataset ds =
          gen_dataset(c.plant, c.standard, w, default_operator_policy(c.plant, c.standard, c.seed + 1), c.seed + 2, opts);
      auto f = open_out(*path);
      write_dataset_csv(f, ds);
      if (!weather_path->empty()) {
        auto wf = open_out(*weather_path);
        write_weather_csv(wf, w);
      }
      out << "wrote " << ds.size() << " samples over " << ds.day_count() << " days to " << *path << "\n";
    };
  }

  // fit-surrogate
  {
    auto [sub, cmd] = add("fit-surrogate", "fit the tdp/swts/tds models on the 7+1 split");
    auto& s = cmd->settings;
    auto data = std::make_shared<std::string>();
    auto dir = std::make_shared<std::string>();
    sub->add_option("--data", *data, "dataset CSV")->required();
    sub->add_option("--out", *dir, "output directory")->required();
    s.bind(sub, "--layers", "surrogate.layers", "hidden layers");
    s.bind(sub, "--nodes", "surrogate.nodes", "nodes per hidden layer");
    s.bind(sub, "--steps", "surrogate.steps", "training steps per model");
    cmd->run = [&out, data, dir](const RunConfig& c) {
      const auto parts = split_7_1(load_dataset(*data));
      const SurrogateSetFit fit = fit_surrogate_set(parts.train, parts.test, c.surrogate_arch, c.surrogate_steps, c.seed);
      save_surrogate_set(*dir, fit.set);
      auto f = open_out((fs::path(*dir) / "fit_metrics.csv").string());
      f << "model,train_mse,train_mae,test_mse,test_mae,final_loss\n";
      const SurrogateKind kinds[] = {SurrogateKind::tdp, SurrogateKind::swts, SurrogateKind::tds};
      for (int k = 0; k < 3; ++k) {
        const SurrogateFit& m = fit.fits[k];
        f << to_string(kinds[k]) << ',' << format_double(m.train.mse) << ',' << format_double(m.train.mae) << ','
          << format_double(m.test.mse) << ',' << format_double(m.test.mae) << ',' << format_double(m.final_loss) << '\n';
        out << to_string(kinds[k]) << ": test mse " << m.test.mse << " mae " << m.test.mae << "\n";
      }
    };
  }

  // sweep-arch
  {
    auto [sub, cmd] = add("sweep-arch", "architecture sweep for one surrogate");
    auto& s = cmd->settings;
    auto data = std::make_shared<std::string>();
    auto path = std::make_shared<std::string>();
    auto kind = std::make_shared<std::string>("tds");
    sub->add_option("--data", *data, "dataset CSV")->required();
    sub->add_option("--out", *path, "sweep CSV")->required();
    sub->add_option("--kind", *kind, "tdp, swts or tds");
    s.bind(sub, "--steps", "sweep.steps", "training steps per architecture");
    s.bind(sub, "--grid", "sweep.grid", "architectures as LxN,LxN,...");
    s.bind(sub, "--timing", "sweep.timing", "cost or wall");
    cmd->run = [&out, data, path, kind](const RunConfig& c) {
      SurrogateKind k;
      try {
        k = surrogate_kind_from_string(*kind);
      } catch (const Error& e) {
        throw ConfigError(std::string("--kind: ") + e.what());
      }
      const auto parts = split_7_1(load_dataset(*data));
      const auto grid = c.sweep_grid.empty() ? default_sweep_grid() : c.sweep_grid;
      SweepOptions opts;
      opts.time_budget_factor = c.sweep_budget;
      opts.timing = c.sweep_timing;
      opts.seed = c.seed;
      const ArchSweepResult r = arch_sweep(parts.train, parts.test, k, grid, c.sweep_steps, opts);
      auto f = open_out(*path);
      write_sweep_csv(f, r, c.sweep_timing == SweepTiming::wall_clock);
      const auto& e = r.entries[r.chosen];
      out << "chosen " << e.arch.layers << " layers x " << e.arch.nodes << " nodes, test mse " << e.final_loss << "\n";
    };
  }

  // train
  {
    auto [sub, cmd] = add("train", "train a DDPG agent or the supervised controller");
    auto& s = cmd->settings;
    auto algo = std::make_shared<std::string>("ddpg");
    auto data = std::make_shared<std::string>();
    auto dir = std::make_shared<std::string>();
    auto surrogate = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("train");
    sub->add_option("--algo", *algo, "ddpg or sl")->check(CLI::IsMember({"ddpg", "sl"}));
    sub->add_option("--data", *data, "dataset CSV")->required();
    sub->add_option("--out", *dir, "output directory")->required();
    sub->add_option("--surrogate", *surrogate, "surrogate directory (surrogate backend)");
    sub->add_option("--split", *split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
    s.bind(sub, "--reward", "env.reward", "q1, q2 or q1q2");
    s.bind(sub, "--backend", "env.backend", "plant or surrogate");
    s.bind(sub, "--steps", "agent.train_steps", "environment steps");
    s.bind(sub, "--episode-len", "env.episode_len", "samples per episode");
    s.bind(sub, "--tolerance", "sl.tolerance", "SL selection tolerance, GJ/h");
    cmd->run = [&out, algo, data, dir, surrogate, split](const RunConfig& c) {
      const Dataset ds = pick_split(load_dataset(*data), *split);
      if (*algo == "sl") {
        const double tol = c.sl_tolerance > 0.0 ? c.sl_tolerance : default_sl_tolerance(ds);
        const SlController sl = fit_sl_controller(ds, tol, c.seed, c.sl);
        save_sl_controller(*dir, sl);
        out << "saved supervised controller to " << *dir << " (tolerance " << tol << " GJ/h)\n";
        return;
      }
      HeatingEnv env(ds, c.env, make_backend(c, *surrogate));
      const TrainResult r = train_ddpg(env, c.agent, c.seed);
      save_agent(*dir, r.agent);
      auto f = open_out((fs::path(*dir) / "learning_curve.csv").string());
      write_learning_curve_csv(f, r.learning_curve);
      out << "trained " << r.learning_curve.size() << " episodes; saved to " << *dir << "\n";
    };
  }

  // eval
  {
    auto [sub, cmd] = add("eval", "evaluate controllers and write a metrics report");
    auto& s = cmd->settings;
    auto agent = std::make_shared<std::string>();
    auto sl = std::make_shared<std::string>();
    auto baseline = std::make_shared<std::string>("manual");
    auto data = std::make_shared<std::string>();
    auto report = std::make_shared<std::string>();
    auto trace = std::make_shared<std::string>();
    auto surrogate = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("test");
    sub->add_option("--agent", *agent, "DDPG agent directory");
    sub->add_option("--sl", *sl, "supervised controller directory");
    sub->add_option("--baseline", *baseline, "manual, fixed or none")->check(CLI::IsMember({"manual", "fixed", "none"}));
    sub->add_option("--data", *data, "dataset CSV")->required();
    sub->add_option("--report", *report, "metrics CSV")->required();
    sub->add_option("--trace", *trace, "control trace CSV of the first controller");
    sub->add_option("--surrogate", *surrogate, "surrogate directory (surrogate backend)");
    sub->add_option("--split", *split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
    s.bind(sub, "--backend", "env.backend", "plant or surrogate");
    s.bind(sub, "--bins", "histogram_bins", "histogram bins");
    cmd->run = [&out, agent, sl, baseline, data, report, trace, surrogate, split](const RunConfig& c) {
      if (agent->empty() && sl->empty() && *baseline == "none")
        throw ConfigError("nothing to evaluate: give --agent, --sl or a baseline");
      const Dataset ds = pick_split(load_dataset(*data), *split);
      auto backend = make_backend(c, *surrogate);

      std::vector<std::pair<std::string, ControlTrace>> traces;
      if (!agent->empty()) traces.emplace_back("ddpg", evaluate_controls(ds, agent_controls(load_agent(*agent), ds), *backend));
      if (!sl->empty())
        traces.emplace_back("sl", evaluate_controls(ds, sl_controller_controls(load_sl_controller(*sl), ds), *backend));
      std::optional<ControlTrace> base;
      if (*baseline == "manual") base = evaluate_controls(ds, manual_controls(ds, c.plant, c.standard), *backend);
      if (*baseline == "fixed") base = evaluate_controls(ds, fixed_controls(ds), *backend);

      std::vector<MetricsReport> reports;
      for (const auto& [name, t] : traces)
        reports.push_back(make_report(name, t, base ? &*base : nullptr, c.histogram_bins));
      if (base) reports.push_back(make_report(*baseline, *base, &*base, c.histogram_bins));
      auto f = open_out(*report);
      write_metrics_csv(f, reports);
      if (!trace->empty()) {
        auto tf = open_out(*trace);
        write_control_trace_csv(tf, traces.empty() ? *base : traces.front().second);
      }
      print_report_table(out, reports);
    };
  }

  // rolling
  {
    auto [sub, cmd] = add("rolling", "rolling 7-day training, 1-day test");
    auto& s = cmd->settings;
    auto data = std::make_shared<std::string>();
    auto path = std::make_shared<std::string>();
    auto surrogate = std::make_shared<std::string>();
    sub->add_option("--data", *data, "dataset CSV")->required();
    sub->add_option("--out", *path, "per-window AR CSV")->required();
    sub->add_option("--surrogate", *surrogate, "surrogate directory (surrogate backend)");
    s.bind(sub, "--steps", "rolling.steps", "training steps per window");
    s.bind(sub, "--windows", "rolling.windows", "limit on the number of windows");
    s.bind(sub, "--backend", "env.backend", "plant or surrogate");
    sub->add_flag_callback("--fresh", [&s] { s.overrides.emplace_back("rolling.fresh", "true"); },
                           "new agent per window instead of warm-starting");
    cmd->run = [&out, data, path, surrogate](const RunConfig& c) {
      RollingOptions opts;
      opts.agent = c.agent;
      opts.env = c.env;
      opts.steps_per_window = c.rolling_steps;
      opts.warm_start = !c.rolling_fresh;
      opts.max_windows = c.rolling_windows;
      const auto points = run_rolling(load_dataset(*data), opts, c.seed, make_backend(c, *surrogate),
                                      [&out](const RollingPoint& p) {
                                        out << "window " << p.window << " test day " << p.test_day << " AR " << p.ar
                                            << "\n";
                                      });
      auto f = open_out(*path);
      write_rolling_csv(f, points);
    };
  }

  // balance-sim
  {
    auto [sub, cmd] = add("balance-sim", "PID balancing of a branch network");
    auto& s = cmd->settings;
    auto scenario = std::make_shared<std::string>();
    auto path = std::make_shared<std::string>();
    sub->add_option("--scenario", *scenario, "scenario file (default: eight-unit network)");
    sub->add_option("--out", *path, "per-step CSV")->required();
    s.bind(sub, "--steps", "balance.steps", "controller steps");
    s.bind(sub, "--kp", "pid.kp", "proportional gain");
    s.bind(sub, "--ki", "pid.ki", "integral gain");
    s.bind(sub, "--kd", "pid.kd", "derivative gain");
    cmd->run = [&out, scenario, path](const RunConfig& c) {
      BalanceScenario sc;
      if (scenario->empty()) sc.units = default_balance_units();
      else sc = read_balance_scenario_file(*scenario);
      const auto h = balance_sim(sc.units, c.pid, sc.t2_supply, sc.total_flow, c.balance_steps);
      auto f = open_out(*path);
      write_balance_csv(f, h);
      out << "spread " << h.front().spread() << " C -> " << h.back().spread() << " C after " << h.size() << " steps\n";
    };
  }

  // report
  {
    auto [sub, cmd] = add("report", "merge metrics reports and print a comparison");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto path = std::make_shared<std::string>();
    sub->add_option("--in", *inputs, "metrics CSV files")->required();
    sub->add_option("--out", *path, "merged metrics CSV");
    cmd->run = [&out, inputs, path](const RunConfig&) {
      std::vector<MetricsReport> all;
      for (const auto& p : *inputs) {
        std::ifstream in(p);
        if (!in) throw IoError("cannot read " + p);
        for (auto& r : read_metrics_csv(in)) all.push_back(std::move(r));
      }
      if (!path->empty()) {
        auto f = open_out(*path);
        write_metrics_csv(f, all);
      }
      print_report_table(out, all);
    };
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  Command* cmd = nullptr;
  for (auto& [sub, c] : subs)
    if (sub == chosen) cmd = c;

  try {
    const RunConfig config = cmd->settings.resolve();
    cmd->run(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dhc
