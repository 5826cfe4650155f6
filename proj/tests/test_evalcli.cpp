#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dhc/cli.hpp"
#include "dhc/errors.hpp"
#include "dhc/evaluate.hpp"
#include "dhc/metrics.hpp"
#include "dhc/runconfig.hpp"

using namespace dhc;
namespace fs = std::filesystem;

namespace {

ControlTrace toy_trace(int n, double flow_scale = 1.0) {
  ControlTrace t;
  for (int i = 0; i < n; ++i) {
    t.timestamp.push_back(kDefaultSeasonStart + 1800 * i);
    t.flow1.push_back(flow_scale * (50.0 + i));
    t.flow2.push_back(flow_scale * (300.0 + 2 * i));
    t.pump_f.push_back(35.0);
    t.q1.push_back(5.0 + 0.1 * i);
    t.q2.push_back(4.5 + 0.1 * i);
    t.q_target.push_back(5.0);
  }
  return t;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cumulative error and average reward") {
  const std::vector<double> t{1.0, 2.0, 3.0};
  CHECK(cumulative_error(t, t) == 0.0);
  CHECK(cumulative_error(std::vector<double>{2.0, 0.0, 6.0}, t) == 6.0);
  CHECK(average_reward(std::vector<double>{4.0}, std::vector<double>{-6.0}, std::vector<double>{0.0}) == 5.0);
  CHECK(average_reward(t, t, t) == 0.0);
  CHECK_THROWS_AS(cumulative_error(std::vector<double>{1.0}, t), ShapeError);
  CHECK_THROWS_AS(cumulative_error(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(average_reward(t, std::vector<double>{1.0}, t), ShapeError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(5.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(37), b(37), q(37), a2(37), b2(37), q2(37);
    for (int i = 0; i < 37; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
      q[i] = g(rng);
      a2[i] = a[i] + 7.5;
      b2[i] = b[i] + 7.5;
      q2[i] = q[i] + 7.5;
    }
    const double ar = average_reward(a, b, q);
    CHECK(ar == doctest::Approx((cumulative_error(a, q) + cumulative_error(b, q)) / (2.0 * 37)).epsilon(1e-14));
    CHECK(ar == doctest::Approx(average_reward(a2, b2, q2)).epsilon(1e-12));
    CHECK(cumulative_error(a, q) == doctest::Approx(cumulative_error(a2, q2)).epsilon(1e-12));
  }
}

TEST_CASE("consumption totals and ratios") {
  const ControlTrace base = toy_trace(10);
  const Consumption c = consumption_totals(base);
  CHECK(c.water1 == doctest::Approx(0.5 * (50.0 * 10 + 45.0)));
  CHECK(c.heat1 == doctest::Approx(0.5 * (50.0 + 4.5)));

  const Consumption same = normalize_vs(base, base);
  CHECK(same == Consumption{1.0, 1.0, 1.0, 1.0});
  const Consumption half = normalize_vs(toy_trace(10, 0.5), base);
  CHECK(half.water1 == doctest::Approx(0.5));
  CHECK(half.water2 == doctest::Approx(0.5));
  CHECK(half.heat1 == 1.0);

  ControlTrace zero = base;
  std::fill(zero.flow1.begin(), zero.flow1.end(), 0.0);
  CHECK_THROWS_AS(normalize_vs(base, zero), NumericError);

  // gaps between non-adjacent days do not inflate the interval
  std::vector<Seconds> ts{0, 1800, 3600, 7 * 86400, 7 * 86400 + 1800, 7 * 86400 + 3600};
  CHECK(sample_hours(ts) == 0.5);
  CHECK_THROWS_AS(sample_hours(std::vector<Seconds>{5}), InvalidArgument);
}

TEST_CASE("error histogram") {
  const std::vector<double> t(9, 3.0);
  const Histogram perfect = error_histogram(t, t, 5);
  CHECK(perfect.total() == 9);
  CHECK(perfect.counts[static_cast<std::size_t>(perfect.bin_of(0.0))] == 9);

  std::vector<double> sym, tgt;
  for (double e : {-1.0, -0.4, -0.1, 0.1, 0.4, 1.0}) {
    sym.push_back(2.0 + e);
    tgt.push_back(2.0);
  }
  const Histogram h = error_histogram(sym, tgt, 4);
  REQUIRE(h.counts.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(h.counts[k] == h.counts[3 - k]);
  CHECK(h.total() == 6);
  CHECK(h.edges.front() == doctest::Approx(-1.0));
  CHECK(h.edges.back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(error_histogram(sym, tgt, 0), InvalidArgument);
}

TEST_CASE("metrics report round trip") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  ControlTrace a = toy_trace(40), b = toy_trace(40, 0.8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.q1[i] += u(rng) / 977.0;
    b.q2[i] -= u(rng) / 311.0;
  }
  std::vector<MetricsReport> reports{make_report("ddpg", a, &b, 7), make_report("manual", b, nullptr, 3)};
  CHECK(reports[0].histogram.total() == 40);
  std::stringstream ss;
  write_metrics_csv(ss, reports);
  const auto back = read_metrics_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == reports[0]);
  CHECK(back[1] == reports[1]);
  CHECK_FALSE(back[1].normalized.has_value());

  std::istringstream missing("controller,metric,value\nx,ce_primary,1\n");
  CHECK_THROWS_AS(read_metrics_csv(missing), SchemaError);
  std::stringstream extra;
  write_metrics_csv(extra, std::vector<MetricsReport>{reports[1]});
  std::istringstream extra_in(extra.str() + "manual,bogus,1\n");
  CHECK_THROWS_AS(read_metrics_csv(extra_in), SchemaError);
  MetricsReport bad = reports[0];
  bad.controller = "a,b";
  std::ostringstream sink;
  CHECK_THROWS_AS(write_metrics_csv(sink, std::vector<MetricsReport>{bad}), InvalidArgument);
}

TEST_CASE("run config") {
  RunConfig c;
  std::istringstream file("# comment\nseed = 7\nagent.gamma = 0.5\nenv.reward = q1\nplant.ua_pipe=0\nsweep.grid = 2x16, 3x8\n");
  read_run_config(file, c);
  CHECK(c.seed == 7);
  CHECK(c.agent.gamma == 0.5);
  CHECK(c.env.reward_kind == RewardKind::q1);
  CHECK(c.plant.ua_pipe == 0.0);
  REQUIRE(c.sweep_grid.size() == 2);
  CHECK(c.sweep_grid[1] == Architecture{3, 8});
  CHECK_THROWS_AS(apply_run_setting(c, "sead", "1"), ConfigError);
  CHECK_THROWS_AS(apply_run_setting(c, "agent.gama", "1"), ConfigError);
  CHECK_THROWS_AS(apply_run_setting(c, "plant.nope", "1"), ConfigError);
  CHECK_THROWS_AS(apply_run_setting(c, "days", "0"), ConfigError);
  CHECK_THROWS_AS(apply_run_setting(c, "env.reward", "q3"), ConfigError);
  std::istringstream no_eq("seed 4\n");
  CHECK_THROWS_AS(read_run_config(no_eq, c), ConfigError);
}

TEST_CASE("evaluation matches the plant") {
  PlantParams plant;
  StandardParams standard;
  const Dataset ds = gen_dataset(plant, standard, slice_weather(gen_weather(96, 4), 30, 2),
                                 default_operator_policy(plant, standard, 5), 6);
  const auto controls = manual_controls(ds, plant, standard);
  PlantBackend backend(plant, standard);
  const ControlTrace t = evaluate_controls(ds, controls, backend);
  REQUIRE(t.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); i += 7) {
    const auto st = plant_steady_state(plant, standard, ds[i].t1_supply, controls[i].flow1,
                                       pump_flow(controls[i].pump_f, plant.pump_poly), ds[i].t_out);
    CHECK(t.q1[i] == doctest::Approx(st.q1).epsilon(1e-12));
    CHECK(t.q2[i] == doctest::Approx(st.q2).epsilon(1e-12));
  }
  CHECK_THROWS_AS(evaluate_controls(ds, std::vector<Controls>(3), backend), ShapeError);
}

TEST_CASE("rolling windows") {
  PlantParams plant;
  StandardParams standard;
  const Dataset ds = gen_dataset(plant, standard, slice_weather(gen_weather(96, 7), 30, 9),
                                 default_operator_policy(plant, standard, 8), 9);
  RollingOptions opts;
  opts.agent.actor_hidden = {16};
  opts.agent.critic_hidden = {16};
  opts.agent.warmup_steps = 50;
  opts.agent.batch_size = 16;
  opts.steps_per_window = 300;
  auto backend = std::make_shared<PlantBackend>(plant, standard);
  const auto a = run_rolling(ds, opts, 3, backend);
  const auto b = run_rolling(ds, opts, 3, backend);
  REQUIRE(a.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a[k].first_train_day == static_cast<int>(k));
    CHECK(a[k].test_day == static_cast<int>(k) + 7);
    CHECK(a[k].ar == b[k].ar);
    CHECK(a[k].ar > 0.0);
  }
  opts.warm_start = false;
  const auto fresh = run_rolling(ds, opts, 3, backend);
  CHECK(fresh[0].ar == a[0].ar);
  CHECK(fresh[1].ar != a[1].ar);

  std::ostringstream csv;
  write_rolling_csv(csv, a);
  CHECK(csv.str().rfind("window,first_train_day,test_day,ar\n0,0,7,", 0) == 0);

  opts.max_windows = 1;
  CHECK_THROWS_AS(run_rolling(ds, opts, 3, backend), RangeError);
}

TEST_CASE("cli exit codes") {
  TempDir dir("dhc_cli_codes");
  CHECK(run({}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"gen-data"}) == kExitUsage);
  CHECK(run({"gen-data", "--out", dir / "d.csv", "--bogus"}) == kExitUsage);
  CHECK(run({"gen-data", "--out", dir / "d.csv", "--days", "many"}) == kExitUsage);
  CHECK(run({"gen-data", "--out", dir / "d.csv", "--set", "nope=1"}) == kExitUsage);
  CHECK(run({"gen-data", "--out", dir / "d.csv", "--config", dir / "missing.cfg"}) == kExitUsage);
  CHECK(run({"eval", "--data", dir / "absent.csv", "--report", dir / "r.csv"}) == kExitRuntime);
  CHECK(run({"--help"}) == kExitOk);
}

TEST_CASE("cli pipeline") {
  TempDir dir("dhc_cli_pipeline");
  std::string text;
  REQUIRE(run({"gen-data", "--days", "8", "--seed", "1", "--out", dir / "d.csv"}, &text) == kExitOk);
  const Dataset ds = load_dataset(dir / "d.csv");
  CHECK(ds.day_count() == 8);
  CHECK(ds.size() == 8 * 48);

  // config file supplies defaults, flags override it
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "days = 3\nseed = 4\n";
  }
  REQUIRE(run({"gen-data", "--config", dir / "run.cfg", "--days", "2", "--out", dir / "c.csv"}) == kExitOk);
  CHECK(load_dataset(dir / "c.csv").day_count() == 2);

  REQUIRE(run({"train", "--algo", "ddpg", "--reward", "q1q2", "--data", dir / "d.csv", "--out", dir / "agent",
               "--steps", "400", "--episode-len", "100", "--set", "agent.actor_hidden=16", "agent.critic_hidden=16",
               "agent.warmup_steps=50"},
              &text) == kExitOk);
  for (const char* f : {"actor.mlp", "critic.mlp", "manifest.txt", "learning_curve.csv"})
    CHECK(fs::exists(dir.path / "agent" / f));

  REQUIRE(run({"eval", "--agent", dir / "agent", "--baseline", "manual", "--data", dir / "d.csv", "--report",
               dir / "r.csv"},
              &text) == kExitOk);
  std::ifstream rin(dir / "r.csv");
  const auto reports = read_metrics_csv(rin);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].controller == "ddpg");
  CHECK(reports[1].controller == "manual");
  CHECK(reports[0].normalized.has_value());
  CHECK(reports[1].normalized->water1 == 1.0);
  CHECK(reports[0].samples == 48);

  REQUIRE(run({"train", "--algo", "sl", "--data", dir / "d.csv", "--out", dir / "sl", "--tolerance", "1e9", "--set",
               "sl.steps=100"}) == kExitOk);
  REQUIRE(run({"eval", "--sl", dir / "sl", "--baseline", "none", "--data", dir / "d.csv", "--report", dir / "s.csv"}) ==
          kExitOk);

  // surrogate backend needs its directory
  CHECK(run({"train", "--data", dir / "d.csv", "--out", dir / "x", "--backend", "surrogate"}) == kExitUsage);

  // seeded stages reproduce byte for byte
  REQUIRE(run({"gen-data", "--days", "8", "--seed", "1", "--out", dir / "d2.csv"}) == kExitOk);
  CHECK(slurp(dir / "d.csv") == slurp(dir / "d2.csv"));
  REQUIRE(run({"train", "--data", dir / "d.csv", "--out", dir / "agent2", "--steps", "400", "--episode-len", "100",
               "--set", "agent.actor_hidden=16", "agent.critic_hidden=16", "agent.warmup_steps=50"}) == kExitOk);
  for (const char* f : {"actor.mlp", "critic.mlp", "manifest.txt", "learning_curve.csv"})
    CHECK(slurp((dir.path / "agent" / f).string()) == slurp((dir.path / "agent2" / f).string()));

  REQUIRE(run({"balance-sim", "--out", dir / "b.csv", "--steps", "50"}) == kExitOk);
  REQUIRE(run({"report", "--in", dir / "r.csv", dir / "s.csv", "--out", dir / "m.csv"}) == kExitOk);
  std::ifstream min(dir / "m.csv");
  CHECK(read_metrics_csv(min).size() == 3);
}
