#include "dhc/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"
#include "dhc/neural_io.hpp"

namespace dhc {

namespace {

constexpr std::array<SurrogateKind, 3> kKinds{SurrogateKind::tdp, SurrogateKind::swts, SurrogateKind::tds};

double column_value(const Sample& s, std::string_view name) {
  if (name == "flow1") return s.flow1;
  if (name == "flow2") return s.flow2;
  if (name == "t1_supply") return s.t1_supply;
  if (name == "swts") return s.swts;
  if (name == "t_out") return s.t_out;
  if (name == "tdp") return s.tdp;
  if (name == "tds") return s.tds;
  throw SchemaError("no column '" + std::string(name) + "'");
}

double training_cost(const nn::Mlp<double>& net, int steps, int batch) {
  double macs = 0.0;
  for (const auto& w : net.weights) macs += static_cast<double>(w.size());
  // forward, plus roughly twice that for the backward pass
  return 3.0 * macs * batch * steps;
}

Eigen::MatrixXd columns(std::initializer_list<const Eigen::VectorXd*> cols) {
  Eigen::MatrixXd m(cols.begin()[0]->size(), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto* c : cols) m.col(j++) = *c;
  return m;
}

}  // namespace

std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::tdp: return "tdp";
    case SurrogateKind::swts: return "swts";
    case SurrogateKind::tds: return "tds";
  }
  return "?";
}

SurrogateKind surrogate_kind_from_string(std::string_view s) {
  for (SurrogateKind k : kKinds)
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown surrogate model '" + std::string(s) + "'");
}

const std::array<std::string_view, 3>& surrogate_inputs(SurrogateKind kind) {
  static const std::array<std::string_view, 3> tdp{"flow1", "flow2", "t1_supply"};
  static const std::array<std::string_view, 3> swts{"t1_supply", "flow1", "flow2"};
  static const std::array<std::string_view, 3> tds{"swts", "flow2", "t_out"};
  switch (kind) {
    case SurrogateKind::tdp: return tdp;
    case SurrogateKind::swts: return swts;
    case SurrogateKind::tds: return tds;
  }
  return tdp;
}

std::string_view surrogate_target(SurrogateKind kind) { return to_string(kind); }

Eigen::MatrixXd surrogate_design(const Dataset& ds, SurrogateKind kind) {
  const auto& names = surrogate_inputs(kind);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), 3);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (int j = 0; j < 3; ++j) x(static_cast<Eigen::Index>(i), j) = column_value(ds[i], names[j]);
  return x;
}

Eigen::VectorXd surrogate_targets(const Dataset& ds, SurrogateKind kind) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) y(static_cast<Eigen::Index>(i)) = column_value(ds[i], surrogate_target(kind));
  return y;
}

double SurrogateModel::predict(double a, double b, double c) const {
  Eigen::MatrixXd x(1, 3);
  x << a, b, c;
  return predict(x)(0);
}

SurrogateFit fit_surrogate(const Dataset& train, const Dataset& test, SurrogateKind kind, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options) {
  if (train.empty() || test.empty()) throw InvalidArgument("fit_surrogate: empty train or test split");
  const Eigen::MatrixXd x = surrogate_design(train, kind);
  const Eigen::VectorXd y = surrogate_targets(train, kind);
  RegressorFit r = fit_regressor(x, y, arch, steps, seed, options);

  SurrogateFit fit;
  static_cast<Regressor&>(fit.model) = std::move(r.model);
  fit.model.kind = kind;
  fit.final_loss = r.final_loss;
  const SurrogateModel& model = fit.model;
  fit.train = nn::mse_mae(model.predict(x), y);
  fit.test = nn::mse_mae(model.predict(surrogate_design(test, kind)), surrogate_targets(test, kind));
  return fit;
}

SurrogateFit fit_surrogate(const Dataset& dataset, SurrogateKind kind, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options) {
  const auto split = split_7_1(dataset);
  return fit_surrogate(split.train, split.test, kind, arch, steps, seed, options);
}

std::vector<Architecture> default_sweep_grid() {
  std::vector<Architecture> grid;
  for (int layers : {2, 3, 4, 5})
    for (int nodes : {50, 100, 200, 300}) grid.push_back({layers, nodes});
  return grid;
}

std::size_t select_architecture(std::span<const SweepEntry> entries, double time_budget_factor, SweepTiming timing) {
  if (entries.empty()) throw SelectionError("select_architecture: empty sweep");
  auto time_of = [timing](const SweepEntry& e) { return timing == SweepTiming::cost_model ? e.cost : e.wall_seconds; };
  double fastest = time_of(entries[0]);
  for (const auto& e : entries) fastest = std::min(fastest, time_of(e));
  const double budget = time_budget_factor * fastest;

  std::size_t best = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const SweepEntry& e = entries[i];
    if (time_of(e) > budget) continue;
    if (best == entries.size()) {
      best = i;
      continue;
    }
    const SweepEntry& b = entries[best];
    if (e.final_loss < b.final_loss ||
        (e.final_loss == b.final_loss &&
         (e.arch.nodes < b.arch.nodes || (e.arch.nodes == b.arch.nodes && e.arch.layers < b.arch.layers))))
      best = i;
  }
  return best;
}

ArchSweepResult arch_sweep(const Dataset& train, const Dataset& test, SurrogateKind kind,
                           std::span<const Architecture> grid, int steps_per_arch, const SweepOptions& options) {
  if (grid.empty()) throw InvalidArgument("arch_sweep: empty grid");
  ArchSweepResult result;
  for (const Architecture& arch : grid) {
    const auto t0 = std::chrono::steady_clock::now();
    const SurrogateFit fit = fit_surrogate(train, test, kind, arch, steps_per_arch, options.seed, options.fit);
    const auto t1 = std::chrono::steady_clock::now();
    SweepEntry e;
    e.arch = arch;
    e.final_loss = fit.test.mse;
    e.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    e.cost = training_cost(fit.model.net, steps_per_arch, options.fit.batch_size);
    result.entries.push_back(e);
  }
  result.chosen = select_architecture(result.entries, options.time_budget_factor, options.timing);
  return result;
}

void write_sweep_csv(std::ostream& out, const ArchSweepResult& result, bool include_wall_seconds) {
  out << (include_wall_seconds ? "layers,nodes,final_loss,wall_seconds,cost,chosen\n" : "layers,nodes,final_loss,cost,chosen\n");
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const SweepEntry& e = result.entries[i];
    out << e.arch.layers << ',' << e.arch.nodes << ',' << format_double(e.final_loss) << ',';
    if (include_wall_seconds) out << format_double(e.wall_seconds) << ',';
    out << format_double(e.cost) << ',' << (i == result.chosen ? 1 : 0) << '\n';
  }
}

PumpPoly fit_pump_poly(std::span<const double> f, std::span<const double> flow) {
  if (f.size() != flow.size()) throw ShapeError("fit_pump_poly: length mismatch");
  if (std::set<double>(f.begin(), f.end()).size() < 3)
    throw RankError("fit_pump_poly: need at least 3 distinct frequencies");
  const auto n = static_cast<Eigen::Index>(f.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = f[i] * f[i];
    a(i, 1) = f[i];
    a(i, 2) = 1.0;
    b(i) = flow[i];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
  return {coef(0), coef(1), coef(2)};
}

QBatch predict_q_batch(const SurrogateSet& set, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != 4) throw ShapeError("predict_q_batch: expected columns t1_supply, t_out, flow1, pump_f");
  const Eigen::VectorXd t1s = inputs.col(0);
  const Eigen::VectorXd t_out = inputs.col(1);
  const Eigen::VectorXd flow1 = inputs.col(2);
  const Eigen::VectorXd flow2 = inputs.col(3).unaryExpr([&](double f) { return set.pump(f); });

  const Eigen::MatrixXd swts_in = columns({&t1s, &flow1, &flow2});
  const Eigen::MatrixXd tdp_in = columns({&flow1, &flow2, &t1s});
  const Eigen::VectorXd swts = set.swts.predict(swts_in);
  const Eigen::MatrixXd tds_in = columns({&swts, &flow2, &t_out});
  const Eigen::VectorXd tdp = set.tdp.predict(tdp_in);
  const Eigen::VectorXd tds = set.tds.predict(tds_in);

  QBatch out;
  out.q1 = (set.c * flow1.array() * tdp.array().max(0.0)).matrix();
  out.q2 = (set.c * flow2.array() * tds.array().max(0.0)).matrix();
  constexpr double margin = 0.2;
  out.extrapolated = !(set.swts.input.within(swts_in, margin) && set.tdp.input.within(tdp_in, margin) &&
                       set.tds.input.within(tds_in, margin));
  return out;
}

QPrediction predict_q(const SurrogateSet& set, double t1_supply, double t_out, double flow1, double pump_f) {
  QPrediction p;
  p.flow2 = set.pump(pump_f);
  Eigen::MatrixXd x(1, 3);
  x << t1_supply, flow1, p.flow2;
  p.swts = set.swts.predict(x)(0);
  bool ok = set.swts.input.within(x, 0.2);
  x << flow1, p.flow2, t1_supply;
  p.tdp = set.tdp.predict(x)(0);
  ok = ok && set.tdp.input.within(x, 0.2);
  x << p.swts, p.flow2, t_out;
  p.tds = set.tds.predict(x)(0);
  ok = ok && set.tds.input.within(x, 0.2);
  p.q1 = set.c * flow1 * std::max(p.tdp, 0.0);
  p.q2 = set.c * p.flow2 * std::max(p.tds, 0.0);
  p.extrapolated = !ok;
  return p;
}

SurrogateSetFit fit_surrogate_set(const Dataset& train, const Dataset& test, Architecture arch, int steps,
                                  std::uint64_t seed, const FitOptions& options) {
  SurrogateSetFit out;
  for (std::size_t k = 0; k < kKinds.size(); ++k)
    out.fits[k] = fit_surrogate(train, test, kKinds[k], arch, steps, seed + k, options);
  out.set.tdp = out.fits[0].model;
  out.set.swts = out.fits[1].model;
  out.set.tds = out.fits[2].model;
  std::vector<double> f, flow;
  for (const Sample& s : train.rows) {
    f.push_back(s.pump_f);
    flow.push_back(s.flow2);
  }
  out.set.pump = fit_pump_poly(f, flow);
  return out;
}

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> t;
  for (std::string w; in >> w;) t.push_back(w);
  return t;
}

}  // namespace

void save_surrogate_set(const std::string& dir, const SurrogateSet& set) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + dir);
  manifest << "surrogate-set v1\n";
  manifest << "c " << format_double(set.c) << '\n';
  manifest << "pump " << format_double(set.pump.a2) << ' ' << format_double(set.pump.a1) << ' '
           << format_double(set.pump.a0) << '\n';
  for (const SurrogateModel* m : {&set.tdp, &set.swts, &set.tds}) {
    const std::string file = std::string(to_string(m->kind)) + ".mlp";
    nn::save_mlp_file((fs::path(dir) / file).string(), m->net);
    manifest << "model " << to_string(m->kind) << ' ' << file << '\n';
    write_regressor_stats(manifest, *m);
  }
}

SurrogateSet load_surrogate_set(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.txt");
  if (!in) throw IoError("cannot read manifest in " + dir);
  std::vector<std::vector<std::string>> lines;
  for (std::string line; std::getline(in, line);)
    if (auto t = tokens_of(line); !t.empty()) lines.push_back(std::move(t));
  if (lines.size() != 3 + 3 * 6 || lines[0] != std::vector<std::string>{"surrogate-set", "v1"})
    throw SchemaError("surrogate manifest: bad header or length");

  SurrogateSet set;
  auto scalar_row = [&](std::size_t i, std::string_view key, std::size_t n) {
    if (lines[i][0] != key || lines[i].size() != n + 1)
      throw SchemaError("surrogate manifest: bad '" + std::string(key) + "' line");
    std::vector<double> v;
    for (std::size_t k = 1; k <= n; ++k) v.push_back(parse_double(lines[i][k]));
    return v;
  };
  set.c = scalar_row(1, "c", 1)[0];
  const auto pump = scalar_row(2, "pump", 3);
  set.pump = {pump[0], pump[1], pump[2]};

  std::set<SurrogateKind> seen;
  std::size_t pos = 3;
  for (int k = 0; k < 3; ++k) {
    const auto& head = lines[pos++];
    if (head.size() != 3 || head[0] != "model") throw SchemaError("surrogate manifest: expected 'model'");
    SurrogateModel m;
    m.kind = surrogate_kind_from_string(head[1]);
    if (!seen.insert(m.kind).second) throw SchemaError("surrogate manifest: duplicate model");
    m.net = nn::load_mlp_file<double>((fs::path(dir) / head[2]).string());
    if (m.net.input_dim() != 3 || m.net.output_dim() != 1) throw SchemaError("surrogate model must map 3 -> 1");
    read_regressor_stats(lines, pos, m);
    (m.kind == SurrogateKind::tdp ? set.tdp : m.kind == SurrogateKind::swts ? set.swts : set.tds) = std::move(m);
  }
  return set;
}

}  // namespace dhc
