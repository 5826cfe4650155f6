#pragma once

// Learned station models. Each model maps three measured quantities to one
// temperature (difference); chained with the pump curve they give Q1 and Q2
// for any control setting.
//
//   tdp  : flow1, flow2, t1_supply -> primary supply/return difference
//   swts : t1_supply, flow1, flow2 -> secondary supply temperature
//   tds  : swts, flow2, t_out      -> secondary supply/return difference

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dhc/data.hpp"
#include "dhc/neural.hpp"
#include "dhc/plant.hpp"
#include "dhc/regressor.hpp"
#include "dhc/standardize.hpp"

namespace dhc {

enum class SurrogateKind { tdp, swts, tds };

std::string_view to_string(SurrogateKind kind);
SurrogateKind surrogate_kind_from_string(std::string_view s);
const std::array<std::string_view, 3>& surrogate_inputs(SurrogateKind kind);
std::string_view surrogate_target(SurrogateKind kind);

// n x 3 design matrix and n-vector of targets for one model.
Eigen::MatrixXd surrogate_design(const Dataset& ds, SurrogateKind kind);
Eigen::VectorXd surrogate_targets(const Dataset& ds, SurrogateKind kind);

struct SurrogateModel : Regressor {
  SurrogateKind kind = SurrogateKind::tdp;

  using Regressor::predict;
  double predict(double a, double b, double c) const;
};

struct SurrogateFit {
  SurrogateModel model;
  nn::ErrorStats train;
  nn::ErrorStats test;
  double final_loss = 0.0;  // mean minibatch loss over the last 1% of steps, standardized units
};

// Standardization statistics come from `train` only.
SurrogateFit fit_surrogate(const Dataset& train, const Dataset& test, SurrogateKind kind, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options = {});
// Splits with the 7+1-day pattern first.
SurrogateFit fit_surrogate(const Dataset& dataset, SurrogateKind kind, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options = {});

struct SweepEntry {
  Architecture arch;
  double final_loss = 0.0;  // held-out MSE, target units
  double wall_seconds = 0.0;
  double cost = 0.0;  // multiply-adds spent in training
};

enum class SweepTiming { cost_model, wall_clock };

struct SweepOptions {
  double time_budget_factor = 1.5;
  SweepTiming timing = SweepTiming::cost_model;
  std::uint64_t seed = 1;
  FitOptions fit;
};

struct ArchSweepResult {
  std::vector<SweepEntry> entries;
  std::size_t chosen = 0;
};

std::vector<Architecture> default_sweep_grid();

// Smallest loss among entries whose time is within factor x the fastest.
// Equal losses go to fewer nodes, then fewer layers, then the earlier entry.
std::size_t select_architecture(std::span<const SweepEntry> entries, double time_budget_factor, SweepTiming timing);

ArchSweepResult arch_sweep(const Dataset& train, const Dataset& test, SurrogateKind kind,
                           std::span<const Architecture> grid, int steps_per_arch, const SweepOptions& options = {});

// Without wall time the file depends only on the inputs and seed.
void write_sweep_csv(std::ostream& out, const ArchSweepResult& result, bool include_wall_seconds = true);

// Least-squares quadratic flow = a2 f^2 + a1 f + a0.
PumpPoly fit_pump_poly(std::span<const double> f, std::span<const double> flow);

struct SurrogateSet {
  SurrogateModel tdp;
  SurrogateModel swts;
  SurrogateModel tds;
  PumpPoly pump;
  double c = kWaterSpecificHeat;
};

struct QPrediction {
  double q1 = 0.0;
  double q2 = 0.0;
  double flow2 = 0.0;
  double tdp = 0.0;
  double swts = 0.0;
  double tds = 0.0;
  bool extrapolated = false;  // some model input left its training range by more than 20%
};

QPrediction predict_q(const SurrogateSet& set, double t1_supply, double t_out, double flow1, double pump_f);

// Columns of `inputs`: t1_supply, t_out, flow1, pump_f.
struct QBatch {
  Eigen::VectorXd q1;
  Eigen::VectorXd q2;
  bool extrapolated = false;
};
QBatch predict_q_batch(const SurrogateSet& set, const Eigen::MatrixXd& inputs);

struct SurrogateSetFit {
  SurrogateSet set;
  std::array<SurrogateFit, 3> fits;  // tdp, swts, tds
};

SurrogateSetFit fit_surrogate_set(const Dataset& train, const Dataset& test, Architecture arch, int steps,
                                  std::uint64_t seed, const FitOptions& options = {});

// Directory with tdp.mlp, swts.mlp, tds.mlp and manifest.txt.
void save_surrogate_set(const std::string& dir, const SurrogateSet& set);
SurrogateSet load_surrogate_set(const std::string& dir);

}  // namespace dhc
