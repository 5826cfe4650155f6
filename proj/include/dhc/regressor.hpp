#pragma once

// Scalar-output MLP regression on standardized inputs and target.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dhc/neural.hpp"
#include "dhc/standardize.hpp"

namespace dhc {

// `layers` counts hidden layers; every hidden layer has `nodes` units.
struct Architecture {
  int layers = 4;
  int nodes = 64;

  bool operator==(const Architecture&) const = default;
};

struct FitOptions {
  int batch_size = 64;
  double learning_rate = 1e-3;
  // Learning rate decays linearly to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.1;
  nn::Activation hidden = nn::Activation::tanh;
};

struct Regressor {
  nn::Mlp<double> net;
  Standardizer input;
  double target_mean = 0.0;
  double target_scale = 1.0;

  // rows of raw inputs -> raw predictions
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct RegressorFit {
  Regressor model;
  double final_loss = 0.0;  // mean minibatch loss over the last 1% of steps, standardized units
};

RegressorFit fit_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options = {});

// Statistics lines: <prefix>_mean, <prefix>_scale, <prefix>_min, <prefix>_max, then "target <mean> <scale>".
void write_regressor_stats(std::ostream& out, const Regressor& r);
// Reads the five lines written above from `lines` starting at `pos`, advancing it.
void read_regressor_stats(const std::vector<std::vector<std::string>>& lines, std::size_t& pos, Regressor& r);

}  // namespace dhc
