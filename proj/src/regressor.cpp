#include "dhc/regressor.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include "dhc/errors.hpp"
#include "dhc/format.hpp"

namespace dhc {

Eigen::VectorXd Regressor::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd out = nn::forward(net, input.apply(x));
  return (out.col(0).array() * target_scale + target_mean).matrix();
}

RegressorFit fit_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Architecture arch, int steps,
                           std::uint64_t seed, const FitOptions& options) {
  if (steps < 1) throw InvalidArgument("fit_regressor: steps must be >= 1");
  if (arch.layers < 1 || arch.nodes < 1) throw InvalidArgument("fit_regressor: bad architecture");
  if (options.batch_size < 1) throw InvalidArgument("fit_regressor: batch size must be >= 1");
  if (x.rows() == 0 || x.rows() != y.size()) throw ShapeError("fit_regressor: empty or mismatched data");

  RegressorFit fit;
  Regressor& model = fit.model;
  model.input = Standardizer::fit(x);
  const Standardizer ys = Standardizer::fit(y);
  model.target_mean = ys.mean(0);
  model.target_scale = ys.scale(0);

  std::vector<int> sizes{static_cast<int>(x.cols())};
  for (int k = 0; k < arch.layers; ++k) sizes.push_back(arch.nodes);
  sizes.push_back(1);
  model.net = nn::mlp_init<double>(sizes, options.hidden, nn::Activation::identity, seed);

  const Eigen::MatrixXd z = model.input.apply(x);
  const Eigen::VectorXd yz = ((y.array() - model.target_mean) / model.target_scale).matrix();

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Eigen::Index> pick(0, z.rows() - 1);
  auto adam = nn::adam_init(model.net, options.learning_rate);
  Eigen::MatrixXd xb(options.batch_size, x.cols());
  Eigen::MatrixXd yb(options.batch_size, 1);
  const int tail = std::max(1, steps / 100);
  double tail_loss = 0.0;
  for (int step = 0; step < steps; ++step) {
    for (int r = 0; r < options.batch_size; ++r) {
      const Eigen::Index i = pick(rng);
      xb.row(r) = z.row(i);
      yb(r, 0) = yz(i);
    }
    const auto lg = nn::backward_mse(model.net, xb, yb);
    adam.learning_rate =
        options.learning_rate * (1.0 - (1.0 - options.final_lr_fraction) * static_cast<double>(step) / steps);
    nn::adam_step(model.net, lg.grads, adam);
    if (step >= steps - tail) tail_loss += lg.loss;
  }
  fit.final_loss = tail_loss / tail;
  return fit;
}

namespace {

void write_row(std::ostream& out, std::string_view key, const Eigen::RowVectorXd& v) {
  out << key;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
  out << '\n';
}

Eigen::RowVectorXd row_of(const std::vector<std::vector<std::string>>& lines, std::size_t& pos,
                          std::string_view key) {
  if (pos >= lines.size() || lines[pos].empty() || lines[pos][0] != key)
    throw SchemaError("manifest: expected '" + std::string(key) + "'");
  const auto& t = lines[pos++];
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(t.size() - 1));
  for (std::size_t i = 1; i < t.size(); ++i) v(static_cast<Eigen::Index>(i - 1)) = parse_double(t[i]);
  return v;
}

}  // namespace

void write_regressor_stats(std::ostream& out, const Regressor& r) {
  write_row(out, "input_mean", r.input.mean);
  write_row(out, "input_scale", r.input.scale);
  write_row(out, "input_min", r.input.min);
  write_row(out, "input_max", r.input.max);
  out << "target " << format_double(r.target_mean) << ' ' << format_double(r.target_scale) << '\n';
}

void read_regressor_stats(const std::vector<std::vector<std::string>>& lines, std::size_t& pos, Regressor& r) {
  r.input.mean = row_of(lines, pos, "input_mean");
  r.input.scale = row_of(lines, pos, "input_scale");
  r.input.min = row_of(lines, pos, "input_min");
  r.input.max = row_of(lines, pos, "input_max");
  const Eigen::RowVectorXd target = row_of(lines, pos, "target");
  const Eigen::Index d = r.input.mean.size();
  if (r.input.scale.size() != d || r.input.min.size() != d || r.input.max.size() != d || target.size() != 2)
    throw SchemaError("manifest: bad statistics width");
  if (r.net.input_dim() != d) throw SchemaError("manifest: statistics do not match the network input width");
  r.target_mean = target(0);
  r.target_scale = target(1);
}

}  // namespace dhc
