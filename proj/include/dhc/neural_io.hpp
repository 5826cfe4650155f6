#pragma once

// Plain-text model files:
//   mlp v1 <n_sizes> <size_0> ... <size_n-1> <hidden_act> <out_act>
// followed by one line per parameter array (W0, b0, W1, b1, ...), weights in
// row-major order, values written in shortest round-trip form.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dhc/format.hpp"
#include "dhc/neural.hpp"

namespace dhc::nn {

template <typename Scalar>
void save_mlp(std::ostream& out, const Mlp<Scalar>& net) {
  out << "mlp v1 " << net.layer_sizes.size();
  for (int s : net.layer_sizes) out << ' ' << s;
  out << ' ' << to_string(net.hidden_activation) << ' ' << to_string(net.output_activation) << '\n';
  auto write_row = [&out](const auto& values) {
    bool first = true;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) {
        if (!first) out << ' ';
        out << format_double(static_cast<double>(values(r, c)));
        first = false;
      }
    out << '\n';
  };
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    write_row(net.weights[k]);
    write_row(net.biases[k]);
  }
}

template <typename Scalar = double>
Mlp<Scalar> load_mlp(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("load_mlp: missing header");
  std::istringstream header(line);
  std::string magic, version, hidden, output;
  std::size_t n = 0;
  header >> magic >> version >> n;
  if (magic != "mlp" || version != "v1" || n < 2) throw IoError("load_mlp: bad header '" + line + "'");
  std::vector<int> sizes(n);
  for (auto& s : sizes) header >> s;
  header >> hidden >> output;
  if (!header) throw IoError("load_mlp: truncated header");

  Mlp<Scalar> net = mlp_init<Scalar>(std::span<const int>(sizes), activation_from_string(hidden),
                                     activation_from_string(output), 0);
  auto read_row = [&in](auto& values, const char* what) {
    std::string row;
    if (!std::getline(in, row)) throw IoError(std::string("load_mlp: missing ") + what + " row");
    std::istringstream tokens(row);
    std::string tok;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) {
        if (!(tokens >> tok)) throw IoError(std::string("load_mlp: short ") + what + " row");
        values(r, c) = static_cast<Scalar>(parse_double(tok));
      }
    if (tokens >> tok) throw IoError(std::string("load_mlp: long ") + what + " row");
  };
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    read_row(net.weights[k], "weight");
    read_row(net.biases[k], "bias");
  }
  return net;
}

template <typename Scalar>
void save_mlp_file(const std::string& path, const Mlp<Scalar>& net) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_mlp(out, net);
}

template <typename Scalar = double>
Mlp<Scalar> load_mlp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return load_mlp<Scalar>(in);
}

}  // namespace dhc::nn
