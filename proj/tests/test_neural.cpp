#include <random>
#include <sstream>

#include "doctest.h"
#include "dhc/neural.hpp"
#include "dhc/neural_io.hpp"
#include "support/finite_diff.hpp"

using namespace dhc;
using namespace dhc::nn;
using dhc::testing::max_relative_error;
using dhc::testing::numeric_input_grads;
using dhc::testing::numeric_param_grads;

namespace {

Mlp<double> affine(double w, double b, Activation out = Activation::identity) {
  auto net = mlp_init({1, 1}, Activation::relu, out, 0);
  net.weights[0](0, 0) = w;
  net.biases[0](0) = b;
  return net;
}

Matrix<double> random_batch(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix<double> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
  return x;
}

void randomize_biases(Mlp<double>& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = d(rng);
}

}  // namespace

TEST_CASE("mlp_init shapes and seeded determinism") {
  auto a = mlp_init({3, 300, 300, 300, 300, 300, 1}, Activation::relu, Activation::identity, 7);
  CHECK(a.num_layers() == 6);
  CHECK(a.weights[0].rows() == 300);
  CHECK(a.weights[0].cols() == 3);
  CHECK(a.weights[5].rows() == 1);
  CHECK(a.biases[2].size() == 300);

  auto x = mlp_init({2, 4, 1}, Activation::relu, Activation::identity, 42);
  auto y = mlp_init({2, 4, 1}, Activation::relu, Activation::identity, 42);
  for (std::size_t k = 0; k < x.num_layers(); ++k) {
    CHECK(x.weights[k] == y.weights[k]);
    CHECK(x.biases[k] == y.biases[k]);
  }
  auto z = mlp_init({2, 4, 1}, Activation::relu, Activation::identity, 43);
  CHECK(x.weights[0] != z.weights[0]);

  // fan-in bound
  const double bound = std::sqrt(6.0 / 3.0);
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= bound);

  auto small = mlp_init({3, 8, 2}, Activation::tanh, Activation::tanh, 1, InitOptions{3e-3});
  CHECK(small.weights[1].cwiseAbs().maxCoeff() <= 3e-3);
  CHECK(small.weights[0].cwiseAbs().maxCoeff() > 3e-3);
}

TEST_CASE("mlp_init rejects bad architectures") {
  CHECK_THROWS_AS(mlp_init({3}, Activation::relu, Activation::identity, 0), InvalidArgument);
  CHECK_THROWS_AS(mlp_init({3, 0, 1}, Activation::relu, Activation::identity, 0), InvalidArgument);
  CHECK_THROWS_AS(mlp_init({-2, 1}, Activation::relu, Activation::identity, 0), InvalidArgument);
}

TEST_CASE("forward arithmetic") {
  Matrix<double> x(1, 1);
  x << 3.0;
  CHECK(forward(affine(2.0, 1.0), x)(0, 0) == doctest::Approx(7.0));

  auto zero = mlp_init({4, 5, 2}, Activation::relu, Activation::identity, 3);
  for (auto& w : zero.weights) w.setZero();
  for (auto& b : zero.biases) b.setZero();
  std::mt19937_64 rng(1);
  CHECK(forward(zero, random_batch(rng, 6, 4)).cwiseAbs().maxCoeff() == 0.0);

  auto net = mlp_init({3, 8, 8, 2}, Activation::tanh, Activation::identity, 9);
  Matrix<double> two(2, 3);
  two.row(0) << 0.3, -1.2, 2.0;
  two.row(1) = two.row(0);
  auto y = forward(net, two);
  CHECK(y.row(0) == y.row(1));

  CHECK_THROWS_AS(forward(net, Matrix<double>::Zero(2, 4)), ShapeError);
}

TEST_CASE("backward_mse hand arithmetic and zero residual") {
  Matrix<double> x(1, 1), t(1, 1);
  x << 1.0;
  t << 0.0;
  auto [loss, g] = backward_mse(affine(1.0, 0.0), x, t);
  CHECK(loss == doctest::Approx(1.0));
  CHECK(g.weights[0](0, 0) == doctest::Approx(2.0));
  CHECK(g.biases[0](0) == doctest::Approx(2.0));

  auto net = mlp_init({3, 6, 2}, Activation::tanh, Activation::identity, 5);
  std::mt19937_64 rng(2);
  auto xb = random_batch(rng, 7, 3);
  auto res = backward_mse(net, xb, forward(net, xb));
  CHECK(res.loss == 0.0);
  for (auto& w : res.grads.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(backward_mse(net, Matrix<double>(0, 3), Matrix<double>(0, 2)), InvalidArgument);
}

TEST_CASE("backward_mse matches central finite differences on random small nets") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> depth(1, 3), width(1, 8), io(1, 4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> sizes{io(rng)};
    const int hidden = depth(rng);
    for (int h = 0; h < hidden; ++h) sizes.push_back(width(rng));
    sizes.push_back(io(rng));
    const auto act = trial % 2 == 0 ? Activation::tanh : Activation::relu;
    auto net = mlp_init<double>(std::span<const int>(sizes), act, Activation::identity, 100 + trial);
    randomize_biases(net, rng);
    auto x = random_batch(rng, 5, sizes.front());
    auto t = random_batch(rng, 5, sizes.back());
    auto analytic = backward_mse(net, x, t).grads;
    auto numeric = numeric_param_grads(net, [&](const Mlp<double>& n) { return backward_mse(n, x, t).loss; });
    CHECK(max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("backward_scalar_head vector-Jacobian products") {
  auto lin = affine(3.0, 0.5);
  Matrix<double> x(3, 1), head(3, 1);
  x << 1.0, -2.0, 0.25;
  head << 0.5, 1.0, -4.0;
  auto vjp = backward_scalar_head(lin, x, head);
  CHECK(vjp.input_grads.isApprox(3.0 * head));

  auto net = mlp_init({4, 6, 6, 2}, Activation::tanh, Activation::tanh, 8);
  std::mt19937_64 rng(3);
  auto xb = random_batch(rng, 4, 4);
  auto zero = backward_scalar_head(net, xb, Matrix<double>(Matrix<double>::Zero(4, 2)));
  CHECK(zero.input_grads.cwiseAbs().maxCoeff() == 0.0);
  for (auto& w : zero.param_grads.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(backward_scalar_head(net, xb, Matrix<double>(Matrix<double>::Zero(4, 3))), ShapeError);

  // d/dx of sum(head .* f(x)) against finite differences.
  auto h = random_batch(rng, 4, 2);
  auto objective = [&](const Matrix<double>& in) { return forward(net, in).cwiseProduct(h).sum(); };
  auto analytic = backward_scalar_head(net, xb, h);
  CHECK(max_relative_error(analytic.input_grads, numeric_input_grads(xb, objective)) < 1e-4);
  auto pnum = numeric_param_grads(net, [&](const Mlp<double>& n) { return forward(n, xb).cwiseProduct(h).sum(); });
  CHECK(max_relative_error(analytic.param_grads, pnum) < 1e-4);
}

TEST_CASE("adam_step") {
  auto net = mlp_init({2, 3, 1}, Activation::relu, Activation::identity, 1);
  auto before = net;
  auto state = adam_init(net, 1e-2);
  adam_step(net, GradientSet<double>::zeros_like(net), state);
  CHECK(state.step == 1);
  for (std::size_t k = 0; k < net.num_layers(); ++k) CHECK(net.weights[k] == before.weights[k]);

  auto g = GradientSet<double>::zeros_like(net);
  g.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(net, g, state), NumericError);

  // Constant positive gradient: monotone descent.
  auto scalar = affine(0.0, 0.0);
  auto s2 = adam_init(scalar, 1e-2);
  auto cg = GradientSet<double>::zeros_like(scalar);
  cg.weights[0](0, 0) = 0.7;
  double prev = 0.0;
  for (int i = 0; i < 50; ++i) {
    adam_step(scalar, cg, s2);
    CHECK(scalar.weights[0](0, 0) < prev);
    prev = scalar.weights[0](0, 0);
  }

  // Quadratic bowl (w - 3)^2.
  auto bowl = affine(0.0, 0.0);
  auto s3 = adam_init(bowl, 1e-2);
  for (int i = 0; i < 5000; ++i) {
    auto bg = GradientSet<double>::zeros_like(bowl);
    bg.weights[0](0, 0) = 2.0 * (bowl.weights[0](0, 0) - 3.0);
    adam_step(bowl, bg, s3);
  }
  CHECK(std::abs(bowl.weights[0](0, 0) - 3.0) < 1e-2);
}

TEST_CASE("soft_update blending") {
  auto target = affine(0.0, 0.0);
  auto online = affine(10.0, 10.0);
  auto t = target;
  soft_update(t, online, 0.5);
  CHECK(t.weights[0](0, 0) == doctest::Approx(5.0));

  auto a = mlp_init({3, 4, 2}, Activation::relu, Activation::identity, 1);
  auto b = mlp_init({3, 4, 2}, Activation::relu, Activation::identity, 2);
  auto copy = a;
  soft_update(copy, b, 1.0);
  CHECK(copy.weights[0] == b.weights[0]);
  copy = a;
  soft_update(copy, b, 0.0);
  CHECK(copy.weights[1] == a.weights[1]);

  // Twice with tau equals once with 1 - (1 - tau)^2.
  const double tau = 0.3;
  auto twice = a, once = a;
  soft_update(twice, b, tau);
  soft_update(twice, b, tau);
  soft_update(once, b, 1.0 - (1.0 - tau) * (1.0 - tau));
  CHECK(twice.weights[0].isApprox(once.weights[0], 1e-12));

  auto other = mlp_init({3, 5, 2}, Activation::relu, Activation::identity, 2);
  CHECK_THROWS_AS(soft_update(copy, other, 0.5), ShapeError);
}

TEST_CASE("mse_mae") {
  Matrix<double> p(2, 1), t(2, 1);
  p << 1.0, -1.0;
  t << 0.0, 0.0;
  auto s = mse_mae(p, t);
  CHECK(s.mse == doctest::Approx(1.0));
  CHECK(s.mae == doctest::Approx(1.0));
  Matrix<double> p3(3, 1);
  p3 << 3.0, 0.0, 0.0;
  auto s3 = mse_mae(p3, Matrix<double>::Zero(3, 1));
  CHECK(s3.mse == doctest::Approx(3.0));
  CHECK(s3.mae == doctest::Approx(1.0));
  CHECK(mse_mae(p, p).mse == 0.0);
  CHECK_THROWS_AS(mse_mae(p, p3), ShapeError);

  // Row permutation invariance.
  std::mt19937_64 rng(4);
  auto a = random_batch(rng, 6, 2), b = random_batch(rng, 6, 2);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
  Matrix<double> pa = perm * a, pb = perm * b;
  CHECK(mse_mae(pa, pb).mse == doctest::Approx(mse_mae(a, b).mse));
  CHECK(mse_mae(pa, pb).mae == doctest::Approx(mse_mae(a, b).mae));
}

TEST_CASE("model text format round trip") {
  auto net = mlp_init({3, 7, 5, 2}, Activation::tanh, Activation::tanh, 77);
  std::mt19937_64 rng(5);
  randomize_biases(net, rng);
  std::stringstream ss;
  save_mlp(ss, net);
  const std::string text = ss.str();
  CHECK(text.rfind("mlp v1 4 3 7 5 2 tanh tanh\n", 0) == 0);
  auto back = load_mlp(ss);
  CHECK(back.layer_sizes == net.layer_sizes);
  CHECK(back.hidden_activation == Activation::tanh);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    CHECK(back.weights[k] == net.weights[k]);
    CHECK(back.biases[k] == net.biases[k]);
  }
  std::stringstream bad("mlp v2 2 1 1 relu identity\n0\n0\n");
  CHECK_THROWS_AS(load_mlp(bad), IoError);
}
