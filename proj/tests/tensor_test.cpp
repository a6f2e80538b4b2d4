#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "bytegan/ad/adam.hpp"
#include "bytegan/ad/params.hpp"
#include "bytegan/ad/tape.hpp"
#include "bytegan/rng.hpp"
#include "doctest.h"
#include "support/fd_check.hpp"

using namespace bytegan;
using namespace bytegan::ad;
using bytegan::testing::fd_check;
using bytegan::testing::FdInput;

namespace {

std::vector<double> randn(Rng& rng, int64_t n, double scale = 1.0) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = scale * rng.next_normal();
  return v;
}

}  // namespace

TEST_CASE("affine with identity weights and zero bias is the identity map") {
  Tape tp;
  std::vector<double> xv{1.0, -2.0, 3.0, 0.5, 0.25, -0.125};
  Tensor x = tp.leaf({2, 3}, xv, false);
  std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Tensor w = tp.constant({3, 3}, eye);
  Tensor b = tp.constant_fill({3}, 0.0);
  Tensor y = tp.affine(x, w, b);
  CHECK(y.values() == xv);
}

TEST_CASE("1x1 delta kernel convolution preserves a constant image") {
  Tape tp;
  Tensor x = tp.constant_fill({1, 1, 4, 4}, 3.5);
  std::vector<double> kv{1.0};
  Tensor k = tp.constant({1, 1, 1, 1}, kv);
  Tensor y = tp.conv2d(x, k, 1, 0);
  for (double v : y.values()) CHECK(v == 3.5);
}

TEST_CASE("leaky rectifier definition") {
  Tape tp;
  std::vector<double> xv{-1.0, 2.0, 0.0};
  Tensor y = tp.leaky_relu(tp.leaf({3}, xv, false), 0.2);
  CHECK(y.values()[0] == doctest::Approx(-0.2));
  CHECK(y.values()[1] == doctest::Approx(2.0));
  CHECK(y.values()[2] == doctest::Approx(0.0));
}

TEST_CASE("d/dx x^2 at 3 is 6") {
  Tape tp;
  std::vector<double> xv{3.0};
  Tensor x = tp.leaf({1}, xv, true);
  Tensor y = tp.sum_all(tp.square(x));
  auto gm = tp.backward(y);
  CHECK(gm.grad(x).values()[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient of a constant w.r.t. an unused leaf is absent, zero via gradient()") {
  Tape tp;
  std::vector<double> xv{1.0, 2.0};
  Tensor x = tp.leaf({2}, xv, true);
  Tensor c = tp.constant_fill({}, 5.0);
  auto gm = tp.backward(tp.shift(c, 1.0));
  CHECK(!gm.has(x));
  CHECK_THROWS_AS((void)tp.gradient(tp.shift(c, 2.0), x), Error);
}

TEST_CASE("backward requires a scalar") {
  Tape tp;
  Tensor x = tp.leaf({2}, std::vector<double>{1.0, 2.0}, true);
  CHECK_THROWS_WITH_AS((void)tp.backward(x), doctest::Contains("NotScalar"), Error);
}

TEST_CASE("NaN surfaces as NumericalFault, never silently") {
  Tape tp;
  Tensor z = tp.constant_fill({2}, 0.0);
  CHECK_THROWS_WITH_AS((void)tp.recip(z), doctest::Contains("NumericalFault"), Error);
}

TEST_CASE("finite differences agree with backward on every primitive") {
  Rng rng(7);
  auto run = [&](const char* name, const bytegan::testing::GraphFn& fn,
                 std::vector<FdInput> inputs) {
    double err = fd_check(fn, std::move(inputs));
    INFO(name);
    CHECK(err <= 1e-4);
  };

  for (int trial = 0; trial < 5; ++trial) {
    run("add+mul+sub",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.mul(tp.add(in[0], in[1]), tp.sub(in[0], in[1])));
        },
        {{{2, 3}, randn(rng, 6)}, {{2, 3}, randn(rng, 6)}});
    run("matmul+bias",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.tanh(tp.affine(in[0], in[1], in[2])));
        },
        {{{3, 4}, randn(rng, 12)}, {{4, 2}, randn(rng, 8)}, {{2}, randn(rng, 2)}});
    run("conv2d",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.square(tp.conv2d(in[0], in[1], 2, 1)));
        },
        {{{2, 2, 5, 5}, randn(rng, 100)}, {{3, 2, 3, 3}, randn(rng, 54)}});
    run("conv2d_transpose",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.tanh(tp.conv2d_transpose(in[0], in[1], 2, 1)));
        },
        {{{2, 3, 3, 3}, randn(rng, 54)}, {{3, 2, 4, 4}, randn(rng, 96)}});
    run("sigmoid+softplus+recip",
        [](Tape& tp, const std::vector<Tensor>& in) {
          Tensor a = tp.sigmoid(in[0]);
          Tensor b = tp.softplus(in[0]);
          return tp.sum_all(tp.mul(a, tp.recip(tp.shift(b, 1.0))));
        },
        {{{4}, randn(rng, 4)}});
    run("l2norm_samples",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.square(tp.shift(tp.l2norm_samples(in[0]), -1.0)));
        },
        {{{3, 4}, randn(rng, 12, 2.0)}});
    run("chan bias and sums",
        [](Tape& tp, const std::vector<Tensor>& in) {
          Tensor y = tp.bias_chan(in[0], in[1]);
          return tp.sum_all(tp.square(tp.chansum(y)));
        },
        {{{2, 3, 2, 2}, randn(rng, 24)}, {{3}, randn(rng, 3)}});
    run("maxpool2",
        [](Tape& tp, const std::vector<Tensor>& in) {
          return tp.sum_all(tp.square(tp.maxpool2(in[0])));
        },
        {{{1, 2, 4, 4}, randn(rng, 32)}});
    run("mean+sample ops",
        [](Tape& tp, const std::vector<Tensor>& in) {
          Tensor s = tp.sample_mean(in[0]);
          Tensor b = tp.broadcast_sample(tp.square(s), in[0].shape());
          return tp.mean_all(tp.mul(b, in[0]));
        },
        {{{3, 5}, randn(rng, 15)}});
  }
}

TEST_CASE("second-order gradient through the gradient norm matches finite differences") {
  // critic D(x) = w2 . tanh(W1 x + b1); T(theta) = ||grad_x D(x)||
  Rng rng(11);
  const int d = 3, hdim = 4;
  std::vector<double> xv = randn(rng, d);

  auto norm_of_input_grad = [&](Tape& tp, const std::vector<Tensor>& in) {
    Tensor w1 = in[0], b1 = in[1], w2 = in[2];
    Tensor x = tp.leaf({1, d}, xv, false);
    Tensor h = tp.tanh(tp.affine(x, w1, b1));
    Tensor out = tp.sum_all(tp.matmul(h, w2));
    Tensor gx = tp.gradient(out, x);
    return tp.sum_all(tp.l2norm_samples(gx));
  };

  double err = fd_check(norm_of_input_grad, {{{d, hdim}, randn(rng, d * hdim)},
                                             {{hdim}, randn(rng, hdim)},
                                             {{hdim, 1}, randn(rng, hdim)}});
  CHECK(err <= 1e-3);
}

TEST_CASE("grad_with_tape of a linear critic is the coefficient vector") {
  // D(x) = a.x  =>  grad_x D = a for any x; a second backward through ||a||
  // gives a/||a||.
  Tape tp;
  std::vector<double> av{0.6, -0.8};
  std::vector<double> xv{5.0, -7.0};
  Tensor a = tp.leaf({1, 2}, av, true);
  Tensor x = tp.leaf({1, 2}, xv, false);
  Tensor out = tp.sum_all(tp.mul(a, x));
  Tensor gx = tp.gradient(out, x);
  CHECK(gx.values()[0] == doctest::Approx(0.6));
  CHECK(gx.values()[1] == doctest::Approx(-0.8));

  Tensor norm = tp.sum_all(tp.l2norm_samples(gx));
  CHECK(norm.scalar() == doctest::Approx(1.0));
  auto gm = tp.backward(norm);
  // d||a||/da = a/||a||
  CHECK(gm.grad(a).values()[0] == doctest::Approx(0.6));
  CHECK(gm.grad(a).values()[1] == doctest::Approx(-0.8));
}

TEST_CASE("unit-slope critic has zero gradient penalty") {
  Tape tp;
  std::vector<double> xv{0.3, -1.25, 4.0};
  Tensor x = tp.leaf({3, 1}, xv, true);
  Tensor out = tp.sum_all(x);
  Tensor gx = tp.gradient(out, x);
  Tensor pen = tp.sum_all(tp.square(tp.shift(tp.l2norm_samples(gx), -1.0)));
  CHECK(pen.scalar() == 0.0);
}

TEST_CASE("adam first step with defaults moves by about -alpha") {
  ParamSet ps;
  ps.add("w", {1}, {1.0});
  AdamState adam{AdamConfig{}};
  std::map<std::string, std::vector<double>> grads{{"w", {0.5}}};
  adam.step(ps, grads);
  CHECK(adam.steps() == 1);
  // m-hat = 0.5, v-hat = 0.25 -> delta = -1e-4 * 0.5/(0.5 + 1e-8)
  CHECK(ps.values("w")[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-9));
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  ParamSet ps;
  ps.add("w", {2}, {0.25, -0.75});
  AdamState adam{AdamConfig{}};
  std::map<std::string, std::vector<double>> grads{{"w", {0.0, 0.0}}};
  for (int i = 0; i < 3; ++i) adam.step(ps, grads);
  CHECK(ps.values("w")[0] == 0.25);
  CHECK(ps.values("w")[1] == -0.75);
}

TEST_CASE("init_params is seeded, zero-biased, and centered") {
  std::vector<ParamSpec> specs{
      {"w", {100, 100}, ParamSpec::Init::WeightNormal},
      {"b", {100}, ParamSpec::Init::ZeroBias},
  };
  ParamSet a = init_params(specs, 42);
  ParamSet b = init_params(specs, 42);
  CHECK(a.values("w") == b.values("w"));
  for (double v : a.values("b")) CHECK(v == 0.0);

  double mean = 0.0;
  for (double v : a.values("w")) mean += v;
  mean /= 1e4;
  // 4 sigma / sqrt(n) bound on the sample mean of N(0, 0.02^2)
  CHECK(std::abs(mean) <= 4.0 * 0.02 / 100.0);

  ParamSet c = init_params(specs, 43);
  CHECK(a.values("w") != c.values("w"));
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::vector<ParamSpec> specs{
      {"conv1.w", {4, 1, 3, 3}, ParamSpec::Init::WeightNormal},
      {"conv1.b", {4}, ParamSpec::Init::ZeroBias},
  };
  ParamSet ps = init_params(specs, 9);
  auto path = std::filesystem::temp_directory_path() / "bytegan_ckpt_test.bin";
  save_checkpoint(ps, path);
  ParamSet back = load_checkpoint(path);
  CHECK(back.names() == ps.names());
  CHECK(back.values("conv1.w") == ps.values("conv1.w"));
  CHECK(back.shape("conv1.w") == ps.shape("conv1.w"));
  std::filesystem::remove(path);
}

TEST_CASE("forward values and gradients are reproducible") {
  auto run_once = [] {
    Rng rng(5);
    Tape tp;
    Tensor x = tp.leaf({2, 2, 4, 4}, randn(rng, 64), true);
    Tensor k = tp.leaf({3, 2, 3, 3}, randn(rng, 54), true);
    Tensor out = tp.mean_all(tp.tanh(tp.conv2d(x, k, 1, 1)));
    auto gm = tp.backward(out);
    return std::make_pair(gm.grad(x).values(), gm.grad(k).values());
  };
  auto a = run_once();
  auto b = run_once();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}
