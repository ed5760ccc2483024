#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pimodnn/numerics/grad_check.hpp"
#include "pimodnn/numerics/layers.hpp"
#include "pimodnn/numerics/param_set.hpp"
#include "pimodnn/numerics/tape.hpp"
#include "test_util.hpp"

using namespace pimodnn;
using namespace pimodnn::numerics;

TEST(Affine, IdentityWeights) {
  Tape t;
  Var y = affine(t.constant(make_tensor({{1, 2}})), t.constant(make_tensor({{1, 0}, {0, 1}})),
                 t.constant(make_tensor({{0, 0}})));
  EXPECT_EQ(t.value(y), make_tensor({{1, 2}}));
}

TEST(Affine, ZeroWeightPassesBias) {
  Tape t;
  Var y = affine(t.constant(make_tensor({{1}})), t.constant(make_tensor({{0}})), t.constant(make_tensor({{3}})));
  EXPECT_EQ(t.value(y)(0, 0), 3.0);
}

TEST(Affine, HandArithmetic) {
  Tape t;
  Var y = affine(t.constant(make_tensor({{2, 3}})), t.constant(make_tensor({{1}, {1}})), t.constant(make_tensor({{-1}})));
  EXPECT_EQ(t.value(y)(0, 0), 4.0);
}

TEST(Affine, ShapeMismatchNamesOperands) {
  Tape t;
  try {
    affine(t.constant(make_tensor({{1, 2, 3}})), t.constant(make_tensor({{1}, {1}})), t.constant(make_tensor({{0}})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("affine"), std::string::npos);
  }
}

TEST(Activation, Examples) {
  Tape t;
  EXPECT_EQ(t.value(relu(t.constant(row_tensor({-1, 0, 2})))), row_tensor({0, 0, 2}));
  EXPECT_EQ(t.value(tanh(t.constant(0.0)))(0, 0), 0.0);
  EXPECT_EQ(t.value(sigmoid(t.constant(0.0)))(0, 0), 0.5);
}

TEST(Activation, ReluSubgradientAtZeroIsZero) {
  Tape t;
  Var x = t.variable(row_tensor({0.0, 1.0, -1.0}));
  t.backward(sum(relu(x)));
  EXPECT_EQ(t.grad(x), row_tensor({0.0, 1.0, 0.0}));
}

TEST(Activation, ReluNonNegativeProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Tape t;
    Tensor2 x = testutil::random_tensor(3, 7, rng, 100.0);
    EXPECT_GE(t.value(relu(t.constant(x))).minCoeff(), 0.0);
  }
}

TEST(Gru, ZeroParamsHalvesHidden) {
  ParamSet ps;
  ps.add("g.Wi", Tensor2::Zero(1, 3));
  ps.add("g.Wh", Tensor2::Zero(1, 3));
  ps.add("g.bi", Tensor2::Zero(1, 3));
  ps.add("g.bh", Tensor2::Zero(1, 3));
  Tape t;
  EXPECT_DOUBLE_EQ(t.value(gru_cell(t, ps, "g", t.constant(0.3), t.constant(0.8)))(0, 0), 0.4);
  EXPECT_EQ(t.value(gru_cell(t, ps, "g", t.constant(0.3), t.constant(0.0)))(0, 0), 0.0);
}

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// independent scalar GRU: loops over units, no matrix ops
std::vector<double> scalar_gru(const ParamSet& ps, const std::vector<double>& x, const std::vector<double>& h) {
  const auto& wi = ps.at("g.Wi").value;
  const auto& wh = ps.at("g.Wh").value;
  const auto& bi = ps.at("g.bi").value;
  const auto& bh = ps.at("g.bh").value;
  const std::size_t H = h.size();
  auto gate_in = [&](std::size_t col) {
    double s = bi(0, static_cast<Eigen::Index>(col));
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * wi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col));
    return s;
  };
  auto gate_h = [&](std::size_t col) {
    double s = bh(0, static_cast<Eigen::Index>(col));
    for (std::size_t i = 0; i < H; ++i) s += h[i] * wh(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col));
    return s;
  };
  std::vector<double> out(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double r = sig(gate_in(j) + gate_h(j));
    const double z = sig(gate_in(H + j) + gate_h(H + j));
    const double n = std::tanh(gate_in(2 * H + j) + r * gate_h(2 * H + j));
    out[j] = (1.0 - z) * n + z * h[j];
  }
  return out;
}

}  // namespace

TEST(Gru, MatchesScalarReimplementation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ParamSet ps;
    add_gru(ps, "g", 6, 4, rng);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<double> x(6), h(4);
    for (auto& v : x) v = u(rng);
    for (auto& v : h) v = u(rng);
    Tape t;
    Tensor2 xt(1, 6), ht(1, 4);
    for (int i = 0; i < 6; ++i) xt(0, i) = x[static_cast<std::size_t>(i)];
    for (int i = 0; i < 4; ++i) ht(0, i) = h[static_cast<std::size_t>(i)];
    const Tensor2 got = t.value(gru_cell(t, ps, "g", t.constant(xt), t.constant(ht)));
    const auto want = scalar_gru(ps, x, h);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(got(0, j), want[static_cast<std::size_t>(j)], 1e-12);
  }
}

TEST(Gru, WidthMismatchThrows) {
  std::mt19937_64 rng(1);
  ParamSet ps;
  add_gru(ps, "g", 6, 4, rng);
  Tape t;
  EXPECT_THROW(gru_cell(t, ps, "g", t.constant(Tensor2::Zero(1, 5)), t.constant(Tensor2::Zero(1, 4))), DimensionError);
  EXPECT_THROW(gru_cell(t, ps, "g", t.constant(Tensor2::Zero(1, 6)), t.constant(Tensor2::Zero(1, 3))), DimensionError);
}

TEST(Backward, LinearGradient) {
  ParamSet ps;
  ps.add("w", scalar_tensor(0.7));
  Tape t;
  t.backward(mul(t.param(ps, "w"), t.constant(3.0)));
  EXPECT_EQ(ps.at("w").grad(0, 0), 3.0);
}

TEST(Backward, UnusedParameterHasZeroGradient) {
  ParamSet ps;
  ps.add("w", scalar_tensor(0.7));
  ps.add("p", scalar_tensor(2.0));
  Tape t;
  t.param(ps, "p");
  t.backward(mul(t.param(ps, "w"), t.constant(3.0)));
  EXPECT_EQ(ps.at("p").grad(0, 0), 0.0);
}

TEST(Backward, RepeatedCallsAccumulate) {
  ParamSet ps;
  ps.add("w", scalar_tensor(0.7));
  for (int i = 0; i < 2; ++i) {
    Tape t;
    t.backward(mul(t.param(ps, "w"), t.constant(3.0)));
  }
  EXPECT_EQ(ps.at("w").grad(0, 0), 6.0);
  ps.zero_grad();
  EXPECT_EQ(ps.at("w").grad(0, 0), 0.0);
}

TEST(Backward, NonScalarIsContractError) {
  Tape t;
  Var x = t.variable(row_tensor({1, 2}));
  EXPECT_THROW(t.backward(x), ContractError);
}

TEST(Adam, ZeroGradientLeavesValues) {
  ParamSet ps;
  ps.add("w", make_tensor({{0.5, -0.2}}));
  const Tensor2 before = ps.at("w").value;
  ps.adam_step(0.01);
  EXPECT_EQ(ps.at("w").value, before);
}

TEST(Adam, FirstStepMagnitudeIsLr) {
  // hand Adam at t=1: m = 0.1 g, v = 0.001 g^2, mhat = g, vhat = g^2, step = lr * g / (|g| + eps)
  ParamSet ps;
  ps.add("w", scalar_tensor(1.0));
  ps.at("w").grad(0, 0) = 1.0;
  ps.adam_step(0.01);
  EXPECT_NEAR(ps.at("w").value(0, 0), 1.0 - 0.01 * 1.0 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ProjectsFlaggedParameters) {
  ParamSet ps;
  ps.add("w", make_tensor({{-0.3, 0.2}}), true);
  ps.adam_step(0.0);
  EXPECT_EQ(ps.at("w").value, make_tensor({{0.0, 0.2}}));
}

TEST(Adam, ProjectionIsIdempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ParamSet ps;
    ps.add("w", testutil::random_tensor(3, 3, rng, 1.0), true);
    ps.project();
    const Tensor2 once = ps.at("w").value;
    ps.project();
    EXPECT_EQ(ps.at("w").value, once);
  }
}

TEST(Adam, FlaggedStayNonNegativeEveryStep) {
  std::mt19937_64 rng(9);
  ParamSet ps;
  ps.add("a", testutil::random_tensor(4, 3, rng, 1.0), true);
  ps.add("b", testutil::random_tensor(1, 3, rng, 1.0));
  ps.project();
  for (int step = 0; step < 200; ++step) {
    for (const auto& n : ps.names()) ps.at(n).grad = testutil::random_tensor(ps.at(n).value.rows(), ps.at(n).value.cols(), rng, 5.0);
    ps.adam_step(0.05);
    ASSERT_TRUE(ps.satisfies_constraints()) << "step " << step;
  }
}

TEST(ParamSet, JsonRoundTrip) {
  std::mt19937_64 rng(2);
  ParamSet ps;
  add_dense(ps, "d", 3, 2, rng, {1.0, 1.0, true});
  const auto back = ParamSet::from_json(ps.to_json());
  EXPECT_EQ(back.names(), ps.names());
  EXPECT_TRUE(back.is_nonneg("d.W"));
  EXPECT_FALSE(back.is_nonneg("d.b"));
  EXPECT_EQ(back.at("d.W").value, ps.at("d.W").value);
  nlohmann::json bad = ps.to_json();
  bad["format"] = "other";
  EXPECT_THROW(ParamSet::from_json(bad), InputError);
}

TEST(GradCheck, LinearModelIsExact) {
  std::mt19937_64 rng(4);
  ParamSet ps;
  add_dense(ps, "d", 3, 1, rng);
  const Tensor2 x = testutil::random_tensor(5, 3, rng, 1.0);
  const auto rep = grad_check([&](Tape& t) { return sum(dense(t, ps, "d", t.constant(x))); }, ps);
  EXPECT_LT(rep.worst(), 1e-8);
}

TEST(GradCheck, GruOverEightSteps) {
  std::mt19937_64 rng(8);
  ParamSet ps;
  add_gru(ps, "g", 6, 5, rng);
  std::vector<Tensor2> xs;
  for (int k = 0; k < 8; ++k) xs.push_back(testutil::random_tensor(2, 6, rng, 1.0));
  const auto rep = grad_check(
      [&](Tape& t) {
        Var h = t.constant(Tensor2::Zero(2, 5));
        for (const auto& x : xs) h = gru_cell(t, ps, "g", t.constant(x), h);
        return sum(square(h));
      },
      ps);
  EXPECT_LT(rep.worst(), 1e-4);
}

// One finite-difference check per layer kind on random configurations.
class LayerGradients : public ::testing::TestWithParam<int> {};

TEST_P(LayerGradients, MatchFiniteDifferences) {
  const int seed = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::uniform_int_distribution<int> width(1, 5);
  const int in = width(rng), hid = width(rng), out = width(rng), rows = width(rng);
  const Tensor2 x = testutil::random_tensor(rows, in, rng, 1.0);
  for (auto act : {ActivationKind::Tanh, ActivationKind::Sigmoid, ActivationKind::Relu}) {
    ParamSet ps;
    add_mlp(ps, {"m", {in, hid, out}, act}, rng);
    const auto rep = grad_check([&](Tape& t) { return mean(square(mlp(t, ps, {"m", {in, hid, out}, act}, t.constant(x)))); }, ps);
    EXPECT_LT(rep.worst(), 1e-4) << "mlp act " << static_cast<int>(act);
  }
  {
    ParamSet ps;
    add_gru(ps, "g", in, hid, rng);
    const auto rep = grad_check(
        [&](Tape& t) {
          Var h = t.constant(Tensor2::Zero(rows, hid));
          for (int k = 0; k < 3; ++k) h = gru_cell(t, ps, "g", t.constant(x), h);
          return sum(h);
        },
        ps);
    EXPECT_LT(rep.worst(), 1e-4) << "gru";
  }
  {
    ParamSet ps;
    add_lstm(ps, "l", in, hid, rng);
    const auto rep = grad_check(
        [&](Tape& t) {
          LstmState s{t.constant(Tensor2::Zero(rows, hid)), t.constant(Tensor2::Zero(rows, hid))};
          for (int k = 0; k < 3; ++k) s = lstm_cell(t, ps, "l", t.constant(x), s);
          return sum(square(s.h));
        },
        ps);
    EXPECT_LT(rep.worst(), 1e-4) << "lstm";
  }
  {
    // elementwise ops not covered by the layers above
    ParamSet ps;
    ps.add("a", testutil::random_tensor(rows, in, rng, 1.0));
    ps.add("b", testutil::random_tensor(rows, in, rng, 1.0));
    const auto rep = grad_check(
        [&](Tape& t) {
          Var a = t.param(ps, "a"), b = t.param(ps, "b");
          Var y = add(softplus(a), mul(exp(scale(b, 0.3)), minimum(a, b)));
          y = add(y, log(add_scalar(square(b), 1.0)));
          return add(sum(sum_cols(y)), mean(concat_cols({slice_cols(y, 0, 1), one_minus(a)})));
        },
        ps);
    EXPECT_LT(rep.worst(), 1e-4) << "elementwise";
  }
}

INSTANTIATE_TEST_SUITE_P(RandomConfigs, LayerGradients, ::testing::Range(0, 20));
