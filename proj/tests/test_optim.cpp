#include <gtest/gtest.h>

#include <cstring>

#include "oracles/scalar_optim.hpp"
#include "segaa/optim/callbacks.hpp"
#include "segaa/optim/optimizers.hpp"

using namespace segaa;
using namespace segaa::optim;

namespace {

oracle::Trace run_sgd(double theta, const SgdConfig& c) {
  oracle::Trace out{};
  double v = 0.0;
  for (int t = 0; t < oracle::kUnrollSteps; ++t) {
    const double g = 2.0 * theta;
    sgd_step<double>({&theta, 1}, {&g, 1}, {&v, 1}, c, static_cast<std::uint64_t>(t));
    out[t] = theta;
  }
  return out;
}

template <typename Step>
oracle::Trace run_adam_like(double theta, const AdamConfig& c, Step step) {
  oracle::Trace out{};
  double m = 0.0, v = 0.0;
  for (int t = 1; t <= oracle::kUnrollSteps; ++t) {
    const double g = 2.0 * theta;
    step(std::span<double>(&theta, 1), std::span<const double>(&g, 1), std::span<double>(&m, 1),
         std::span<double>(&v, 1), c, static_cast<std::uint64_t>(t));
    out[t - 1] = theta;
  }
  return out;
}

}  // namespace

TEST(Sgd, VanillaStepExample) {
  double theta = 1.0, v = 0.0;
  const double g = 0.5;
  sgd_step<double>({&theta, 1}, {&g, 1}, {&v, 1}, {0.1, 0.0, 0.0, false}, 0);
  EXPECT_DOUBLE_EQ(theta, 0.95);
}

TEST(Sgd, MatchesScalarUnroll) {
  for (bool nesterov : {true, false}) {
    for (double decay : {0.0, 1e-6, 0.1}) {
      const SgdConfig c{0.05, decay, 0.9, nesterov};
      const auto got = run_sgd(1.5, c);
      const auto want = oracle::sgd_unroll(1.5, 0.05, decay, 0.9, nesterov);
      for (int i = 0; i < oracle::kUnrollSteps; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
  }
}

TEST(Sgd, DecayedRateIsNonIncreasing) {
  const SgdConfig c{0.01, 1e-3, 0.0, false};
  double prev = c.lr;
  for (std::uint64_t t = 0; t < 1000; t += 7) {
    double theta = 0.0, v = 0.0;
    const double g = -1.0;  // theta then equals lr_t
    sgd_step<double>({&theta, 1}, {&g, 1}, {&v, 1}, c, t);
    EXPECT_LE(theta, prev);
    prev = theta;
  }
}

TEST(Adam, MatchesScalarUnroll) {
  const AdamConfig c{0.01, 0.9, 0.999, 1e-8};
  const auto got = run_adam_like(1.5, c, adam_step<double>);
  const auto want = oracle::adam_unroll(1.5, 0.01, 0.9, 0.999, 1e-8, false);
  for (int i = 0; i < oracle::kUnrollSteps; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Adam, FirstStepIsLearningRate) {
  double theta = 0.0, m = 0.0, v = 0.0;
  const double g = 1.0;
  adam_step<double>({&theta, 1}, {&g, 1}, {&m, 1}, {&v, 1}, {}, 1);
  EXPECT_NEAR(theta, -0.001, 1e-10);
  EXPECT_THROW(adam_step<double>({&theta, 1}, {&g, 1}, {&m, 1}, {&v, 1}, {}, 0), UsageError);
}

TEST(Nadam, MatchesScalarUnroll) {
  const AdamConfig c{0.01, 0.9, 0.999, 1e-8};
  const auto got = run_adam_like(1.5, c, nadam_step<double>);
  const auto want = oracle::adam_unroll(1.5, 0.01, 0.9, 0.999, 1e-8, true);
  for (int i = 0; i < oracle::kUnrollSteps; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Nadam, ZeroBeta1IsAdamBitwise) {
  const AdamConfig c{0.003, 0.0, 0.99, 1e-7};
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double start = rng.uniform(-5, 5);
    const auto a = run_adam_like(start, c, adam_step<double>);
    const auto n = run_adam_like(start, c, nadam_step<double>);
    EXPECT_EQ(std::memcmp(a.data(), n.data(), sizeof a), 0);
  }
}

TEST(Optimizers, ZeroGradientIsFixedPoint) {
  std::vector<double> theta{0.5, -2.0, 3.0}, grad(3, 0.0), m(3, 0.0), v(3, 0.0);
  const auto start = theta;
  for (std::uint64_t t = 1; t <= 10; ++t) {
    sgd_step<double>(theta, grad, m, {}, t);
    EXPECT_EQ(theta, start);
    adam_step<double>(theta, grad, m, v, {}, t);
    EXPECT_EQ(theta, start);
    nadam_step<double>(theta, grad, m, v, {}, t);
    EXPECT_EQ(theta, start);
  }
}

TEST(Optimizers, UpdatesAreBounded) {
  // Constant-magnitude gradients with random signs: Adam moves each
  // coordinate by at most lr(1+d); Nadam's look-ahead adds up to beta1 * lr.
  Rng rng(12);
  const AdamConfig c{};
  const double slack = 1e-6;
  for (int coord = 0; coord < 50; ++coord) {
    const double mag = std::pow(10.0, rng.uniform(-4, 2));
    double ta = 0, ma = 0, va = 0, tn = 0, mn = 0, vn = 0;
    for (std::uint64_t t = 1; t <= 200; ++t) {
      const double g = rng.uniform() < 0.5 ? -mag : mag;
      const double pa = ta, pn = tn;
      adam_step<double>({&ta, 1}, {&g, 1}, {&ma, 1}, {&va, 1}, c, t);
      nadam_step<double>({&tn, 1}, {&g, 1}, {&mn, 1}, {&vn, 1}, c, t);
      EXPECT_LE(std::abs(ta - pa), c.lr * (1 + slack));
      EXPECT_LE(std::abs(tn - pn), c.lr * (1 + c.beta1) * (1 + slack));
    }
  }
}

TEST(Optimizers, ShapeMismatchAndConfigValidation) {
  std::vector<double> theta(3), grad(2), m(3);
  EXPECT_THROW(sgd_step<double>(theta, grad, m, {}, 0), UsageError);
  EXPECT_THROW((SgdConfig{0.0, 0, 0.9, true}.validate()), UsageError);
  EXPECT_THROW((SgdConfig{0.1, 0, 1.0, true}.validate()), UsageError);
  EXPECT_THROW((AdamConfig{0.1, 1.0, 0.9, 1e-8}.validate()), UsageError);
  EXPECT_EQ(parse_optimizer("nadam"), OptimizerKind::Nadam);
  EXPECT_THROW(parse_optimizer("rmsprop"), UsageError);
}

TEST(Optimizers, ClassStepsEveryParameter) {
  nn::Param<double> a{"a", nn::Tensor<double>({2}, 1.0), nn::Tensor<double>({2}, 0.5)};
  nn::Param<double> b{"b", nn::Tensor<double>({1}, -1.0), nn::Tensor<double>({1}, -0.5)};
  auto opt = Optimizer<double>::sgd({0.1, 0.0, 0.0, false}, {&a, &b});
  opt.step();
  EXPECT_EQ(a.value.data, (std::vector<double>{0.95, 0.95}));
  EXPECT_EQ(b.value.data, (std::vector<double>{-0.95}));
  EXPECT_EQ(opt.steps(), 1u);
  opt.set_learning_rate(0.2);
  EXPECT_EQ(opt.learning_rate(), 0.2);
}

TEST(EarlyStop, RisingMetricsNeverStop) {
  EarlyStop es(5);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(es.update(0.5 + 0.01 * i), StopDecision::Continue);
  EXPECT_EQ(es.best_epoch(), 50u);
}

TEST(EarlyStop, PatienceArithmetic) {
  EarlyStop es(5);
  EXPECT_EQ(es.update(0.9), StopDecision::Continue);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(es.update(0.8), StopDecision::Continue);
  EXPECT_EQ(es.update(0.8), StopDecision::Stop);
  EXPECT_EQ(es.epochs_seen(), 6u);
  EXPECT_EQ(es.best_epoch(), 1u);
  EXPECT_THROW(EarlyStop(0), UsageError);
}

TEST(EarlyStop, SubThresholdGainsDoNotCount) {
  EarlyStop es(2);
  es.update(0.5);
  EXPECT_EQ(es.update(0.50005), StopDecision::Continue);
  EXPECT_FALSE(es.improved());
  EXPECT_EQ(es.update(0.50009), StopDecision::Stop);
}

TEST(EarlyStop, BestIsNeverWorseThanObserved) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    EarlyStop es(3);
    double seen = -1;
    while (true) {
      const double m = rng.uniform();
      seen = std::max(seen, m);
      if (es.update(m) == StopDecision::Stop) break;
    }
    EXPECT_GE(es.best(), seen - kImprovementThreshold);
  }
}

TEST(PlateauLr, FlatMetricsHalveTwiceInSevenEpochs) {
  PlateauLr p(3, 0.5, 1e-6);
  double lr = 0.001;
  for (int i = 0; i < 7; ++i) lr = p.update(0.7, lr);
  EXPECT_DOUBLE_EQ(lr, 0.00025);
}

TEST(PlateauLr, FloorAndReset) {
  PlateauLr p(1, 0.5, 1e-3);
  double lr = 0.004;
  lr = p.update(0.1, lr);  // first epoch improves on -inf
  EXPECT_EQ(lr, 0.004);
  for (int i = 0; i < 10; ++i) lr = p.update(0.1, lr);
  EXPECT_EQ(lr, 1e-3);
  PlateauLr q(2, 0.5, 0);
  lr = 1.0;
  lr = q.update(0.1, lr);
  lr = q.update(0.1, lr);
  lr = q.update(0.2, lr);  // improvement resets the counter
  lr = q.update(0.2, lr);
  EXPECT_EQ(lr, 1.0);
  lr = q.update(0.2, lr);
  EXPECT_EQ(lr, 0.5);
  EXPECT_THROW(PlateauLr(3, 1.0), UsageError);
}
