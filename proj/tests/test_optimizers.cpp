#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "modeforge/optimizers.hpp"

using namespace modeforge;

namespace {

Tensor scalar(double v) { return Tensor::Constant(1, 1, v); }

}  // namespace

TEST(AdaGrad, FirstStep) {
  Tensor theta = scalar(0.0), g = scalar(2.0), acc = scalar(0.0);
  adagrad_step(theta, g, acc, 0.1, 1e-8);
  EXPECT_EQ(acc(0, 0), 4.0);
  EXPECT_NEAR(theta(0, 0), -0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
}

TEST(AdaGrad, AccumulatorShrinksLaterSteps) {
  Tensor theta = scalar(0.0), g = scalar(1.0), acc = scalar(0.0);
  adagrad_step(theta, g, acc, 0.1, 0.0);
  adagrad_step(theta, g, acc, 0.1, 0.0);
  EXPECT_NEAR(theta(0, 0), -0.1 - 0.1 / std::sqrt(2.0), 1e-12);
}

TEST(RMSProp, FirstStep) {
  Tensor theta = scalar(0.0), g = scalar(1.0), avg = scalar(0.0);
  rmsprop_step(theta, g, avg, 0.1, 0.9, 1e-8);
  EXPECT_NEAR(avg(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(-theta(0, 0), 0.1 / (std::sqrt(0.1) + 1e-8), 1e-12);
  EXPECT_NEAR(-theta(0, 0), 0.31623, 1e-5);
}

TEST(Adam, FirstStepIsLearningRate) {
  Tensor theta = scalar(0.0), g = scalar(1.0), m = scalar(0.0), v = scalar(0.0);
  adam_step(theta, g, m, v, 1, 0.001, 0.9, 0.999, 1e-8);
  EXPECT_NEAR(m(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(v(0, 0), 0.001, 1e-15);
  EXPECT_NEAR(-theta(0, 0), 0.001 / (1.0 + 1e-8), 1e-12);
}

TEST(Adam, UpdateMagnitudeIndependentOfGradientScale) {
  for (double scale : {1e-3, 1.0, 1e3}) {
    Tensor theta = scalar(0.0), g = scalar(scale), m = scalar(0.0), v = scalar(0.0);
    adam_step(theta, g, m, v, 1, 0.001, 0.9, 0.999, 0.0);
    EXPECT_NEAR(theta(0, 0), -0.001, 1e-12);
  }
}

TEST(Optimizer, ElementwiseOverTensors) {
  Tensor a = Tensor::Zero(2, 2), b = Tensor::Zero(3, 1);
  Tensor ga(2, 2), gb(3, 1);
  ga << 1, -2, 3, -4;
  gb << 0.5, 0.25, -0.5;
  Optimizer opt({OptimizerKind::AdaGrad, 0.1, 0.9, 0.9, 0.999, 0.0});
  opt.step({&a, &b}, {&ga, &gb});
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_NEAR(a(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(a(1, 0), -0.1, 1e-15);
  EXPECT_NEAR(b(0, 0), -0.1, 1e-15);
  EXPECT_NEAR(b(1, 0), -0.1, 1e-15);
}

TEST(Optimizer, RejectsNonFiniteGradient) {
  Tensor a = Tensor::Zero(1, 1), g = scalar(std::numeric_limits<double>::quiet_NaN());
  Optimizer opt({OptimizerKind::RMSProp, 0.01});
  try {
    opt.step({&a}, {&g});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
}

TEST(Optimizer, RejectsShapeAndConfigErrors) {
  Tensor a = Tensor::Zero(2, 1), g = Tensor::Zero(1, 2);
  Optimizer opt({OptimizerKind::Adam, 0.001});
  EXPECT_THROW(opt.step({&a}, {&g}), Error);
  EXPECT_THROW(opt.step({&a}, {}), Error);
  EXPECT_THROW(Optimizer({OptimizerKind::Adam, 0.0}), Error);
  EXPECT_THROW(parse_optimizer("sgd"), Error);
  EXPECT_EQ(parse_optimizer("rmsprop"), OptimizerKind::RMSProp);
}
