#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "microweather/errors.hpp"
#include "microweather/synthetic.hpp"
#include "microweather/training.hpp"

using namespace mw;
using nn::Matrix;

TEST(Loss, ZeroWhenPredictionsMatch) {
  const Matrix o(3, 4, std::vector<double>(12, 1.5));
  EXPECT_EQ(loss_value(o, o, Matrix(3, 4, 1.0)), 0.0);
}

TEST(Loss, EmptyBatchThrows) { EXPECT_THROW(loss_value(Matrix(2, 4), Matrix(2, 4), Matrix(2, 4)), EmptyBatch); }

TEST(Loss, MatchesScalarOracle) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 2);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix p(5, 4), o(5, 4), v(5, 4);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      p.values()[i] = n(rng);
      o.values()[i] = n(rng);
      v.values()[i] = keep(rng) ? 1.0 : 0.0;
      if (v.values()[i] > 0) {
        num += (p.values()[i] - o.values()[i]) * (p.values()[i] - o.values()[i]);
        den += 1.0;
      }
    }
    if (den == 0) continue;
    EXPECT_NEAR(loss_value(p, o, v), num / den, 1e-12);
  }
}

TEST(Schedule, CosineEndpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 0, 100), 0.1);
  EXPECT_NEAR(cosine_lr(0.1, 50, 100), 0.05, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 100, 100), 0.0, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 25, 100), 0.05 * (1 + std::cos(std::numbers::pi / 4)), 1e-15);
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 7, 0), 0.1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  nn::ParameterStore p;
  p.add("w", Matrix(1, 3, std::vector<double>{1.0, -2.0, 0.5}));
  nn::Gradients g;
  g["w"] = Matrix(1, 3, std::vector<double>{3.0, -0.01, 100.0});
  TrainConfig c;
  c.lr0 = 0.01;
  c.weight_decay = 0.0;
  AdamState st;
  adam_step(p, g, st, c, 1000);
  EXPECT_NEAR(p.at("w")(0, 0), 1.0 - 0.01, 1e-8);
  EXPECT_NEAR(p.at("w")(0, 1), -2.0 + 0.01, 1e-6);
  EXPECT_NEAR(p.at("w")(0, 2), 0.5 - 0.01, 1e-8);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ZeroGradientWithoutDecayIsNoOp) {
  nn::ParameterStore p;
  p.add("w", Matrix(2, 2, std::vector<double>{1, 2, 3, 4}));
  const auto before = p;
  nn::Gradients g;
  g["w"] = Matrix(2, 2);
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamState st;
  adam_step(p, g, st, c, 10);
  EXPECT_EQ(p, before);
}

TEST(Adam, ZeroLearningRateIsNoOp) {
  nn::ParameterStore p;
  p.add("w", Matrix(2, 2, std::vector<double>{1, 2, 3, 4}));
  const auto before = p;
  nn::Gradients g;
  g["w"] = Matrix(2, 2, std::vector<double>{1, -1, 5, 0.1});
  TrainConfig c;
  c.lr0 = 0.0;
  AdamState st;
  adam_step(p, g, st, c, 10);
  EXPECT_EQ(p, before);
}

TEST(Adam, NonFiniteGradientThrows) {
  nn::ParameterStore p;
  p.add("w", Matrix(1, 1));
  nn::Gradients g;
  g["w"] = Matrix(1, 1, std::nan(""));
  AdamState st;
  EXPECT_THROW(adam_step(p, g, st, TrainConfig{}, 10), NumericalError);
}

TEST(TrainConfig, StepsOverrideEpochs) {
  TrainConfig c;
  c.timestamps_per_step = 32;
  c.epochs = 2;
  EXPECT_EQ(c.total_steps(100), 8u);
  c.steps = 5;
  EXPECT_EQ(c.total_steps(100), 5u);
}

namespace {

TrainConfig quick_train(std::size_t steps) {
  TrainConfig tc;
  tc.steps = steps;
  tc.timestamps_per_step = 4;
  tc.eval_every = 5;
  tc.val_timestamps = 12;
  tc.lr0 = 3e-3;
  tc.seed = 11;
  return tc;
}

}  // namespace

TEST(Train, IsBitwiseDeterministic) {
  const Dataset d = generate_synthetic_world(fixture::small_world());
  const auto mc = fixture::small_model_config(d);
  const auto a = train(d, mc, quick_train(15));
  const auto b = train(d, mc, quick_train(15));
  EXPECT_EQ(a.state, b.state);
  std::ostringstream la, lb;
  a.report.write_csv(la);
  b.report.write_csv(lb);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_LT(a.report.preflight_rel_error, 1e-4);
}

TEST(Train, SelectsLowestValidationLoss) {
  const Dataset d = generate_synthetic_world(fixture::small_world());
  const auto r = train(d, fixture::small_model_config(d), quick_train(20));
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  for (const auto& rec : r.report.records) {
    if (rec.val_loss && *rec.val_loss < best) {
      best = *rec.val_loss;
      best_step = rec.step;
    }
  }
  EXPECT_EQ(r.report.selected_step, best_step);
  EXPECT_EQ(r.report.selected_val_loss, best);
  const auto score = validation_score(d, r.state, Role::Val, 12);
  EXPECT_NEAR(score.loss, best, 1e-12);
}

TEST(Train, ZeroStepsReturnsInitialState) {
  const Dataset d = generate_synthetic_world(fixture::small_world());
  const auto mc = fixture::small_model_config(d);
  auto tc = quick_train(0);
  tc.epochs = 0;
  tc.preflight = false;
  const auto r = train(d, mc, tc);
  auto init = init_model_state(mc, compute_normalization(d));
  EXPECT_EQ(r.state.parameters, init.parameters);
  EXPECT_EQ(r.report.selected_step, 0u);
}

TEST(Train, EmptyValidationRoleThrows) {
  Dataset d = generate_synthetic_world(fixture::small_world());
  d.partition.test.merge(d.partition.val);
  EXPECT_THROW(train(d, fixture::small_model_config(d), quick_train(2)), PartitionError);
}
