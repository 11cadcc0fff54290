#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "motionadapter/guidance.hpp"
#include "motionadapter/synth.hpp"
#include "oracles.hpp"

using namespace motionadapter;

namespace {

const ExtractionConfig kSoft{3, ExtractionMode::Soft, 1};

MotionSequence aligned_of(const Matrix& attention, const GridShape& shape) {
  PairMotions pairs;
  for (std::size_t i = 1; i < shape.frames; ++i)
    for (std::size_t j = 0; j < i; ++j) pairs.emplace(PairKey{j, i}, extract_motion(slice_pair(attention, shape, j, i), kSoft));
  return align_to_first(pairs, shape);
}

}  // namespace

TEST(GuidanceLoss, Values) {
  MotionSequence a(2, 2, 2), b(2, 2, 2);
  EXPECT_EQ(guidance_loss(a, b), 0.0);
  for (auto& f : b.frames)
    for (auto& v : f.vectors()) v = {1, 0};
  EXPECT_EQ(guidance_loss(a, b), 0.5);
  EXPECT_THROW(guidance_loss(a, MotionSequence(3, 2, 2)), Error);
}

TEST(GuidanceLoss, MatchesStraightSumAndIsSymmetric) {
  std::mt19937_64 rng(11);
  const auto a = oracle::random_sequence(rng, 2, 3, 3), b = oracle::random_sequence(rng, 2, 3, 3);
  double sum = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < 9; ++p) {
      sum += (a[i][p].u - b[i][p].u) * (a[i][p].u - b[i][p].u);
      sum += (a[i][p].v - b[i][p].v) * (a[i][p].v - b[i][p].v);
    }
  EXPECT_NEAR(guidance_loss(a, b), sum / 36.0, 1e-14);
  EXPECT_EQ(guidance_loss(a, b), guidance_loss(b, a));
  EXPECT_GT(guidance_loss(a, b), 0.0);
}

TEST(GuidanceStepCount, Schedule) {
  EXPECT_EQ(guidance_step_count(50, 0.2), 10u);
  EXPECT_EQ(guidance_step_count(50, 0.0), 0u);
  EXPECT_EQ(guidance_step_count(49, 0.2), 10u);
  EXPECT_EQ(guidance_step_count(50, 1.0), 50u);
  EXPECT_THROW(guidance_step_count(0, 0.2), Error);
  EXPECT_THROW(guidance_step_count(50, 1.5), Error);
}

TEST(SoftmaxRows, SumsToOneAndShiftInvariant) {
  std::mt19937_64 rng(1);
  Matrix x = oracle::random_matrix(rng, 5, 7, -3.0, 3.0);
  const Matrix s = softmax_rows(x);
  for (std::size_t r = 0; r < 5; ++r) {
    double sum = 0;
    for (double v : s.row(r)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
  for (double& v : x.row(2)) v += 1000.0;
  const Matrix t = softmax_rows(x);
  for (std::size_t c = 0; c < 7; ++c) EXPECT_NEAR(t(2, c), s(2, c), 1e-13);
}

TEST(LossAndGrad, SelfTargetIsStationary) {
  std::mt19937_64 rng(2);
  const GridShape shape(3, 2, 3);
  const GuidanceParams params{oracle::random_matrix(rng, shape.tokens(), shape.tokens(), -1.0, 1.0)};
  const auto target = aligned_of(softmax_rows(params.logits), shape);
  const auto lg = loss_and_grad(params, shape, target, kSoft);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(oracle::max_abs(lg.gradient), 0.0);
}

TEST(LossAndGrad, SharpOneHotOptimum) {
  const GridShape shape(3, 3, 3);
  FlowSpec spec;
  spec.kind = FlowKind::Random;
  spec.shape = shape;
  spec.seed = 4;
  const auto flows = generate_flow(spec);
  Matrix logits = onehot_attention_from_flow(flows.flows, shape);
  for (double& x : logits.data()) x *= 60.0;
  PairMotions forward;
  for (const auto& [key, field] : flows.flows)
    if (key.first < key.second) forward.emplace(key, field);
  const auto target = align_to_first(forward, shape);
  const auto lg = loss_and_grad(GuidanceParams{logits}, shape, target, kSoft);
  EXPECT_LT(lg.loss, 1e-8);
  EXPECT_LT(oracle::max_abs(lg.gradient), 1e-8);
}

TEST(LossAndGrad, MatchesFiniteDifferencesOnRandomToys) {
  std::mt19937_64 rng(3);
  int checked = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t f = 2 + rng() % 2, h = 1 + rng() % 3, w = 1 + rng() % 3;
    const GridShape shape(f, h, w);
    const GuidanceParams params{oracle::random_matrix(rng, shape.tokens(), shape.tokens(), -2.0, 2.0)};
    const auto target = oracle::random_sequence(rng, f, h, w, 1.5);
    for (auto mode : {ChainMode::MeanOverPaths, ChainMode::VerbatimOneOverF}) {
      const auto analytic = loss_and_grad(params, shape, target, kSoft, mode);
      const auto fd = fd_gradient(params, shape, target, kSoft, 1e-4, mode);
      const double rel = oracle::max_relative_error(analytic.gradient, fd);
      worst = std::max(worst, rel);
      EXPECT_LE(rel, 1e-4) << "trial " << trial << " shape " << f << "x" << h << "x" << w;
      EXPECT_DOUBLE_EQ(analytic.loss, guidance_objective(params, shape, target, kSoft, mode));
      ++checked;
    }
  }
  EXPECT_GE(checked, 20);
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(LossAndGrad, RowShiftInvariance) {
  std::mt19937_64 rng(5);
  const GridShape shape(2, 2, 2);
  GuidanceParams params{oracle::random_matrix(rng, 8, 8, -1.0, 1.0)};
  // dyadic logits and integer shifts keep every subtraction exact
  for (double& x : params.logits.data()) x = std::round(x * 1024.0) / 1024.0;
  const auto target = oracle::random_sequence(rng, 2, 2, 2, 1.0);
  const auto before = loss_and_grad(params, shape, target, kSoft);
  for (std::size_t r = 0; r < 8; ++r)
    for (double& x : params.logits.row(r)) x += double(r) - 3.0;
  const auto after = loss_and_grad(params, shape, target, kSoft);
  EXPECT_EQ(after.loss, before.loss);
  for (std::size_t r = 0; r < 8; ++r) {
    double sum = 0.0;
    for (double g : after.gradient.row(r)) sum += g;
    EXPECT_NEAR(sum, 0.0, 1e-10);
  }
}

TEST(CentralDifference, QuadraticAndBadEpsilon) {
  const Matrix x(2, 2, std::vector<double>{1, -2, 0.5, 3});
  const auto g = central_difference(
      [](const Matrix& m) {
        double s = 0;
        for (double v : m.data()) s += v * v;
        return s;
      },
      x, 1e-3);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(g.data()[k], 2.0 * x.data()[k], 1e-9);
  const GridShape shape(2, 1, 1);
  EXPECT_THROW(fd_gradient(GuidanceParams{Matrix(2, 2)}, shape, MotionSequence(2, 1, 1), kSoft, 0.0), Error);
}

TEST(LossAndGrad, Errors) {
  const GridShape shape(2, 1, 2);
  const GuidanceParams params{Matrix(4, 4)};
  EXPECT_THROW(loss_and_grad(params, shape, MotionSequence(2, 1, 2), {1, ExtractionMode::Hard, 1}), Error);
  EXPECT_THROW(loss_and_grad(GuidanceParams{Matrix(3, 3)}, shape, MotionSequence(2, 1, 2), kSoft), Error);
  EXPECT_THROW(loss_and_grad(params, shape, MotionSequence(3, 1, 2), kSoft), Error);
}

TEST(Optimize, ReducesLossOnSinglePairToy) {
  const GridShape shape(2, 2, 2);
  FlowSpec spec;
  spec.shape = shape;
  spec.constant = {1, 0};
  const auto flows = generate_flow(spec);
  const auto target = aligned_of(soft_attention_from_flow(flows.flows, shape, 2.0), shape);
  GuidanceSchedule schedule;
  schedule.total_steps = 200;
  schedule.guidance_fraction = 1.0;
  schedule.step_size = 1.0;
  const auto result = optimize(GuidanceParams{Matrix(8, 8)}, shape, target, schedule, kSoft);
  ASSERT_EQ(result.trace.size(), 200u);
  for (std::size_t s = 1; s < result.trace.size(); ++s) EXPECT_LE(result.trace[s], result.trace[s - 1]);
  EXPECT_LE(result.final_loss, 0.1 * result.trace.front());
  EXPECT_LE(result.final_loss, result.trace.back());

  std::ostringstream csv;
  write_trace_csv(csv, result.trace);
  EXPECT_EQ(csv.str().substr(0, 10), "step,loss\n");
}

TEST(Optimize, OptimalStartKeepsTraceAtZero) {
  std::mt19937_64 rng(12);
  const GridShape shape(2, 2, 2);
  const GuidanceParams params{oracle::random_matrix(rng, 8, 8, -1.0, 1.0)};
  const auto target = aligned_of(softmax_rows(params.logits), shape);
  const auto result = optimize(params, shape, target, GuidanceSchedule{}, kSoft);
  ASSERT_EQ(result.trace.size(), 10u);
  for (double l : result.trace) EXPECT_EQ(l, 0.0);
  EXPECT_EQ(result.params.logits, params.logits);
}

TEST(Optimize, ZeroStepsAndDefaults) {
  const GridShape shape(2, 1, 2);
  GuidanceSchedule schedule;
  schedule.guidance_fraction = 0.0;
  const auto none = optimize(GuidanceParams{Matrix(4, 4)}, shape, MotionSequence(2, 1, 2), schedule, kSoft);
  EXPECT_TRUE(none.trace.empty());
  const auto ten = optimize(GuidanceParams{Matrix(4, 4)}, shape, MotionSequence(2, 1, 2), GuidanceSchedule{}, kSoft);
  EXPECT_EQ(ten.trace.size(), 10u);
  schedule.step_size = -1.0;
  EXPECT_THROW(optimize(GuidanceParams{Matrix(4, 4)}, shape, MotionSequence(2, 1, 2), schedule, kSoft), Error);
}
