#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/synth.hpp"
#include "oracles.hpp"

using namespace motionadapter;

namespace {

PairAttention single_row_pair(std::vector<double> row0) {
  // 2x2 grid; row 0 given, other rows uniform.
  Matrix m(4, 4, 0.25);
  for (std::size_t c = 0; c < 4; ++c) m(0, c) = row0[c];
  return PairAttention{0, 1, 2, 2, m};
}

ExtractionConfig hard(std::size_t k) { return {k, ExtractionMode::Hard, 1}; }

}  // namespace

TEST(SlicePair, SinglePixelFrames) {
  const Matrix a(2, 2, std::vector<double>{1, 2, 3, 4});
  const GridShape shape(2, 1, 1);
  EXPECT_EQ(slice_pair(a, shape, 0, 1).weights(0, 0), 2);
  EXPECT_EQ(slice_pair(a, shape, 0, 0).weights(0, 0), 1);
  EXPECT_EQ(slice_pair(a, shape, 1, 0).weights(0, 0), 3);
}

TEST(SlicePair, OutOfRangeFrame) {
  const Matrix a(2, 2, 1.0);
  try {
    slice_pair(a, GridShape(2, 1, 1), 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
  }
}

TEST(SlicePair, ZeroRowInBlock) {
  Matrix a(2, 2, 1.0);
  a(0, 1) = 0.0;
  try {
    slice_pair(a, GridShape(2, 1, 1), 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroRow);
  }
}

TEST(ExtractMotion, ArgmaxCase) {
  const auto field = extract_motion(single_row_pair({0.1, 0.2, 0.3, 0.4}), hard(1));
  EXPECT_EQ(field[0], (Vec2{1, 1}));
}

TEST(ExtractMotion, SymmetricTopTwo) {
  const auto field = extract_motion(single_row_pair({0.4, 0.4, 0.1, 0.1}), hard(2));
  EXPECT_EQ(field[0], (Vec2{0.5, 0}));
}

TEST(ExtractMotion, TopThreeTieGoesToSmallerIndex) {
  // Brute-force: stable sort by descending value keeps index order among ties.
  const std::vector<double> row = {0.5, 0.2, 0.2, 0.1};
  std::vector<std::size_t> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return row[a] > row[b]; });
  double u = 0, v = 0;
  for (int k = 0; k < 3; ++k) {
    u += double(order[k] % 2) / 3.0;
    v += double(order[k] / 2) / 3.0;
  }
  const auto field = extract_motion(single_row_pair(row), hard(3));
  EXPECT_DOUBLE_EQ(field[0].u, u);
  EXPECT_DOUBLE_EQ(field[0].v, v);
  EXPECT_DOUBLE_EQ(field[0].u, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(field[0].v, 1.0 / 3.0);
}

TEST(ExtractMotion, UniformRowSoftGivesCentroid) {
  const GridShape shape(1, 3, 4);
  const Matrix a(12, 12, 1.0);
  const auto field = extract_motion(slice_pair(a, shape, 0, 0), {3, ExtractionMode::Soft, 1});
  for (std::size_t p = 0; p < 12; ++p) {
    EXPECT_DOUBLE_EQ(field[p].u + double(p % 4), 1.5);
    EXPECT_DOUBLE_EQ(field[p].v + double(p / 4), 1.0);
  }
}

TEST(ExtractMotion, RejectsBadK) {
  EXPECT_THROW(extract_motion(single_row_pair({1, 1, 1, 1}), hard(0)), Error);
  EXPECT_THROW(extract_motion(single_row_pair({1, 1, 1, 1}), hard(5)), Error);
}

TEST(ExtractMotion, HardK1EqualsNaiveArgmax) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 1 + rng() % 5, w = 1 + rng() % 5;
    const Matrix block = oracle::random_matrix(rng, h * w, h * w, 0.0, 1.0);
    const auto got = extract_motion(PairAttention{0, 1, h, w, block}, hard(1));
    EXPECT_EQ(got, oracle::argmax_motion(block, h, w));
  }
}

TEST(ExtractMotion, RowRescalingInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t h = 3, w = 4;
    Matrix block = oracle::random_matrix(rng, 12, 12, 0.0, 1.0);
    const auto hard_before = extract_motion(PairAttention{0, 1, h, w, block}, hard(3));
    const auto soft_before = extract_motion(PairAttention{0, 1, h, w, block}, {3, ExtractionMode::Soft, 1});
    for (std::size_t r = 0; r < 12; ++r) {
      const double s = scale(rng);
      for (double& x : block.row(r)) x *= s;
    }
    EXPECT_EQ(extract_motion(PairAttention{0, 1, h, w, block}, hard(3)), hard_before);
    const auto soft_after = extract_motion(PairAttention{0, 1, h, w, block}, {3, ExtractionMode::Soft, 1});
    for (std::size_t p = 0; p < 12; ++p) {
      EXPECT_NEAR(soft_after[p].u, soft_before[p].u, 1e-12);
      EXPECT_NEAR(soft_after[p].v, soft_before[p].v, 1e-12);
    }
  }
}

TEST(ExtractMotion, ExtractedVectorsStayWithinGridBounds) {
  std::mt19937_64 rng(3);
  const std::size_t h = 4, w = 5;
  const Matrix block = oracle::random_matrix(rng, 20, 20, 0.0, 1.0);
  for (auto mode : {ExtractionMode::Hard, ExtractionMode::Soft}) {
    const auto field = extract_motion(PairAttention{0, 1, h, w, block}, {3, mode, 1});
    for (const auto& v : field.vectors()) {
      EXPECT_LE(std::abs(v.u), double(w - 1));
      EXPECT_LE(std::abs(v.v), double(h - 1));
    }
  }
}

TEST(ExtractMotion, BitIdenticalAcrossThreadCounts) {
  std::mt19937_64 rng(4);
  const GridShape shape(3, 6, 7);
  const Matrix a = oracle::random_matrix(rng, shape.tokens(), shape.tokens(), 0.0, 1.0);
  for (auto mode : {ExtractionMode::Hard, ExtractionMode::Soft}) {
    const auto one = extract_all_pairs(a, shape, {3, mode, 1});
    const auto many = extract_all_pairs(a, shape, {3, mode, 8});
    EXPECT_EQ(one, many);
  }
}

TEST(ExtractAllPairs, PairCounts) {
  EXPECT_EQ(extract_all_pairs(Matrix(2, 2, 1.0), GridShape(2, 1, 1), hard(1)).size(), 2u);
  EXPECT_TRUE(extract_all_pairs(Matrix(4, 4, 1.0), GridShape(1, 2, 2), hard(1)).empty());
  const auto pairs = extract_all_pairs(Matrix(3, 3, 1.0), GridShape(3, 1, 1), hard(1));
  std::vector<PairKey> keys;
  for (const auto& [k, v] : pairs) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<PairKey>{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}}));
}

TEST(ExtractAllPairs, ConstantFlowRoundTripThroughOneHot) {
  const GridShape shape(3, 4, 6);
  FlowSpec spec;
  spec.shape = shape;
  spec.constant = {1, 0};
  const auto flows = generate_flow(spec);
  const auto got = extract_all_pairs(onehot_attention_from_flow(flows.flows, shape), shape, hard(1));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      const auto& field = got.at({i, j});
      for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 6; ++c) {
          const double expected_u = std::min<double>(double(c + (j - i)), 5.0) - double(c);
          EXPECT_EQ(field.at(r, c), (Vec2{expected_u, 0})) << i << "->" << j << " at " << r << "," << c;
        }
      }
    }
  }
  EXPECT_EQ(got, flows.flows);
}

TEST(MseVsFlow, Values) {
  MotionField a(2, 3), b(2, 3);
  EXPECT_EQ(mse_vs_flow(a, b), 0.0);
  for (auto& v : b.vectors()) v = {1, 0};
  EXPECT_EQ(mse_vs_flow(a, b), 1.0);
  for (auto& v : b.vectors()) v = {1, 1};
  EXPECT_EQ(mse_vs_flow(a, b), 2.0);
  EXPECT_THROW(mse_vs_flow(a, MotionField(3, 2)), Error);
}

TEST(SweepSelection, EmptyInputs) {
  EXPECT_THROW(sweep_selection({}, {{{0, 1}, MotionField(1, 1)}}, GridShape(2, 1, 1), hard(1)), Error);
}

TEST(SweepSelection, SingleCell) {
  const GridShape shape(2, 1, 2);
  Matrix a(4, 4, 1.0);
  a(0, 3) = 2.0;  // pixel 0 of frame 0 -> column 1 of frame 1
  MotionField gt(1, 2, 0, 1);
  const auto result = sweep_selection({{7, 3, a}}, {{{0, 1}, gt}}, shape, hard(1));
  ASSERT_EQ(result.cells.size(), 1u);
  // pixel 0 moves by (1,0); pixel 1 ties -> column 0, moves by (-1,0)
  EXPECT_DOUBLE_EQ(result.cells[0].mse, 1.0);
  EXPECT_EQ(result.best_timestep, 7);
  EXPECT_EQ(result.best_block, 3);
}

TEST(SweepSelection, FindsNoiseFreeCell) {
  const GridShape shape(3, 4, 5);
  FlowSpec spec;
  spec.kind = FlowKind::Random;
  spec.shape = shape;
  spec.seed = 11;
  const auto flows = generate_flow(spec);
  const Matrix exact = onehot_attention_from_flow(flows.flows, shape);
  std::mt19937_64 rng(5);
  std::vector<SweepSample> samples;
  for (int t : {5, 25, 45}) {
    for (int b : {6, 18, 30}) {
      Matrix a = exact;
      if (!(t == 5 && b == 18))
        for (double& x : a.data()) x += std::uniform_real_distribution<double>(0.0, 1.5)(rng);
      samples.push_back({t, b, a});
    }
  }
  PairMotions gt;
  for (std::size_t i = 0; i + 1 < 3; ++i) gt.emplace(PairKey{i, i + 1}, flows.flows.at({i, i + 1}));
  const auto result = sweep_selection(samples, gt, shape, hard(1));
  EXPECT_EQ(result.best_timestep, 5);
  EXPECT_EQ(result.best_block, 18);
  EXPECT_EQ(result.cells.size(), 9u);
  for (const auto& c : result.cells)
    if (c.timestep == 5 && c.block == 18) {
      EXPECT_EQ(c.mse, 0.0);
    }

  std::ostringstream csv;
  write_sweep_csv(csv, result);
  EXPECT_EQ(csv.str().substr(0, 8), "t,b,mse\n");
  EXPECT_NE(csv.str().find("# argmin t=5 b=18\n"), std::string::npos);
}
