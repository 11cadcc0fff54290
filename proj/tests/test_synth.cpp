#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/correspond.hpp"
#include "motionadapter/synth.hpp"

using namespace motionadapter;

namespace {

FlowSet constant_flow(const GridShape& shape, Vec2 v) {
  FlowSpec spec;
  spec.shape = shape;
  spec.constant = v;
  return generate_flow(spec);
}

}  // namespace

TEST(OneHotAttention, ZeroFlowIsBlockIdentity) {
  const GridShape shape(2, 2, 2);
  const auto a = onehot_attention_from_flow(constant_flow(shape, {0, 0}).flows, shape);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(a(r, c), (r % 4 == c % 4) ? 1.0 : 0.0);
}

TEST(OneHotAttention, RejectsFractionalDestinations) {
  const GridShape shape(2, 1, 2);
  PairMotions flows;
  MotionField half(1, 2, 0, 1);
  half[0] = {0.5, 0};
  flows.emplace(PairKey{0, 1}, half);
  EXPECT_THROW(onehot_attention_from_flow(flows, shape), Error);
}

TEST(GenerateFlow, ConstantClipsAtBorder) {
  const auto set = constant_flow(GridShape(2, 1, 3), {1, 0});
  const auto& f01 = set.flows.at({0, 1});
  EXPECT_EQ(f01[0], (Vec2{1, 0}));
  EXPECT_EQ(f01[1], (Vec2{1, 0}));
  EXPECT_EQ(f01[2], (Vec2{0, 0}));
  EXPECT_EQ(set.clipped.at({0, 1}), (std::vector<bool>{false, false, true}));
  EXPECT_TRUE(set.any_clipped({0, 1}));
  // reverse direction moves left and clips pixel 0
  EXPECT_EQ(set.flows.at({1, 0})[0], (Vec2{0, 0}));
  EXPECT_EQ(set.flows.at({1, 0})[2], (Vec2{-1, 0}));
}

TEST(GenerateFlow, ConstantAcrossSeveralFrames) {
  const auto set = constant_flow(GridShape(3, 2, 5), {1, 0});
  EXPECT_EQ(set.flows.size(), 6u);
  EXPECT_EQ(set.flows.at({0, 2})[0], (Vec2{2, 0}));
  EXPECT_EQ(set.flows.at({0, 1})[0], (Vec2{1, 0}));
}

TEST(GenerateFlow, RotationAndZoom) {
  FlowSpec spec;
  spec.kind = FlowKind::Rotation;
  spec.shape = GridShape(2, 3, 3);
  spec.omega = std::numbers::pi / 2.0;
  const auto rot = generate_flow(spec);
  EXPECT_EQ(rot.flows.at({0, 1}).at(0, 0), (Vec2{2, 0}));
  EXPECT_EQ(rot.flows.at({0, 1}).at(1, 1), (Vec2{0, 0}));

  spec.kind = FlowKind::Zoom;
  spec.rate = 1.0;
  for (const auto& [key, field] : generate_flow(spec).flows)
    for (const auto& v : field.vectors()) EXPECT_EQ(v, (Vec2{0, 0}));
}

TEST(GenerateFlow, RandomIsSeededAndComposes) {
  FlowSpec spec;
  spec.kind = FlowKind::Random;
  spec.shape = GridShape(4, 3, 4);
  spec.seed = 99;
  const auto a = generate_flow(spec);
  const auto b = generate_flow(spec);
  EXPECT_EQ(a.flows, b.flows);
  spec.seed = 100;
  EXPECT_NE(generate_flow(spec).flows, a.flows);

  // 0 -> 2 equals 0 -> 1 followed by 1 -> 2
  const auto& f01 = a.flows.at({0, 1});
  const auto& f12 = a.flows.at({1, 2});
  const auto& f02 = a.flows.at({0, 2});
  for (std::size_t p = 0; p < 12; ++p) {
    const Vec2 mid = Vec2{double(p % 4), double(p / 4)} + f01[p];
    const auto q = static_cast<std::size_t>(mid.v) * 4 + static_cast<std::size_t>(mid.u);
    EXPECT_EQ(f02[p], f01[p] + f12[q]);
    EXPECT_LE(std::abs(f01[p].u), 1.0);
    EXPECT_LE(std::abs(f01[p].v), 1.0);
  }
}

TEST(OneHotAttention, ExtractionRoundTrip) {
  FlowSpec spec;
  spec.kind = FlowKind::Random;
  spec.shape = GridShape(3, 4, 4);
  spec.seed = 7;
  const auto flows = generate_flow(spec);
  const auto got = extract_all_pairs(onehot_attention_from_flow(flows.flows, spec.shape), spec.shape,
                                     {1, ExtractionMode::Hard, 1});
  EXPECT_EQ(got, flows.flows);
}

TEST(SoftAttention, RowsSumToOne) {
  const GridShape shape(3, 2, 3);
  const auto a = soft_attention_from_flow(constant_flow(shape, {1, 0}).flows, shape, 5.0);
  for (std::size_t r = 0; r < shape.tokens(); ++r) {
    double sum = 0;
    for (double x : a.row(r)) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_THROW(soft_attention_from_flow(constant_flow(shape, {1, 0}).flows, shape, 0.0), Error);
}

TEST(SoftAttention, SmallBetaApproachesCentroid) {
  const GridShape shape(2, 3, 4);
  const auto a = soft_attention_from_flow(constant_flow(shape, {1, 0}).flows, shape, 1e-6);
  const auto field = extract_motion(slice_pair(a, shape, 0, 1), {1, ExtractionMode::Soft, 1});
  for (std::size_t p = 0; p < 12; ++p) {
    EXPECT_NEAR(field[p].u, 1.5 - double(p % 4), 1e-3);
    EXPECT_NEAR(field[p].v, 1.0 - double(p / 4), 1e-3);
  }
}

TEST(SoftAttention, LargeBetaRecoversFlow) {
  const GridShape shape(2, 4, 5);
  FlowSpec spec;
  spec.kind = FlowKind::Random;
  spec.shape = shape;
  spec.seed = 3;
  const auto flows = generate_flow(spec);
  const auto a = soft_attention_from_flow(flows.flows, shape, 50.0);
  const auto& gt = flows.flows.at({0, 1});
  EXPECT_EQ(extract_motion(slice_pair(a, shape, 0, 1), {1, ExtractionMode::Hard, 1}), gt);
  const auto soft = extract_motion(slice_pair(a, shape, 0, 1), {3, ExtractionMode::Soft, 1});
  for (std::size_t p = 0; p < 20; ++p) {
    EXPECT_NEAR(soft[p].u, gt[p].u, 0.05);
    EXPECT_NEAR(soft[p].v, gt[p].v, 0.05);
  }
}

TEST(FeaturesWithPermutation, SeparatesMatchesFromNonMatches) {
  ForegroundMask mt(2, 3), mr(2, 3);
  for (std::size_t p : {0u, 1u, 4u}) mt.set(p, true);
  for (std::size_t p : {2u, 3u, 5u}) mr.set(p, true);
  const std::vector<std::pair<std::size_t, std::size_t>> perm = {{0, 5}, {1, 2}, {4, 3}};
  const auto fx = features_with_permutation(2, 3, 2, perm, mt, mr);  // 3 pixels > d, uses -e_k
  const Matrix cost = feature_cost(fx.tgt, fx.ref, mt, mr);
  const auto tgt_fg = mt.foreground_indices(), ref_fg = mr.foreground_indices();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const bool match = std::find(perm.begin(), perm.end(), std::pair{tgt_fg[r], ref_fg[c]}) != perm.end();
      if (match)
        EXPECT_EQ(cost(r, c), 0.0);
      else
        EXPECT_GE(cost(r, c), 1.0);
    }
  EXPECT_EQ(fx.expected.matches.size(), 3u);
  EXPECT_THROW(features_with_permutation(2, 3, 1, perm, mt, mr), Error);
  EXPECT_THROW(features_with_permutation(2, 3, 2, {{0, 5}, {1, 5}, {4, 3}}, mt, mr), Error);
}
