#include "ctxnet/geometry.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ctxnet;

TEST(Iou, IdenticalIsOne) { EXPECT_DOUBLE_EQ(iou({5, 5, 4, 6}, {5, 5, 4, 6}), 1.0); }

TEST(Iou, DisjointIsZero) { EXPECT_EQ(iou({0, 0, 2, 2}, {10, 10, 2, 2}), 0.0); }

TEST(Iou, UnitOverlapOfTwoByTwo) { EXPECT_NEAR(iou({1, 1, 2, 2}, {2, 2, 2, 2}), 1.0 / 7.0, 1e-15); }

TEST(Iou, TouchingEdgesIsZero) { EXPECT_EQ(iou({1, 1, 2, 2}, {3, 1, 2, 2}), 0.0); }

TEST(Anchors, CountForTwoLevels) {
  const AnchorConfig cfg{{{8, {12.0}}, {16, {24.0}}}, {1.0, 0.5, 2.0}};
  const AnchorGrid g = generate_anchors(64, 64, cfg);
  EXPECT_EQ(g.anchors.size(), 8u * 8 * 3 + 4 * 4 * 3);
  EXPECT_EQ(g.level_offset[1], 8u * 8 * 3);
}

TEST(Anchors, SingleCellIsCentered) {
  const AnchorGrid g = generate_anchors(32, 32, AnchorConfig{{{32, {10.0}}}, {1.0}});
  ASSERT_EQ(g.anchors.size(), 1u);
  EXPECT_EQ(g.anchors[0].box, (Box{16, 16, 10, 10}));
}

TEST(Anchors, DoublingRatiosDoublesCount) {
  const auto a = generate_anchors(64, 64, AnchorConfig{{{8, {12.0}}}, {1.0, 2.0}});
  const auto b = generate_anchors(64, 64, AnchorConfig{{{8, {12.0}}}, {1.0, 2.0, 0.5, 3.0}});
  EXPECT_EQ(b.anchors.size(), 2 * a.anchors.size());
}

TEST(Anchors, OrderAndRatioConvention) {
  const auto g = generate_anchors(16, 16, AnchorConfig{{{8, {8.0}}}, {1.0, 4.0}});
  ASSERT_EQ(g.anchors.size(), 8u);
  // row-major cells, ratio fastest
  EXPECT_EQ(g.anchors[2].cell_x, 1);
  EXPECT_EQ(g.anchors[4].cell_y, 1);
  EXPECT_EQ(g.anchors[1].ratio_index, 1);
  EXPECT_DOUBLE_EQ(g.anchors[1].box.h / g.anchors[1].box.w, 4.0);
  EXPECT_DOUBLE_EQ(g.anchors[1].box.area(), 64.0);
}

TEST(Anchors, CentersInsideImage) {
  const auto g = generate_anchors(64, 48, AnchorConfig{{{8, {12.0, 30.0}}, {16, {24.0, 50.0}}}, {1.0, 0.5, 2.0}});
  for (const auto& a : g.anchors) {
    EXPECT_GT(a.box.cx, 0);
    EXPECT_LT(a.box.cx, 64);
    EXPECT_GT(a.box.cy, 0);
    EXPECT_LT(a.box.cy, 48);
  }
}

TEST(Anchors, EmptyConfigRejected) { EXPECT_THROW(generate_anchors(64, 64, AnchorConfig{{}, {1.0}}), std::invalid_argument); }

TEST(Anchors, NonDividingStrideRejected) {
  EXPECT_THROW(generate_anchors(60, 64, AnchorConfig{{{8, {12.0}}}, {1.0}}), std::invalid_argument);
}

TEST(BoxDelta, IdentityIsZero) {
  const Box b{10, 12, 6, 8};
  EXPECT_EQ(encode_box_delta(b, b), (BoxDelta{0, 0, 0, 0}));
}

TEST(BoxDelta, HorizontalShift) {
  const BoxDelta d = encode_box_delta({10, 10, 10, 10}, {15, 10, 10, 10});
  EXPECT_DOUBLE_EQ(d.dx, 0.5);
  EXPECT_EQ(d.dy, 0);
  EXPECT_EQ(d.dw, 0);
  EXPECT_EQ(d.dh, 0);
}

TEST(BoxDelta, NonPositiveSizeRejected) {
  EXPECT_THROW(encode_box_delta({0, 0, 0, 1}, {0, 0, 1, 1}), std::invalid_argument);
  EXPECT_THROW(encode_box_delta({0, 0, 1, 1}, {0, 0, 1, -1}), std::invalid_argument);
}

TEST(BoxDelta, DecodeClampsScale) {
  const Box b = decode_box_delta({0, 0, 1, 1}, {0, 0, 1000, -1000});
  EXPECT_TRUE(std::isfinite(b.w));
  EXPECT_DOUBLE_EQ(b.w, std::exp(kMaxLogScale));
  EXPECT_DOUBLE_EQ(b.h, std::exp(-kMaxLogScale));
}

TEST(Match, IdenticalPositiveDisjointNegative) {
  const std::vector<Box> anchors{{5, 5, 4, 4}, {40, 40, 4, 4}};
  const auto m = match_anchors(anchors, {{5, 5, 4, 4}}, 0.5, 0.3);
  EXPECT_EQ(m[0].kind, MatchKind::kPositive);
  EXPECT_EQ(m[0].gt_index, 0);
  EXPECT_EQ(m[1].kind, MatchKind::kNegative);
}

TEST(Match, BetweenThresholdsIgnored) {
  // IoU 0.4 with the gt; the exact anchor takes the forced match.
  const Box gt{0, 0, 10, 10};
  const std::vector<Box> anchors{gt, Box::from_extent(-5, -5, 5, -1)};
  const double v = iou(anchors[1], gt);
  ASSERT_GT(v, 0.3);
  ASSERT_LT(v, 0.5);
  EXPECT_EQ(match_anchors(anchors, {gt}, 0.5, 0.3)[1].kind, MatchKind::kIgnore);
}

TEST(Match, BestAnchorForcedPositive) {
  const std::vector<Box> anchors{{0, 0, 10, 10}, {30, 30, 10, 10}};
  const auto m = match_anchors(anchors, {{2, 0, 4, 4}}, 0.5, 0.3);
  EXPECT_EQ(m[0].kind, MatchKind::kPositive);
  EXPECT_EQ(m[1].kind, MatchKind::kNegative);
}

TEST(Match, NoGroundTruthAllNegative) {
  for (const auto& t : match_anchors({{1, 1, 2, 2}}, {}, 0.5, 0.3)) EXPECT_EQ(t.kind, MatchKind::kNegative);
}

TEST(Nms, SingleBoxKept) { EXPECT_EQ(nms({{1, 1, 2, 2}}, {0.3}, 0.5, 10), (std::vector<std::size_t>{0})); }

TEST(Nms, IdenticalBoxesKeepHigherScore) {
  EXPECT_EQ(nms({{5, 5, 4, 4}, {5, 5, 4, 4}}, {0.8, 0.9}, 0.5, 10), (std::vector<std::size_t>{1}));
}

TEST(Nms, DisjointBoxesBothKept) {
  EXPECT_EQ(nms({{5, 5, 4, 4}, {50, 50, 4, 4}}, {0.8, 0.9}, 0.5, 10), (std::vector<std::size_t>{1, 0}));
}

TEST(Nms, TiesPreferLowerIndexAndTopKCaps) {
  const std::vector<Box> boxes{{5, 5, 4, 4}, {20, 5, 4, 4}, {40, 5, 4, 4}};
  EXPECT_EQ(nms(boxes, {0.5, 0.5, 0.5}, 0.5, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Expand, NoClipping) { EXPECT_EQ(expand_patch({10, 10, 4, 4}, 2, 32, 32), (Box{10, 10, 8, 8})); }

TEST(Expand, FactorOneIsIdentity) { EXPECT_EQ(expand_patch({7, 9, 3, 5}, 1, 32, 32), (Box{7, 9, 3, 5})); }

TEST(Expand, ClipsAtBorder) { EXPECT_EQ(expand_patch({2, 2, 4, 4}, 2, 32, 32), (Box{3, 3, 6, 6})); }

TEST(Expand, FactorBelowOneRejected) { EXPECT_THROW(expand_patch({2, 2, 4, 4}, 0.9, 32, 32), std::invalid_argument); }

TEST(Expand, InteriorPatchStrictlyContained) {
  const Box b{16, 16, 6, 4};
  const Box e = expand_patch(b, 2, 32, 32);
  EXPECT_LT(e.x0(), b.x0());
  EXPECT_GT(e.x1(), b.x1());
  EXPECT_LT(e.y0(), b.y0());
  EXPECT_GT(e.y1(), b.y1());
}

TEST(ClipBox, OutsideIsEmpty) { EXPECT_FALSE(clip_box({-10, -10, 4, 4}, 32, 32).has_value()); }

TEST(GeometryProperties, IouSymmetricAndBounded) {
  const auto s = oracle::iou_symmetry_and_bounds(2000, 11);
  EXPECT_TRUE(s.ok()) << s.first_failure;
}

TEST(GeometryProperties, EncodeDecodeRoundTrip) {
  const auto s = oracle::encode_decode_roundtrip(2000, 12);
  EXPECT_TRUE(s.ok()) << s.first_failure << " worst " << s.worst;
}

TEST(GeometryProperties, ExpansionContainsAndIsMonotone) {
  const auto s = oracle::expansion_containment_and_monotonicity(2000, 13);
  EXPECT_TRUE(s.ok()) << s.first_failure;
}

TEST(GeometryProperties, NmsKeepsPairwiseIouBelowThreshold) {
  const auto s = oracle::nms_pairwise_bound(2000, 14);
  EXPECT_TRUE(s.ok()) << s.first_failure;
}
