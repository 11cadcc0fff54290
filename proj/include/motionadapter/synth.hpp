#pragma once

// Synthetic oracles: attention tensors with a known extraction result,
// parametric flow families and feature grids with a known correspondence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/correspond.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

enum class FlowKind { Constant, Rotation, Zoom, Random };

struct FlowSpec {
  FlowKind kind = FlowKind::Constant;
  GridShape shape;
  Vec2 constant{1.0, 0.0};  // Constant: displacement per frame step
  double omega = 0.0;       // Rotation: radians per frame step about the center
  double rate = 1.0;        // Zoom: scale factor per frame step about the center
  int bound = 1;            // Random: |component| <= bound per frame step
  std::uint64_t seed = 0;   // Random
  bool integer = true;      // round destinations to grid points
};

/// Pairwise flows plus, per pair, which pixels had their destination clipped
/// into the grid.
struct FlowSet {
  PairMotions flows;
  std::map<PairKey, std::vector<bool>> clipped;

  bool any_clipped(const PairKey& key) const {
    const auto& c = clipped.at(key);
    for (bool b : c)
      if (b) return true;
    return false;
  }
};

namespace detail {

inline Vec2 pixel_coord(std::size_t flat, std::size_t w) {
  return {static_cast<double>(flat % w), static_cast<double>(flat / w)};
}

// Clamps a destination into the grid, reporting whether it moved.
inline bool clip_destination(Vec2& dest, std::size_t h, std::size_t w) {
  const Vec2 before = dest;
  dest.u = std::clamp(dest.u, 0.0, static_cast<double>(w - 1));
  dest.v = std::clamp(dest.v, 0.0, static_cast<double>(h - 1));
  return !(before == dest);
}

inline Vec2 parametric_destination(const FlowSpec& spec, Vec2 p, long long steps) {
  const double cu = (static_cast<double>(spec.shape.width) - 1.0) / 2.0;
  const double cv = (static_cast<double>(spec.shape.height) - 1.0) / 2.0;
  const double k = static_cast<double>(steps);
  switch (spec.kind) {
    case FlowKind::Constant:
      return p + k * spec.constant;
    case FlowKind::Rotation: {
      const double a = k * spec.omega;
      const double x = p.u - cu, y = p.v - cv;
      return {cu + std::cos(a) * x - std::sin(a) * y, cv + std::sin(a) * x + std::cos(a) * y};
    }
    case FlowKind::Zoom: {
      const double s = std::pow(spec.rate, k);
      return {cu + s * (p.u - cu), cv + s * (p.v - cv)};
    }
    case FlowKind::Random:
      break;
  }
  return p;
}

}  // namespace detail

/// Flows for every ordered pair i != j. Constant, rotation and zoom apply the
/// (j - i)-fold map about the grid center. Random draws an integer step per
/// pixel for each adjacent pair (independently forward and backward) and
/// composes them for longer gaps.
inline FlowSet generate_flow(const FlowSpec& spec) {
  const auto& shape = spec.shape;
  const std::size_t f = shape.frames, h = shape.height, w = shape.width, hw = shape.pixels();
  FlowSet set;

  auto finish = [&](PairKey key, const std::vector<Vec2>& dest, std::vector<bool> clipped) {
    MotionField field(h, w, key.first, key.second);
    for (std::size_t p = 0; p < hw; ++p) field[p] = dest[p] - detail::pixel_coord(p, w);
    set.flows.emplace(key, std::move(field));
    set.clipped.emplace(key, std::move(clipped));
  };

  if (spec.kind != FlowKind::Random) {
    for (std::size_t i = 0; i < f; ++i) {
      for (std::size_t j = 0; j < f; ++j) {
        if (i == j) continue;
        std::vector<Vec2> dest(hw);
        std::vector<bool> clipped(hw, false);
        const auto steps = static_cast<long long>(j) - static_cast<long long>(i);
        for (std::size_t p = 0; p < hw; ++p) {
          Vec2 d = detail::parametric_destination(spec, detail::pixel_coord(p, w), steps);
          if (spec.integer) d = {std::round(d.u), std::round(d.v)};
          clipped[p] = detail::clip_destination(d, h, w);
          dest[p] = d;
        }
        finish({i, j}, dest, std::move(clipped));
      }
    }
    return set;
  }

  if (spec.bound < 0) throw Error(ErrorKind::InvalidArgument, "random flow bound must be >= 0");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> draw(-spec.bound, spec.bound);
  // step[dir][k][p]: destination flat index of pixel p for the adjacent move
  // k -> k+1 (dir 0) or k+1 -> k (dir 1).
  std::vector<std::vector<std::size_t>> step[2];
  std::vector<std::vector<bool>> step_clipped[2];
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t k = 0; k + 1 < f; ++k) {
      std::vector<std::size_t> next(hw);
      std::vector<bool> clipped(hw);
      for (std::size_t p = 0; p < hw; ++p) {
        Vec2 d = detail::pixel_coord(p, w) + Vec2{static_cast<double>(draw(rng)), static_cast<double>(draw(rng))};
        clipped[p] = detail::clip_destination(d, h, w);
        next[p] = static_cast<std::size_t>(d.v) * w + static_cast<std::size_t>(d.u);
      }
      step[dir].push_back(std::move(next));
      step_clipped[dir].push_back(std::move(clipped));
    }
  }
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      if (i == j) continue;
      std::vector<Vec2> dest(hw);
      std::vector<bool> clipped(hw, false);
      for (std::size_t p = 0; p < hw; ++p) {
        std::size_t q = p;
        if (j > i) {
          for (std::size_t k = i; k < j; ++k) {
            clipped[p] = clipped[p] || step_clipped[0][k][q];
            q = step[0][k][q];
          }
        } else {
          for (std::size_t k = i; k-- > j;) {
            clipped[p] = clipped[p] || step_clipped[1][k][q];
            q = step[1][k][q];
          }
        }
        dest[p] = detail::pixel_coord(q, w);
      }
      finish({i, j}, dest, std::move(clipped));
    }
  }
  return set;
}

/// Attention with A[(i,p),(j,q)] = 1 iff q = p + flow_{i->j}(p); diagonal
/// blocks are the identity. Pairs absent from `flows` stay zero.
inline Matrix onehot_attention_from_flow(const PairMotions& flows, const GridShape& shape) {
  const std::size_t hw = shape.pixels(), w = shape.width, h = shape.height;
  Matrix a(shape.tokens(), shape.tokens());
  for (std::size_t i = 0; i < shape.frames; ++i)
    for (std::size_t p = 0; p < hw; ++p) a(i * hw + p, i * hw + p) = 1.0;
  for (const auto& [key, field] : flows) {
    const auto [i, j] = key;
    if (i >= shape.frames || j >= shape.frames) throw Error(ErrorKind::OutOfRange, "flow pair outside frame range");
    if (field.height() != h || field.width() != w) throw Error(ErrorKind::ShapeMismatch, "flow grid differs from shape");
    for (std::size_t p = 0; p < hw; ++p) {
      const Vec2 d = detail::pixel_coord(p, w) + field[p];
      if (d.u != std::round(d.u) || d.v != std::round(d.v))
        throw Error(ErrorKind::InvalidArgument, "one-hot attention needs integer destinations");
      if (d.u < 0.0 || d.v < 0.0 || d.u > static_cast<double>(w - 1) || d.v > static_cast<double>(h - 1))
        throw Error(ErrorKind::OutOfRange, "destination outside the grid");
      const auto q = static_cast<std::size_t>(d.v) * w + static_cast<std::size_t>(d.u);
      a(i * hw + p, j * hw + q) = 1.0;
    }
  }
  return a;
}

/// Each full row is a softmax over all tokens of -beta * ||q - target||^2,
/// where the target is p + flow(p) in each destination frame (p itself in the
/// source frame). Rows sum to 1.
inline Matrix soft_attention_from_flow(const PairMotions& flows, const GridShape& shape, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  const std::size_t f = shape.frames, hw = shape.pixels(), w = shape.width;
  Matrix a(shape.tokens(), shape.tokens());
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t p = 0; p < hw; ++p) {
      auto row = a.row(i * hw + p);
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < f; ++j) {
        Vec2 target = detail::pixel_coord(p, w);
        if (j != i) {
          const auto it = flows.find({i, j});
          if (it == flows.end())
            throw Error(ErrorKind::MissingRecord, "soft attention needs every ordered pair");
          target += it->second[p];
        }
        for (std::size_t q = 0; q < hw; ++q) {
          const Vec2 d = detail::pixel_coord(q, w) - target;
          row[j * hw + q] = beta * (d.u * d.u + d.v * d.v);
          lowest = std::min(lowest, row[j * hw + q]);
        }
      }
      double sum = 0.0;
      for (double& x : row) {
        x = std::exp(-(x - lowest));
        sum += x;
      }
      for (double& x : row) x /= sum;
    }
  }
  return a;
}

struct FeatureFixture {
  FeatureGrid ref;
  FeatureGrid tgt;
  CorrespondenceMap expected;
};

/// Features such that target pixel a and reference pixel perm(a) share a
/// unit vector and every other foreground pairing has cost >= 1. Vectors are
/// +-e_k, so up to 2*d foreground pixels are supported. Background features
/// are zero.
inline FeatureFixture features_with_permutation(std::size_t height, std::size_t width, std::size_t depth,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& perm,
                                                const ForegroundMask& mask_tgt, const ForegroundMask& mask_ref) {
  if (depth < 2) throw Error(ErrorKind::InvalidArgument, "feature depth must be >= 2");
  const auto fg_tgt = mask_tgt.foreground_indices();
  const auto fg_ref = mask_ref.foreground_indices();
  if (fg_tgt.size() != fg_ref.size() || perm.size() != fg_tgt.size())
    throw Error(ErrorKind::InvalidArgument, "permutation must be a bijection between equal-size foregrounds");
  if (fg_tgt.size() > 2 * depth) throw Error(ErrorKind::InvalidArgument, "foreground too large for feature depth");

  std::vector<bool> seen_tgt(height * width, false), seen_ref(height * width, false);
  for (const auto& [a, b] : perm) {
    if (a >= height * width || b >= height * width || !mask_tgt.foreground(a) || !mask_ref.foreground(b))
      throw Error(ErrorKind::InvalidArgument, "permutation entry outside the foregrounds");
    if (seen_tgt[a] || seen_ref[b]) throw Error(ErrorKind::InvalidArgument, "permutation is not injective");
    seen_tgt[a] = seen_ref[b] = true;
  }

  FeatureFixture fx{FeatureGrid(height, width, depth), FeatureGrid(height, width, depth), {}};
  std::vector<std::pair<std::size_t, std::size_t>> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double sign = k < depth ? 1.0 : -1.0;
    fx.tgt.feature(sorted[k].first)[k % depth] = sign;
    fx.ref.feature(sorted[k].second)[k % depth] = sign;
    fx.expected.matches.push_back({sorted[k].first, sorted[k].second, 0.0, MatchMethod::Hungarian});
  }
  return fx;
}

}  // namespace motionadapter
