#pragma once

#include <cstddef>
#include <string>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"

namespace motionadapter {

/// How the sum over composition paths into frame i is normalized.
enum class ChainMode {
  MeanOverPaths,     // 1/i, the mean over the i available paths
  VerbatimOneOverF,  // 1/f, as printed in the reference algorithm
};

/// Composes an aligned 0->j displacement with a j->i step:
/// result(p) = base(p) + step(p + base(p)), bilinear with clamped queries.
inline MotionField splice(const MotionField& base, const MotionField& step) {
  require_same_grid(base, step, "splice");
  MotionField out(base.height(), base.width(), base.src_frame(), step.dst_frame());
  for (std::size_t r = 0; r < base.height(); ++r) {
    for (std::size_t c = 0; c < base.width(); ++c) {
      const Vec2 b = base.at(r, c);
      const Vec2 s = sample_bilinear(step, static_cast<double>(c) + b.u, static_cast<double>(r) + b.v);
      out.at(r, c) = b + s;
    }
  }
  return out;
}

inline double chain_scale(ChainMode mode, std::size_t i, std::size_t frames) {
  return mode == ChainMode::MeanOverPaths ? 1.0 / static_cast<double>(i) : 1.0 / static_cast<double>(frames);
}

/// Aligns pairwise motions to frame 0. Needs every (j, i) with j < i.
inline MotionSequence align_to_first(const PairMotions& pairs, const GridShape& shape,
                                     ChainMode mode = ChainMode::MeanOverPaths) {
  MotionSequence seq(shape.frames, shape.height, shape.width);
  for (std::size_t i = 1; i < shape.frames; ++i) {
    MotionField acc(shape.height, shape.width, 0, i);
    for (std::size_t j = 0; j < i; ++j) {
      const auto it = pairs.find({j, i});
      if (it == pairs.end())
        throw Error(ErrorKind::MissingRecord, "missing pair motion " + std::to_string(j) + "->" + std::to_string(i));
      if (it->second.height() != shape.height || it->second.width() != shape.width)
        throw Error(ErrorKind::ShapeMismatch, "pair motion grid differs from shape");
      const auto spliced = splice(seq[j], it->second);
      for (std::size_t p = 0; p < acc.pixels(); ++p) acc[p] += spliced[p];
    }
    const double scale = chain_scale(mode, i, shape.frames);
    for (auto& v : acc.vectors()) v = scale * v;
    seq[i] = std::move(acc);
  }
  return seq;
}

}  // namespace motionadapter
