#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "motionadapter/correspond.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"

namespace motionadapter {

/// Which mask selects the warped foreground when merging.
enum class MergeMaskSource {
  Target,             // foreground lives at target coordinates after warping
  ReferenceVerbatim,  // reference-frame mask, unchanged
};

struct CustomizeConfig {
  double sigma = 1.5;
  MergeMaskSource merge_mask_source = MergeMaskSource::Target;

  std::size_t kernel_radius() const { return static_cast<std::size_t>(std::ceil(3.0 * sigma)); }
};

namespace detail {

inline void require_mask_grid(const MotionSequence& m, const ForegroundMask& mask, const char* what) {
  if (m.height() != mask.height() || m.width() != mask.width())
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": mask grid differs from motion grid");
}

}  // namespace detail

/// Partitions M into (foreground part, background part) by mask_ref.
inline std::pair<MotionSequence, MotionSequence> split_motion(const MotionSequence& m, const ForegroundMask& mask_ref) {
  detail::require_mask_grid(m, mask_ref, "split_motion");
  MotionSequence fg = m;
  MotionSequence bg = m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t p = 0; p < mask_ref.pixels(); ++p) {
      if (mask_ref.foreground(p)) bg[i][p] = {};
      else fg[i][p] = {};
    }
  }
  return {std::move(fg), std::move(bg)};
}

/// output_i(a) = M_fg,i(b) for every match (a, b); everything else is zero.
inline MotionSequence warp_motion(const MotionSequence& m_fg, const CorrespondenceMap& corr,
                                  const ForegroundMask& mask_tgt) {
  detail::require_mask_grid(m_fg, mask_tgt, "warp_motion");
  const std::size_t pixels = mask_tgt.pixels();
  for (const auto& match : corr.matches) {
    if (match.tgt_index >= pixels || match.ref_index >= pixels)
      throw Error(ErrorKind::OutOfRange, "correspondence index outside the grid");
    if (!mask_tgt.foreground(match.tgt_index))
      throw Error(ErrorKind::OutOfRange, "correspondence target pixel is not in the target foreground");
  }
  MotionSequence out(m_fg.size(), m_fg.height(), m_fg.width());
  for (std::size_t i = 0; i < m_fg.size(); ++i) {
    out[i].set_frames(m_fg[i].src_frame(), m_fg[i].dst_frame());
    for (const auto& match : corr.matches) out[i][match.tgt_index] = m_fg[i][match.ref_index];
  }
  return out;
}

/// For every pixel, the flat index of the nearest background pixel
/// (Euclidean on integer coordinates, ties toward the smaller index).
inline std::vector<std::size_t> nearest_background(const ForegroundMask& mask) {
  std::vector<std::size_t> background;
  for (std::size_t p = 0; p < mask.pixels(); ++p)
    if (!mask.foreground(p)) background.push_back(p);
  if (background.empty()) throw Error(ErrorKind::EmptyInput, "mask has no background pixel to inpaint from");
  const std::size_t w = mask.width();
  std::vector<std::size_t> nearest(mask.pixels());
  for (std::size_t p = 0; p < mask.pixels(); ++p) {
    if (!mask.foreground(p)) {
      nearest[p] = p;
      continue;
    }
    const auto pr = static_cast<long long>(p / w), pc = static_cast<long long>(p % w);
    long long best_d2 = std::numeric_limits<long long>::max();
    for (std::size_t q : background) {
      const long long dr = static_cast<long long>(q / w) - pr;
      const long long dc = static_cast<long long>(q % w) - pc;
      const long long d2 = dr * dr + dc * dc;
      if (d2 < best_d2) {
        best_d2 = d2;
        nearest[p] = q;
      }
    }
  }
  return nearest;
}

/// Fills foreground pixels with their nearest background value, per frame.
inline MotionSequence inpaint_background(const MotionSequence& m_bg, const ForegroundMask& mask_ref) {
  detail::require_mask_grid(m_bg, mask_ref, "inpaint_background");
  const auto nearest = nearest_background(mask_ref);
  MotionSequence out = m_bg;
  for (std::size_t i = 0; i < m_bg.size(); ++i)
    for (std::size_t p = 0; p < nearest.size(); ++p) out[i][p] = m_bg[i][nearest[p]];
  return out;
}

/// Pixelwise select: foreground from m_fg, background from m_bg.
inline MotionSequence merge(const MotionSequence& m_fg, const MotionSequence& m_bg, const ForegroundMask& mask) {
  require_same_shape(m_fg, m_bg, "merge");
  detail::require_mask_grid(m_fg, mask, "merge");
  MotionSequence out = m_bg;
  for (std::size_t i = 0; i < m_fg.size(); ++i)
    for (std::size_t p = 0; p < mask.pixels(); ++p)
      if (mask.foreground(p)) out[i][p] = m_fg[i][p];
  return out;
}

/// Normalized 1-D Gaussian taps for offsets -radius..radius.
inline std::vector<double> gaussian_taps(double sigma, std::size_t radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double x = static_cast<double>(k) - static_cast<double>(radius);
    taps[k] = std::exp(-(x * x) / (2.0 * sigma * sigma));
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Mirror index into [0, n) without repeating the edge sample (-1 -> 1).
inline std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<long long>(2 * (n - 1));
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

/// Spatial Gaussian smoothing of each frame (separable, reflect padding).
/// sigma == 0 is the identity.
inline MotionSequence smooth(const MotionSequence& m, const CustomizeConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma))
    throw Error(ErrorKind::InvalidArgument, "sigma must be a finite value >= 0");
  const std::size_t radius = cfg.kernel_radius();
  if (cfg.sigma == 0.0 || radius == 0) return m;
  const auto taps = gaussian_taps(cfg.sigma, radius);
  const std::size_t h = m.height(), w = m.width();
  const auto r = static_cast<long long>(radius);
  MotionSequence out = m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    MotionField tmp(h, w);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        Vec2 acc;
        for (long long k = -r; k <= r; ++k)
          acc += taps[static_cast<std::size_t>(k + r)] * m[i].at(y, reflect_index(static_cast<long long>(x) + k, w));
        tmp.at(y, x) = acc;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        Vec2 acc;
        for (long long k = -r; k <= r; ++k)
          acc += taps[static_cast<std::size_t>(k + r)] * tmp.at(reflect_index(static_cast<long long>(y) + k, h), x);
        out[i].at(y, x) = acc;
      }
    }
  }
  return out;
}

/// split -> warp -> inpaint -> merge -> smooth.
inline MotionSequence customize_pipeline(const MotionSequence& m_ref, const ForegroundMask& mask_ref,
                                         const ForegroundMask& mask_tgt, const CorrespondenceMap& corr,
                                         const CustomizeConfig& cfg) {
  auto [fg, bg] = split_motion(m_ref, mask_ref);
  const auto warped = warp_motion(fg, corr, mask_tgt);
  const auto inpainted = inpaint_background(bg, mask_ref);
  const auto& merge_mask = cfg.merge_mask_source == MergeMaskSource::Target ? mask_tgt : mask_ref;
  return smooth(merge(warped, inpainted, merge_mask), cfg);
}

/// Zoom edit: output(p) = s * M(center + (p - center) / s).
inline MotionSequence scale_motion(const MotionSequence& m, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "scale must be positive");
  const double cu = (static_cast<double>(m.width()) - 1.0) / 2.0;
  const double cv = (static_cast<double>(m.height()) - 1.0) / 2.0;
  MotionSequence out = m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t y = 0; y < m.height(); ++y) {
      for (std::size_t x = 0; x < m.width(); ++x) {
        const double qu = cu + (static_cast<double>(x) - cu) / s;
        const double qv = cv + (static_cast<double>(y) - cv) / s;
        out[i].at(y, x) = s * sample_bilinear(m[i], qu, qv);
      }
    }
  }
  return out;
}

struct MotionPart {
  MotionSequence motion;
  ForegroundMask mask;
};

/// Each pixel takes the value of the part whose mask covers it, else the
/// background. Masks must be pairwise disjoint.
inline MotionSequence merge_multi(const std::vector<MotionPart>& parts, const MotionSequence& background) {
  std::vector<int> owner(background.height() * background.width(), -1);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require_same_shape(parts[k].motion, background, "merge_multi");
    detail::require_mask_grid(background, parts[k].mask, "merge_multi");
    for (std::size_t p = 0; p < owner.size(); ++p) {
      if (!parts[k].mask.foreground(p)) continue;
      if (owner[p] >= 0)
        throw Error(ErrorKind::OverlappingMasks, "parts " + std::to_string(owner[p]) + " and " + std::to_string(k) +
                                                     " overlap at pixel " + std::to_string(p));
      owner[p] = static_cast<int>(k);
    }
  }
  MotionSequence out = background;
  for (std::size_t i = 0; i < background.size(); ++i)
    for (std::size_t p = 0; p < owner.size(); ++p)
      if (owner[p] >= 0) out[i][p] = parts[static_cast<std::size_t>(owner[p])].motion[i][p];
  return out;
}

}  // namespace motionadapter
