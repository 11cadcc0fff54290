#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "motionadapter/assignment.hpp"
#include "motionadapter/detail/parallel.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

enum class MatchMethod : std::uint8_t { Hungarian = 0, NnFallback = 1 };

struct Match {
  std::size_t tgt_index = 0;  // flat pixel index in the target grid
  std::size_t ref_index = 0;  // flat pixel index in the reference grid
  double cost = 0.0;
  MatchMethod method = MatchMethod::Hungarian;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Target foreground pixel -> reference foreground pixel, sorted by tgt_index.
struct CorrespondenceMap {
  std::vector<Match> matches;
};

namespace detail {

inline double cosine_similarity(const double* a, const double* b, std::size_t d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // rounding can push |cos| slightly past 1
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline void check_feature_inputs(const FeatureGrid& tgt, const FeatureGrid& ref, const ForegroundMask& mask_tgt,
                                 const ForegroundMask& mask_ref) {
  if (tgt.depth() != ref.depth()) throw Error(ErrorKind::ShapeMismatch, "feature depths differ");
  if (mask_tgt.height() != tgt.height() || mask_tgt.width() != tgt.width())
    throw Error(ErrorKind::ShapeMismatch, "target mask does not match target features");
  if (mask_ref.height() != ref.height() || mask_ref.width() != ref.width())
    throw Error(ErrorKind::ShapeMismatch, "reference mask does not match reference features");
}

}  // namespace detail

/// cost(a, b) = 1 - cos(O_tgt[a], O_ref[b]) over foreground pixels in
/// ascending flat order. Zero-norm features count as cosine 0.
inline Matrix feature_cost(const FeatureGrid& tgt, const FeatureGrid& ref, const ForegroundMask& mask_tgt,
                           const ForegroundMask& mask_ref, unsigned threads = 1) {
  detail::check_feature_inputs(tgt, ref, mask_tgt, mask_ref);
  const auto fg_tgt = mask_tgt.foreground_indices();
  const auto fg_ref = mask_ref.foreground_indices();
  if (fg_tgt.empty()) throw Error(ErrorKind::EmptyInput, "target foreground is empty");
  if (fg_ref.empty()) throw Error(ErrorKind::EmptyInput, "reference foreground is empty");
  Matrix cost(fg_tgt.size(), fg_ref.size());
  detail::parallel_for(fg_tgt.size(), threads, [&](std::size_t a) {
    for (std::size_t b = 0; b < fg_ref.size(); ++b)
      cost(a, b) = 1.0 - detail::cosine_similarity(tgt.feature(fg_tgt[a]), ref.feature(fg_ref[b]), tgt.depth());
  });
  return cost;
}

/// Hungarian matching of target onto reference foreground. When the target
/// foreground is larger, leftover target pixels take their plain nearest
/// neighbour (ties toward the smaller reference index).
inline CorrespondenceMap build_correspondence(const FeatureGrid& tgt, const FeatureGrid& ref,
                                              const ForegroundMask& mask_tgt, const ForegroundMask& mask_ref,
                                              unsigned threads = 1) {
  const Matrix cost = feature_cost(tgt, ref, mask_tgt, mask_ref, threads);
  const auto fg_tgt = mask_tgt.foreground_indices();
  const auto fg_ref = mask_ref.foreground_indices();
  const Assignment assignment = hungarian(cost);

  CorrespondenceMap map;
  map.matches.reserve(fg_tgt.size());
  for (std::size_t a = 0; a < fg_tgt.size(); ++a) {
    const auto col = assignment.row_to_col[a];
    if (col != Assignment::kUnassigned) {
      const auto b = static_cast<std::size_t>(col);
      map.matches.push_back({fg_tgt[a], fg_ref[b], cost(a, b), MatchMethod::Hungarian});
      continue;
    }
    std::size_t best = 0;
    for (std::size_t b = 1; b < fg_ref.size(); ++b)
      if (cost(a, b) < cost(a, best)) best = b;
    map.matches.push_back({fg_tgt[a], fg_ref[best], cost(a, best), MatchMethod::NnFallback});
  }
  return map;
}

}  // namespace motionadapter
