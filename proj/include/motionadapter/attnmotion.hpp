#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "motionadapter/detail/parallel.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

enum class ExtractionMode { Hard, Soft };

struct ExtractionConfig {
  std::size_t top_k = 3;
  ExtractionMode mode = ExtractionMode::Hard;
  unsigned threads = 1;
};

/// Cross-frame block of the full attention: row = source pixel in src_frame,
/// column = pixel in dst_frame.
struct PairAttention {
  std::size_t src_frame = 0;
  std::size_t dst_frame = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix weights;
};

using PairKey = std::pair<std::size_t, std::size_t>;
using PairMotions = std::map<PairKey, MotionField>;

inline PairAttention slice_pair(const Matrix& attention, const GridShape& shape, std::size_t n, std::size_t m) {
  if (n >= shape.frames || m >= shape.frames)
    throw Error(ErrorKind::OutOfRange, "frame pair (" + std::to_string(n) + "," + std::to_string(m) +
                                           ") outside " + std::to_string(shape.frames) + " frames");
  if (attention.rows() != shape.tokens() || attention.cols() != shape.tokens())
    throw Error(ErrorKind::ShapeMismatch, "attention side does not equal f*h*w");
  const std::size_t hw = shape.pixels();
  PairAttention pair{n, m, shape.height, shape.width, Matrix(hw, hw)};
  for (std::size_t r = 0; r < hw; ++r) {
    const auto src = attention.row(n * hw + r).subspan(m * hw, hw);
    auto dst = pair.weights.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    if (std::none_of(dst.begin(), dst.end(), [](double x) { return x > 0.0; }))
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(r) + " of block (" + std::to_string(n) + "," +
                                          std::to_string(m) + ") is all zero");
  }
  return pair;
}

namespace detail {

/// Indices of the k largest entries; ties go to the smaller index.
inline std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    return row[a] > row[b] || (row[a] == row[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

}  // namespace detail

/// Motion of every source pixel of `pair`. Hard mode averages the coordinates
/// of the top-K columns; soft mode takes the attention-weighted mean over the
/// whole row (ascending column order).
inline MotionField extract_motion(const PairAttention& pair, const ExtractionConfig& cfg) {
  const std::size_t w = pair.width;
  const std::size_t hw = pair.height * pair.width;
  if (pair.weights.rows() != hw || pair.weights.cols() != hw)
    throw Error(ErrorKind::ShapeMismatch, "pair attention is not (h*w)x(h*w)");
  if (cfg.mode == ExtractionMode::Hard && (cfg.top_k < 1 || cfg.top_k > hw))
    throw Error(ErrorKind::InvalidArgument, "top_k must be in [1, h*w]");

  MotionField field(pair.height, pair.width, pair.src_frame, pair.dst_frame);
  detail::parallel_for(hw, cfg.threads, [&](std::size_t i) {
    const auto row = pair.weights.row(i);
    double du = 0.0;
    double dv = 0.0;
    if (cfg.mode == ExtractionMode::Hard) {
      for (std::size_t j : detail::top_k_indices(row, cfg.top_k)) {
        du += static_cast<double>(j % w);
        dv += static_cast<double>(j / w);
      }
      du /= static_cast<double>(cfg.top_k);
      dv /= static_cast<double>(cfg.top_k);
    } else {
      double mass = 0.0;
      for (std::size_t j = 0; j < hw; ++j) {
        mass += row[j];
        du += row[j] * static_cast<double>(j % w);
        dv += row[j] * static_cast<double>(j / w);
      }
      if (!(mass > 0.0)) throw Error(ErrorKind::ZeroRow, "row " + std::to_string(i) + " has no mass");
      du /= mass;
      dv /= mass;
    }
    field[i] = {du - static_cast<double>(i % w), dv - static_cast<double>(i / w)};
  });
  return field;
}

/// Motion fields for every ordered pair (i, j), i != j, keyed in ascending order.
inline PairMotions extract_all_pairs(const Matrix& attention, const GridShape& shape, const ExtractionConfig& cfg) {
  PairMotions out;
  for (std::size_t i = 0; i < shape.frames; ++i)
    for (std::size_t j = 0; j < shape.frames; ++j)
      if (i != j) out.emplace(PairKey{i, j}, extract_motion(slice_pair(attention, shape, i, j), cfg));
  return out;
}

/// Mean over pixels of the squared Euclidean norm of the vector difference.
inline double mse_vs_flow(const MotionField& extracted, const MotionField& gt) {
  require_same_grid(extracted, gt, "mse_vs_flow");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    const Vec2 d = extracted[i] - gt[i];
    sum += d.u * d.u + d.v * d.v;
  }
  return sum / static_cast<double>(gt.pixels());
}

// ---------------------------------------------------------------------------
// Block/timestep selection sweep.

struct SweepSample {
  int timestep = 0;
  int block = 0;
  Matrix attention;
};

struct SweepCell {
  int timestep = 0;
  int block = 0;
  double mse = 0.0;
  std::size_t count = 0;  // number of (sample, pair) terms averaged
};

struct SweepResult {
  std::vector<SweepCell> cells;  // ascending (t, b)
  int best_timestep = 0;
  int best_block = 0;
};

/// Mean extraction error per (timestep, block) cell against the ground-truth
/// flows in `gt`; only the pairs present in `gt` contribute.
inline SweepResult sweep_selection(const std::vector<SweepSample>& samples, const PairMotions& gt,
                                   const GridShape& shape, const ExtractionConfig& cfg) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "sweep needs at least one sample");
  if (gt.empty()) throw Error(ErrorKind::EmptyInput, "sweep needs at least one ground-truth pair");
  std::map<std::pair<int, int>, std::pair<double, std::size_t>> acc;
  for (const auto& s : samples) {
    auto& [sum, count] = acc[{s.timestep, s.block}];
    for (const auto& [key, flow] : gt) {
      const auto field = extract_motion(slice_pair(s.attention, shape, key.first, key.second), cfg);
      sum += mse_vs_flow(field, flow);
      ++count;
    }
  }
  SweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [tb, sc] : acc) {
    const double mse = sc.first / static_cast<double>(sc.second);
    result.cells.push_back({tb.first, tb.second, mse, sc.second});
    if (mse < best) {
      best = mse;
      result.best_timestep = tb.first;
      result.best_block = tb.second;
    }
  }
  return result;
}

/// CSV `t,b,mse` followed by `# argmin t=<t> b=<b>`.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "t,b,mse\n";
  const auto old_precision = os.precision(17);
  for (const auto& c : r.cells) os << c.timestep << ',' << c.block << ',' << c.mse << '\n';
  os.precision(old_precision);
  os << "# argmin t=" << r.best_timestep << " b=" << r.best_block << '\n';
}

}  // namespace motionadapter
