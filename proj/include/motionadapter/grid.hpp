#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "motionadapter/error.hpp"

namespace motionadapter {

/// Latent grid dimensions (frames, rows, columns).
struct GridShape {
  std::size_t frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  GridShape() = default;
  GridShape(std::size_t f, std::size_t h, std::size_t w) : frames(f), height(h), width(w) {
    if (f == 0 || h == 0 || w == 0)
      throw Error(ErrorKind::InvalidArgument, "grid dimensions must be positive");
    const auto tokens = static_cast<unsigned __int128>(f) * h * w;
    if (tokens > std::numeric_limits<std::uint32_t>::max())
      throw Error(ErrorKind::InvalidArgument, "token count f*h*w exceeds 32 bits");
  }

  std::size_t pixels() const noexcept { return height * width; }
  std::size_t tokens() const noexcept { return frames * height * width; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// A displacement (du, dv): du along columns (rightward), dv along rows (downward).
struct Vec2 {
  double u = 0.0;
  double v = 0.0;

  Vec2& operator+=(Vec2 o) { u += o.u; v += o.v; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.u + b.u, a.v + b.v}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.u - b.u, a.v - b.v}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.u, s * a.v}; }
  friend bool operator==(Vec2, Vec2) = default;
};

/// Per-pixel displacement grid from src_frame to dst_frame.
class MotionField {
 public:
  MotionField() = default;
  MotionField(std::size_t height, std::size_t width, std::size_t src = 0, std::size_t dst = 0)
      : height_(height), width_(width), src_(src), dst_(dst), vectors_(height * width) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return vectors_.size(); }
  std::size_t src_frame() const noexcept { return src_; }
  std::size_t dst_frame() const noexcept { return dst_; }
  void set_frames(std::size_t src, std::size_t dst) { src_ = src; dst_ = dst; }

  Vec2& at(std::size_t row, std::size_t col) { return vectors_[row * width_ + col]; }
  Vec2 at(std::size_t row, std::size_t col) const { return vectors_[row * width_ + col]; }
  Vec2& operator[](std::size_t flat) { return vectors_[flat]; }
  Vec2 operator[](std::size_t flat) const { return vectors_[flat]; }

  std::vector<Vec2>& vectors() noexcept { return vectors_; }
  const std::vector<Vec2>& vectors() const noexcept { return vectors_; }

  bool same_grid(const MotionField& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const MotionField& a, const MotionField& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.vectors_ == b.vectors_;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t src_ = 0;
  std::size_t dst_ = 0;
  std::vector<Vec2> vectors_;
};

/// Fields aligned to frame 0: entry i is the cumulative displacement 0 -> i.
struct MotionSequence {
  std::vector<MotionField> frames;

  MotionSequence() = default;
  explicit MotionSequence(std::vector<MotionField> fields) : frames(std::move(fields)) {}
  MotionSequence(std::size_t f, std::size_t h, std::size_t w) {
    frames.reserve(f);
    for (std::size_t i = 0; i < f; ++i) frames.emplace_back(h, w, 0, i);
  }

  std::size_t size() const noexcept { return frames.size(); }
  std::size_t height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
  MotionField& operator[](std::size_t i) { return frames[i]; }
  const MotionField& operator[](std::size_t i) const { return frames[i]; }

  bool same_shape(const MotionSequence& o) const noexcept {
    return size() == o.size() && height() == o.height() && width() == o.width();
  }

  friend bool operator==(const MotionSequence& a, const MotionSequence& b) {
    return a.frames == b.frames;
  }
};

/// h x w x d feature field, row-major with channels innermost.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(std::size_t height, std::size_t width, std::size_t depth)
      : height_(height), width_(width), depth_(depth), values_(height * width * depth) {
    if (depth == 0) throw Error(ErrorKind::InvalidArgument, "feature depth must be >= 1");
  }
  FeatureGrid(std::size_t height, std::size_t width, std::size_t depth, std::vector<double> values)
      : height_(height), width_(width), depth_(depth), values_(std::move(values)) {
    if (depth == 0) throw Error(ErrorKind::InvalidArgument, "feature depth must be >= 1");
    if (values_.size() != height * width * depth)
      throw Error(ErrorKind::ShapeMismatch, "feature value count does not match h*w*d");
    for (double x : values_)
      if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "feature value is not finite");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  const double* feature(std::size_t flat) const { return values_.data() + flat * depth_; }
  double* feature(std::size_t flat) { return values_.data() + flat * depth_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t depth_ = 0;
  std::vector<double> values_;
};

/// Binary h x w grid, 1 = foreground.
class ForegroundMask {
 public:
  ForegroundMask() = default;
  ForegroundMask(std::size_t height, std::size_t width, bool fill = false)
      : height_(height), width_(width), values_(height * width, fill ? 1 : 0) {}
  ForegroundMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (values_.size() != height * width)
      throw Error(ErrorKind::ShapeMismatch, "mask value count does not match h*w");
    for (auto x : values_)
      if (x > 1) throw Error(ErrorKind::InvalidArgument, "mask values must be 0 or 1");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return values_.size(); }

  bool foreground(std::size_t flat) const { return values_[flat] != 0; }
  void set(std::size_t flat, bool fg) { values_[flat] = fg ? 1 : 0; }
  const std::vector<std::uint8_t>& values() const noexcept { return values_; }

  /// Flat indices of foreground pixels, ascending.
  std::vector<std::size_t> foreground_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i]) out.push_back(i);
    return out;
  }

  ForegroundMask complement() const {
    ForegroundMask out = *this;
    for (auto& x : out.values_) x = x ? 0 : 1;
    return out;
  }

  friend bool operator==(const ForegroundMask&, const ForegroundMask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> values_;
};

namespace detail {

struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double t;      // weight of hi
  bool inside;   // query was inside [0, n-1] (derivative is nonzero)
};

inline AxisSample axis_sample(double q, std::size_t n) {
  const double max_coord = static_cast<double>(n - 1);
  const bool inside = q >= 0.0 && q <= max_coord;
  const double x = std::clamp(q, 0.0, max_coord);
  if (n == 1) return {0, 0, 0.0, false};
  auto lo = static_cast<std::size_t>(std::floor(x));
  if (lo >= n - 1) lo = n - 2;
  return {lo, lo + 1, x - static_cast<double>(lo), inside};
}

}  // namespace detail

/// Bilinear sample of `field` at (u, v) with the query clamped to the grid.
inline Vec2 sample_bilinear(const MotionField& field, double u, double v) {
  const auto su = detail::axis_sample(u, field.width());
  const auto sv = detail::axis_sample(v, field.height());
  const Vec2 a = field.at(sv.lo, su.lo);
  const Vec2 b = field.at(sv.lo, su.hi);
  const Vec2 c = field.at(sv.hi, su.lo);
  const Vec2 d = field.at(sv.hi, su.hi);
  const double w00 = (1.0 - su.t) * (1.0 - sv.t);
  const double w01 = su.t * (1.0 - sv.t);
  const double w10 = (1.0 - su.t) * sv.t;
  const double w11 = su.t * sv.t;
  return {w00 * a.u + w01 * b.u + w10 * c.u + w11 * d.u,
          w00 * a.v + w01 * b.v + w10 * c.v + w11 * d.v};
}

inline void require_same_grid(const MotionField& a, const MotionField& b, const char* what) {
  if (!a.same_grid(b)) throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": grid shapes differ");
}

inline void require_same_shape(const MotionSequence& a, const MotionSequence& b, const char* what) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": sequence shapes differ");
}

}  // namespace motionadapter
