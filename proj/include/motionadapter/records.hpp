#pragma once

// Conversions between module types and the canonical container records.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/correspond.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/tensorio.hpp"

namespace motionadapter::records {

inline constexpr std::string_view kAttention = "attention";
inline constexpr std::string_view kAttentionLogits = "attention_logits";
inline constexpr std::string_view kFlowGt = "flow_gt";
inline constexpr std::string_view kMotionAligned = "motion_aligned";
inline constexpr std::string_view kMotionFinal = "motion_final";
inline constexpr std::string_view kFeaturesRef = "features_ref";
inline constexpr std::string_view kFeaturesTgt = "features_tgt";
inline constexpr std::string_view kMaskRef = "mask_ref";
inline constexpr std::string_view kMaskTgt = "mask_tgt";
inline constexpr std::string_view kMetaShape = "meta_shape";
inline constexpr std::string_view kCorrespondence = "correspondence";
inline constexpr std::string_view kCorrespondenceMethod = "correspondence_method";

inline std::string motion_pair_name(std::size_t i, std::size_t j) {
  return "motion_pair/" + std::to_string(i) + "_" + std::to_string(j);
}

namespace detail {

inline std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t v = 0;
  if (s.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses "motion_pair/<i>_<j>".
inline std::optional<PairKey> parse_motion_pair_name(std::string_view name) {
  constexpr std::string_view prefix = "motion_pair/";
  if (!name.starts_with(prefix)) return std::nullopt;
  const auto rest = name.substr(prefix.size());
  const auto sep = rest.find('_');
  if (sep == std::string_view::npos) return std::nullopt;
  const auto i = detail::parse_index(rest.substr(0, sep));
  const auto j = detail::parse_index(rest.substr(sep + 1));
  if (!i || !j) return std::nullopt;
  return PairKey{*i, *j};
}

// --- shape -----------------------------------------------------------------

inline TensorRecord shape_record(const GridShape& shape) {
  const double v[3] = {static_cast<double>(shape.frames), static_cast<double>(shape.height),
                       static_cast<double>(shape.width)};
  return make_f32_record(std::string(kMetaShape), {3}, v);
}

inline GridShape shape_from(const TensorRecord& rec) {
  const auto v = f32_values(rec);
  if (v.size() != 3) throw Error(ErrorKind::ShapeMismatch, "meta_shape must hold 3 values");
  for (double x : v)
    if (x < 1.0 || x != std::floor(x)) throw Error(ErrorKind::InvalidArgument, "meta_shape entries must be positive integers");
  return GridShape(static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2]));
}

// --- matrices ----------------------------------------------------------------

inline TensorRecord matrix_record(std::string name, const Matrix& m) {
  return make_f32_record(std::move(name), {m.rows(), m.cols()}, m.data());
}

inline Matrix matrix_from(const TensorRecord& rec) {
  if (rec.shape.size() != 2) throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not a matrix");
  return Matrix(rec.shape[0], rec.shape[1], f32_values(rec));
}

// --- motion ------------------------------------------------------------------

inline std::vector<double> flatten(const MotionField& m) {
  std::vector<double> out;
  out.reserve(m.pixels() * 2);
  for (const auto& v : m.vectors()) {
    out.push_back(v.u);
    out.push_back(v.v);
  }
  return out;
}

inline MotionField field_from_values(std::span<const double> values, std::size_t h, std::size_t w) {
  MotionField m(h, w);
  for (std::size_t p = 0; p < h * w; ++p) m[p] = {values[2 * p], values[2 * p + 1]};
  return m;
}

inline TensorRecord field_record(std::string name, const MotionField& m) {
  return make_f32_record(std::move(name), {m.height(), m.width(), 2}, flatten(m));
}

inline MotionField field_from(const TensorRecord& rec) {
  if (rec.shape.size() != 3 || rec.shape[2] != 2)
    throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not h x w x 2");
  const auto v = f32_values(rec);
  return field_from_values(v, rec.shape[0], rec.shape[1]);
}

/// Frames stacked as f x h x w x 2.
inline TensorRecord sequence_record(std::string name, const std::vector<MotionField>& frames) {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "cannot store an empty motion sequence");
  std::vector<double> values;
  for (const auto& f : frames) {
    const auto flat = flatten(f);
    values.insert(values.end(), flat.begin(), flat.end());
  }
  return make_f32_record(std::move(name), {frames.size(), frames.front().height(), frames.front().width(), 2}, values);
}

inline std::vector<MotionField> fields_from_stack(const TensorRecord& rec) {
  if (rec.shape.size() != 4 || rec.shape[3] != 2)
    throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not n x h x w x 2");
  const auto v = f32_values(rec);
  const std::size_t h = rec.shape[1], w = rec.shape[2];
  std::vector<MotionField> out;
  for (std::size_t i = 0; i < rec.shape[0]; ++i)
    out.push_back(field_from_values(std::span<const double>(v).subspan(i * h * w * 2, h * w * 2), h, w));
  return out;
}

inline TensorRecord sequence_record(std::string name, const MotionSequence& seq) {
  return sequence_record(std::move(name), seq.frames);
}

inline MotionSequence sequence_from(const TensorRecord& rec) {
  auto fields = fields_from_stack(rec);
  for (std::size_t i = 0; i < fields.size(); ++i) fields[i].set_frames(0, i);
  return MotionSequence(std::move(fields));
}

/// flow_gt: adjacent pairs i -> i+1 stacked as (f-1) x h x w x 2.
inline TensorRecord flow_gt_record(const PairMotions& flows, const GridShape& shape) {
  std::vector<MotionField> adjacent;
  for (std::size_t i = 0; i + 1 < shape.frames; ++i) adjacent.push_back(flows.at({i, i + 1}));
  return sequence_record(std::string(kFlowGt), adjacent);
}

inline PairMotions flow_gt_from(const TensorRecord& rec) {
  auto fields = fields_from_stack(rec);
  PairMotions out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    fields[i].set_frames(i, i + 1);
    out.emplace(PairKey{i, i + 1}, std::move(fields[i]));
  }
  return out;
}

// --- features and masks -------------------------------------------------------

inline TensorRecord features_record(std::string name, const FeatureGrid& g) {
  return make_f32_record(std::move(name), {g.height(), g.width(), g.depth()}, g.values());
}

inline FeatureGrid features_from(const TensorRecord& rec) {
  if (rec.shape.size() != 3) throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not h x w x d");
  return FeatureGrid(rec.shape[0], rec.shape[1], rec.shape[2], f32_values(rec));
}

inline TensorRecord mask_record(std::string name, const ForegroundMask& m) {
  return make_u8_record(std::move(name), {m.height(), m.width()}, m.values());
}

inline ForegroundMask mask_from(const TensorRecord& rec) {
  if (rec.dtype != DType::UInt8 || rec.shape.size() != 2)
    throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not an h x w uint8 mask");
  return ForegroundMask(rec.shape[0], rec.shape[1], rec.payload);
}

// --- correspondence -----------------------------------------------------------

inline std::vector<TensorRecord> correspondence_records(const CorrespondenceMap& map) {
  if (map.matches.empty()) throw Error(ErrorKind::EmptyInput, "correspondence has no matches");
  std::vector<double> rows;
  std::vector<std::uint8_t> methods;
  for (const auto& m : map.matches) {
    rows.push_back(static_cast<double>(m.tgt_index));
    rows.push_back(static_cast<double>(m.ref_index));
    rows.push_back(m.cost);
    methods.push_back(static_cast<std::uint8_t>(m.method));
  }
  return {make_f32_record(std::string(kCorrespondence), {map.matches.size(), 3}, rows),
          make_u8_record(std::string(kCorrespondenceMethod), {map.matches.size()}, methods)};
}

inline CorrespondenceMap correspondence_from(const TensorRecord& rows, const TensorRecord* methods) {
  if (rows.shape.size() != 2 || rows.shape[1] != 3)
    throw Error(ErrorKind::ShapeMismatch, "correspondence must be N x 3");
  const auto v = f32_values(rows);
  const std::size_t n = rows.shape[0];
  if (methods && (methods->dtype != DType::UInt8 || methods->shape != std::vector<std::uint64_t>{n}))
    throw Error(ErrorKind::ShapeMismatch, "correspondence_method must be N uint8 values");
  CorrespondenceMap map;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = v[3 * k], b = v[3 * k + 1];
    if (a < 0 || b < 0 || a != std::floor(a) || b != std::floor(b))
      throw Error(ErrorKind::InvalidArgument, "correspondence indices must be nonnegative integers");
    Match m{static_cast<std::size_t>(a), static_cast<std::size_t>(b), v[3 * k + 2], MatchMethod::Hungarian};
    if (methods) {
      const auto code = methods->payload[k];
      if (code > 1) throw Error(ErrorKind::InvalidArgument, "unknown correspondence method code");
      m.method = static_cast<MatchMethod>(code);
    }
    map.matches.push_back(m);
  }
  return map;
}

}  // namespace motionadapter::records
