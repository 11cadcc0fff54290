#pragma once

// MAFT container: magic "MAFT", u32 version, u64 header length L, L bytes of
// JSON header, then 64-byte aligned payloads. All integers and payload values
// are little-endian; payloads are row-major.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

enum class DType : std::uint8_t { Float32, UInt8 };

inline std::size_t dtype_size(DType t) { return t == DType::Float32 ? 4 : 1; }
inline const char* dtype_name(DType t) { return t == DType::Float32 ? "float32" : "uint8"; }

struct TensorRecord {
  std::string name;
  DType dtype = DType::Float32;
  std::vector<std::uint64_t> shape;
  std::vector<std::uint8_t> payload;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

inline constexpr char kContainerMagic[4] = {'M', 'A', 'F', 'T'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kPayloadAlignment = 64;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::size_t align_up(std::size_t n) {
  return (n + kPayloadAlignment - 1) / kPayloadAlignment * kPayloadAlignment;
}

}  // namespace detail

/// Checks the per-record invariants: positive dims, matching payload length,
/// finite float32 values.
inline void validate_record(const TensorRecord& rec) {
  if (rec.name.empty()) throw Error(ErrorKind::BadHeader, "record name is empty");
  if (rec.shape.empty()) throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' has empty shape");
  for (auto d : rec.shape)
    if (d == 0) throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' has a zero dimension");
  const auto expected = rec.element_count() * dtype_size(rec.dtype);
  if (rec.payload.size() != expected)
    throw Error(ErrorKind::LengthMismatch, "record '" + rec.name + "' payload is " +
                                               std::to_string(rec.payload.size()) + " bytes, expected " +
                                               std::to_string(expected));
  if (rec.dtype == DType::Float32) {
    for (std::size_t i = 0; i < rec.payload.size(); i += 4) {
      const float x = detail::get_le<float>(rec.payload.data() + i);
      if (!std::isfinite(x))
        throw Error(ErrorKind::NonFinite, "record '" + rec.name + "' contains a non-finite value");
    }
  }
}

/// Serializes records to the container byte layout.
inline std::vector<std::uint8_t> encode_container(std::span<const TensorRecord> records) {
  std::set<std::string> names;
  for (const auto& rec : records) {
    validate_record(rec);
    if (!names.insert(rec.name).second)
      throw Error(ErrorKind::DuplicateName, "duplicate record name '" + rec.name + "'");
  }

  nlohmann::json header = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& rec : records) {
    offset = detail::align_up(offset);
    header.push_back({{"name", rec.name},
                      {"dtype", dtype_name(rec.dtype)},
                      {"shape", rec.shape},
                      {"offset", offset},
                      {"nbytes", rec.payload.size()}});
    offset += rec.payload.size();
  }
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + header_text.size() + offset);
  out.insert(out.end(), kContainerMagic, kContainerMagic + 4);
  detail::put_le<std::uint32_t>(out, kContainerVersion);
  detail::put_le<std::uint64_t>(out, header_text.size());
  out.insert(out.end(), header_text.begin(), header_text.end());
  const std::size_t base = out.size();
  for (const auto& rec : records) {
    out.resize(base + detail::align_up(out.size() - base), 0);
    out.insert(out.end(), rec.payload.begin(), rec.payload.end());
  }
  return out;
}

/// Parses container bytes; every failure is reported as a categorized Error.
inline std::vector<TensorRecord> decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kContainerMagic, 4) != 0)
      throw Error(ErrorKind::BadMagic, "file does not start with MAFT");
    throw Error(ErrorKind::Truncated, "file shorter than the 16-byte preamble");
  }
  if (std::memcmp(bytes.data(), kContainerMagic, 4) != 0)
    throw Error(ErrorKind::BadMagic, "file does not start with MAFT");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kContainerVersion)
    throw Error(ErrorKind::UnsupportedVersion, "container version " + std::to_string(version));
  const auto header_len = detail::get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw Error(ErrorKind::Truncated, "header extends past end of file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadHeader, std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_array()) throw Error(ErrorKind::BadHeader, "header is not a JSON array");

  const std::size_t base = 16 + static_cast<std::size_t>(header_len);
  const std::size_t available = bytes.size() - base;
  std::vector<TensorRecord> records;
  std::set<std::string> names;
  std::size_t expected_offset = 0;
  for (const auto& entry : header) {
    TensorRecord rec;
    std::uint64_t offset = 0;
    std::uint64_t nbytes = 0;
    try {
      if (!entry.is_object() || entry.size() != 5)
        throw Error(ErrorKind::BadHeader, "header entry must have exactly name, dtype, shape, offset, nbytes");
      rec.name = entry.at("name").get<std::string>();
      const auto dtype = entry.at("dtype").get<std::string>();
      if (dtype == "float32") rec.dtype = DType::Float32;
      else if (dtype == "uint8") rec.dtype = DType::UInt8;
      else throw Error(ErrorKind::BadHeader, "unsupported dtype '" + dtype + "'");
      rec.shape = entry.at("shape").get<std::vector<std::uint64_t>>();
      offset = entry.at("offset").get<std::uint64_t>();
      nbytes = entry.at("nbytes").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::BadHeader, std::string("malformed header entry: ") + e.what());
    }
    if (!names.insert(rec.name).second)
      throw Error(ErrorKind::DuplicateName, "duplicate record name '" + rec.name + "'");
    if (rec.shape.empty()) throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' has empty shape");
    unsigned __int128 count = 1;
    for (auto d : rec.shape) {
      if (d == 0) throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' has a zero dimension");
      count *= d;
      if (count > (static_cast<unsigned __int128>(1) << 62))
        throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' shape is too large");
    }
    if (count * dtype_size(rec.dtype) != nbytes)
      throw Error(ErrorKind::LengthMismatch, "record '" + rec.name + "' nbytes disagrees with shape");
    expected_offset = detail::align_up(expected_offset);
    if (offset != expected_offset)
      throw Error(ErrorKind::BadHeader, "record '" + rec.name + "' offset " + std::to_string(offset) +
                                            " is not the packed aligned offset " + std::to_string(expected_offset));
    if (offset > available || nbytes > available - offset)
      throw Error(ErrorKind::Truncated, "payload of '" + rec.name + "' extends past end of file");
    const auto* start = bytes.data() + base;
    rec.payload.assign(start + offset, start + offset + nbytes);
    expected_offset = offset + nbytes;
    records.push_back(std::move(rec));
  }
  if (expected_offset != available)
    throw Error(ErrorKind::LengthMismatch, "file has " + std::to_string(available - std::min(available, expected_offset)) +
                                               " unexpected trailing bytes");
  // Padding between payloads must be zero.
  std::size_t cursor = 0;
  std::size_t idx = 0;
  for (const auto& entry : header) {
    const auto offset = entry.at("offset").get<std::uint64_t>();
    for (std::size_t i = cursor; i < offset; ++i)
      if (bytes[base + i] != 0)
        throw Error(ErrorKind::BadHeader, "nonzero padding before '" + records[idx].name + "'");
    cursor = offset + records[idx].payload.size();
    ++idx;
  }
  for (const auto& rec : records) validate_record(rec);
  return records;
}

inline void write_container(const std::filesystem::path& path, std::span<const TensorRecord> records) {
  const auto bytes = encode_container(records);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot rename into '" + path.string() + "'");
  }
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for '" + path.string() + "'");
  return bytes;
}

inline std::vector<TensorRecord> read_container(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_container(bytes);
}

// ---------------------------------------------------------------------------
// Typed record helpers.

inline TensorRecord make_f32_record(std::string name, std::vector<std::uint64_t> shape,
                                    std::span<const double> values) {
  TensorRecord rec{std::move(name), DType::Float32, std::move(shape), {}};
  rec.payload.reserve(values.size() * 4);
  for (double x : values) detail::put_le<float>(rec.payload, static_cast<float>(x));
  return rec;
}

inline TensorRecord make_u8_record(std::string name, std::vector<std::uint64_t> shape,
                                   std::span<const std::uint8_t> values) {
  return TensorRecord{std::move(name), DType::UInt8, std::move(shape), {values.begin(), values.end()}};
}

inline std::vector<double> f32_values(const TensorRecord& rec) {
  if (rec.dtype != DType::Float32)
    throw Error(ErrorKind::ShapeMismatch, "record '" + rec.name + "' is not float32");
  std::vector<double> out(rec.payload.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_le<float>(rec.payload.data() + 4 * i);
  return out;
}

inline const TensorRecord* find_record(std::span<const TensorRecord> records, std::string_view name) {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

inline const TensorRecord& require_record(std::span<const TensorRecord> records, std::string_view name) {
  const auto* r = find_record(records, name);
  if (!r) throw Error(ErrorKind::MissingRecord, "required record '" + std::string(name) + "' is missing");
  return *r;
}

/// Accepts a float32 square attention matrix of side f*h*w with nonnegative
/// finite entries and no all-zero row. Row sums below 1 are allowed.
inline Matrix validate_attention(const TensorRecord& rec, const GridShape& shape) {
  if (rec.dtype != DType::Float32)
    throw Error(ErrorKind::ShapeMismatch, "attention record must be float32");
  const auto n = static_cast<std::uint64_t>(shape.tokens());
  if (rec.shape.size() != 2 || rec.shape[0] != n || rec.shape[1] != n)
    throw Error(ErrorKind::ShapeMismatch, "attention must be " + std::to_string(n) + "x" + std::to_string(n));
  if (rec.payload.size() != n * n * 4) throw Error(ErrorKind::LengthMismatch, "attention payload length");
  Matrix m(n, n, f32_values(rec));
  for (std::size_t r = 0; r < n; ++r) {
    bool positive = false;
    for (double x : m.row(r)) {
      if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "attention row " + std::to_string(r));
      if (x < 0.0) throw Error(ErrorKind::NegativeEntry, "attention row " + std::to_string(r));
      positive = positive || x > 0.0;
    }
    if (!positive) throw Error(ErrorKind::ZeroRow, "attention row " + std::to_string(r) + " is all zero");
  }
  return m;
}

}  // namespace motionadapter
