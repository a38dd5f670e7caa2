#pragma once

// Checkpoint layout: <dir>/manifest.json names every tensor with its shape
// and byte offset into <dir>/params.bin, a flat blob of little-endian
// IEEE-754 doubles. The manifest also records the blob length and CRC-32.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "matrix.hpp"

namespace kriggraph {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  std::vector<NamedMatrix> tensors;
  nlohmann::json metadata = nlohmann::json::object();

  const Matrix* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  }
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "params.bin";

namespace detail {

inline std::uint32_t crc32_of(const std::string& bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

inline void append_f64le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline double read_f64le(const std::string& in, std::size_t off) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IntegrityError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  std::string blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& t : ckpt.tensors) {
    entries.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"offset", blob.size()},
                       {"count", t.value.size()}});
    for (double v : t.value.data()) detail::append_f64le(blob, v);
  }
  nlohmann::json manifest = {{"format", "kriggraph-checkpoint"},
                             {"version", 1},
                             {"dtype", "f64le"},
                             {"blob", kBlobFile},
                             {"blob_bytes", blob.size()},
                             {"blob_crc32", detail::crc32_of(blob)},
                             {"tensors", entries},
                             {"metadata", ckpt.metadata}};
  {
    std::ofstream out(dir / kBlobFile, std::ios::binary | std::ios::trunc);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IntegrityError("failed writing " + (dir / kBlobFile).string());
  }
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw IntegrityError("failed writing " + (dir / kManifestFile).string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(dir / kManifestFile));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (manifest.value("dtype", "") != "f64le")
    throw IntegrityError("unsupported dtype tag '" + manifest.value("dtype", "") + "'");

  const std::string blob = detail::read_file(dir / manifest.value("blob", kBlobFile));
  const auto expected_bytes = manifest.at("blob_bytes").get<std::size_t>();
  if (blob.size() != expected_bytes)
    throw IntegrityError("blob length " + std::to_string(blob.size()) + " != manifest " +
                         std::to_string(expected_bytes));
  if (detail::crc32_of(blob) != manifest.at("blob_crc32").get<std::uint32_t>())
    throw IntegrityError("blob checksum mismatch");

  Checkpoint ckpt;
  for (const auto& e : manifest.at("tensors")) {
    const auto rows = e.at("shape").at(0).get<std::size_t>();
    const auto cols = e.at("shape").at(1).get<std::size_t>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = e.at("count").get<std::size_t>();
    if (count != rows * cols || offset + 8 * count > blob.size())
      throw IntegrityError("tensor '" + e.at("name").get<std::string>() + "' exceeds blob");
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = detail::read_f64le(blob, offset + 8 * i);
    ckpt.tensors.push_back({e.at("name").get<std::string>(), Matrix(rows, cols, std::move(data))});
  }
  ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
  return ckpt;
}

}  // namespace kriggraph
