#include "qiga/idx.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <vector>

namespace qiga {

namespace {

using Kind = IdxError::Kind;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(Kind::Io, "cannot open IDX file " + path.string());
  return in;
}

std::uint64_t byte_size(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IdxError(Kind::Io, "cannot stat IDX file " + path.string() + ": " + ec.message());
  return size;
}

std::uint32_t read_be32(std::ifstream& in, const std::filesystem::path& path, std::uint64_t header_bytes) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IdxError(Kind::Truncated, "truncated IDX header in " + path.string() + ": expected " +
                                        std::to_string(header_bytes) + " bytes, got " +
                                        std::to_string(byte_size(path)));
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bad IDX magic 0x%08x (expected 0x%08x) in ", got, want);
    throw IdxError(Kind::BadMagic, buf + path.string());
  }
}

void expect_payload(const std::filesystem::path& path, std::uint64_t header_bytes, std::uint64_t payload_bytes) {
  const std::uint64_t expected = header_bytes + payload_bytes;
  const std::uint64_t actual = byte_size(path);
  if (actual < expected) {
    throw IdxError(Kind::Truncated, "truncated IDX payload in " + path.string() + ": expected " +
                                        std::to_string(expected) + " bytes, got " + std::to_string(actual));
  }
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

}  // namespace

IdxHeader read_idx_image_header(const std::filesystem::path& images) {
  auto in = open_input(images);
  expect_magic(read_be32(in, images, 16), kIdxImageMagic, images);
  IdxHeader h;
  h.count = read_be32(in, images, 16);
  h.rows = read_be32(in, images, 16);
  h.cols = read_be32(in, images, 16);
  return h;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t max_samples) {
  Dataset out;
  if (max_samples == 0) return out;

  const IdxHeader h = read_idx_image_header(images);
  auto lin = open_input(labels);
  expect_magic(read_be32(lin, labels, 8), kIdxLabelMagic, labels);
  const std::size_t label_count = read_be32(lin, labels, 8);
  if (label_count != h.count) {
    throw IdxError(Kind::CountMismatch, "IDX count mismatch: " + std::to_string(h.count) + " images in " +
                                            images.string() + " but " + std::to_string(label_count) +
                                            " labels in " + labels.string());
  }
  const std::size_t features = h.rows * h.cols;
  expect_payload(images, 16, std::uint64_t{h.count} * features);
  expect_payload(labels, 8, h.count);

  const std::size_t n = std::min(max_samples, h.count);
  auto iin = open_input(images);
  iin.seekg(16);
  std::vector<unsigned char> raw(n * features);
  iin.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  out.labels.resize(n);
  lin.read(reinterpret_cast<char*>(out.labels.data()), static_cast<std::streamsize>(n));
  if (!iin || !lin) throw IdxError(Kind::Io, "read failed for " + images.string() + " / " + labels.string());

  out.rows = n;
  out.features = features;
  out.pixels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
  return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(data.features))));
  if (side * side != data.features) throw std::invalid_argument("write_idx: feature count is not a square");
  std::ofstream iout(images, std::ios::binary);
  std::ofstream lout(labels, std::ios::binary);
  if (!iout || !lout) throw IdxError(Kind::Io, "cannot create " + images.string() + " / " + labels.string());
  write_be32(iout, kIdxImageMagic);
  write_be32(iout, static_cast<std::uint32_t>(data.rows));
  write_be32(iout, static_cast<std::uint32_t>(side));
  write_be32(iout, static_cast<std::uint32_t>(side));
  std::vector<char> raw(data.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<char>(static_cast<unsigned char>(std::lround(data.pixels[i] * 255.0f)));
  }
  iout.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  write_be32(lout, kIdxLabelMagic);
  write_be32(lout, static_cast<std::uint32_t>(data.rows));
  lout.write(reinterpret_cast<const char*>(data.labels.data()), static_cast<std::streamsize>(data.labels.size()));
  if (!iout || !lout) throw IdxError(Kind::Io, "write failed for " + images.string() + " / " + labels.string());
}

}  // namespace qiga
