#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "qiga/fitness.hpp"

namespace qiga {

class IdxError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Truncated, CountMismatch };

  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Image and label header dimensions.
struct IdxHeader {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

IdxHeader read_idx_image_header(const std::filesystem::path& images);

/// Loads the first max_samples (image, label) pairs; pixels are scaled by
/// 1/255. max_samples == 0 yields an empty dataset without touching the files.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t max_samples);

/// Writes a dataset whose pixels are multiples of 1/255 as a square-image
/// IDX pair.
void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace qiga
