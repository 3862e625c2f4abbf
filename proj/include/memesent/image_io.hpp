#pragma once

#include "memesent/encode.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace memesent {

/// 8-bit image as read from disk, H x W x C with channels innermost.
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

/// Netpbm reader: P2/P5 (grey) and P3/P6 (RGB), maxval up to 255.
RawImage parse_pnm(std::string_view bytes);
RawImage read_pnm(const std::filesystem::path& path);

/// Writes binary P6 (3 channels) or P5 (1 channel).
void write_pnm(const std::filesystem::path& path, const RawImage& image);

/// Scales pixel values into [0, 1].
template <typename Scalar>
encode::Image<Scalar> to_image(const RawImage& raw) {
  encode::Image<Scalar> img(raw.height, raw.width, raw.channels);
  for (std::size_t i = 0; i < raw.data.size(); ++i) img.data[i] = static_cast<Scalar>(raw.data[i]) / Scalar(255);
  return img;
}

}  // namespace memesent
