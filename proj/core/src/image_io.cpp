// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

namespace histcolor {

Tensor<float> read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    fail(ErrorCode::kIngestion, "cannot read image " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kIngestion, "cannot decode image " + path.string() + ": " + image.message);
  }
  const std::int64_t h = image.height, w = image.width, plane = h * w;
  Tensor<float> out({3, h, w});
  for (std::int64_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c)
      out[c * plane + p] = static_cast<float>(buffer[static_cast<std::size_t>(p * 3 + c)]) / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor<float>& img) {
  require(img.rank() == 3 && (img.dim(0) == 3 || img.dim(0) == 1), ErrorCode::kContract,
          "write_png expects [3, H, W] or [1, H, W]");
  const std::int64_t channels = img.dim(0), h = img.dim(1), w = img.dim(2), plane = h * w;
  std::vector<png_byte> buffer(static_cast<std::size_t>(plane * channels));
  for (std::int64_t p = 0; p < plane; ++p)
    for (std::int64_t c = 0; c < channels; ++c)
      buffer[static_cast<std::size_t>(p * channels + c)] = quantize_u8(img[c * plane + p]);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    fail(ErrorCode::kIo, "cannot write image " + path.string() + ": " + image.message);
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIngestion,
          "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace histcolor
