#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cagan {

enum class RangeTag : std::uint8_t {
  UnitSigned = 0,  // [-1, 1]
  Unit = 1,        // [0, 1]
};

RangeTag parse_range_tag(std::string_view name);
std::string_view to_string(RangeTag tag);
float range_min(RangeTag tag);
float range_max(RangeTag tag);

struct Resolution {
  int height = 0;
  int width = 0;

  bool operator==(const Resolution&) const = default;
  // True when both dimensions are multiples of `divisor`.
  bool divisible_by(int divisor) const {
    return divisor > 0 && height % divisor == 0 && width % divisor == 0;
  }
};

// Parses the CLI form `WIDTHxHEIGHT`.
Resolution parse_resolution(std::string_view text);
std::string to_string(Resolution r);

/// Channel-major (C, H, W) image with a declared value range.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  RangeTag range = RangeTag::UnitSigned;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int c, int h, int w, RangeTag tag, float fill = 0.0f);

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  Resolution resolution() const { return {height, width}; }

  float& at(int c, int y, int x) { return data[(c * plane_size()) + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const { return data[(c * plane_size()) + static_cast<std::size_t>(y) * width + x]; }
  std::span<const float> channel(int c) const { return {data.data() + c * plane_size(), plane_size()}; }

  bool operator==(const ImageTensor&) const = default;

  // Throws ValidationError when the shape or the value range is violated.
  void validate() const;
};

/// Affine map of `image` into the `target` range. Identity when ranges match.
ImageTensor normalize(const ImageTensor& image, RangeTag target);
/// Maps an image back to unit range; the inverse of normalize(x, UnitSigned).
ImageTensor denormalize(const ImageTensor& image);

ImageTensor resize_bilinear(const ImageTensor& image, Resolution target);

// Decodes an RGB (or grayscale, expanded) image into unit range, resized to
// `target` unless it is zero-sized.
ImageTensor read_rgb_png(const std::filesystem::path& path, Resolution target = {});
void write_rgb_png(const ImageTensor& image, const std::filesystem::path& path);

// Single channel {0, 255} PNG masks; values are binarized at 128.
ImageTensor read_mask_png(const std::filesystem::path& path);
void write_mask_png(const ImageTensor& mask, const std::filesystem::path& path);

}  // namespace cagan
