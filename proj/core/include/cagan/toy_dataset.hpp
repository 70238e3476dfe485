#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cagan/dataset.hpp"
#include "cagan/image.hpp"

namespace cagan {

using Rgb = std::array<float, 3>;  // unit range

enum class ArticlePattern : std::uint8_t { Solid, HorizontalStripes };

struct ArticleStyle {
  Rgb primary{};
  Rgb secondary{};  // used by striped articles only
  ArticlePattern pattern = ArticlePattern::Solid;
  int stripes = 6;
};

std::vector<ArticleStyle> default_palette();

struct ToyDatasetSpec {
  int count = 200;
  Resolution resolution{48, 64};
  std::uint64_t seed = 0;
  std::vector<ArticleStyle> palette = default_palette();
  // Max torso translation/resize as a fraction of the image size.
  float deformation = 0.04f;
  // Max absolute brightness shift (unit range) applied to the worn article.
  float brightness = 0.04f;
  // Resolution must be divisible by 2^depth.
  int depth = 4;

  void validate() const;
};

struct PixelRect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int y, int x) const { return y >= top && y < top + height && x >= left && x < left + width; }
};

struct ToyPairInfo {
  std::string pair_id;
  int style = 0;
  float brightness = 0.0f;
  PixelRect torso;
  Rgb dominant_color{};  // mean color of the standalone article rectangle, unit range
};

struct ToyDataset {
  DatasetManifest manifest;          // root left empty until written
  std::vector<ImageTensor> humans;   // unit range
  std::vector<ImageTensor> articles; // unit range
  std::vector<ImageTensor> masks;    // 1 channel, {0, 1}
  std::vector<ToyPairInfo> pairs;
};

inline constexpr const char* kToyMetaFileName = "toy_meta.json";

// Placement of the article rectangle on the standalone article image.
PixelRect article_rect(Resolution resolution);
// Mean color of a style rendered into `rect` on the article image.
Rgb dominant_color(const ArticleStyle& style, const PixelRect& rect);

ToyDataset synthesize_toy_dataset(const ToyDatasetSpec& spec);

// Writes humans/, articles/, masks/, the manifest and toy_meta.json under root.
DatasetManifest write_toy_dataset(ToyDataset& toy, const ToyDatasetSpec& spec, const std::filesystem::path& root);

// Ground truth read back from a written toy dataset, aligned with the manifest order.
struct ToyGroundTruth {
  std::vector<ImageTensor> masks;
  std::vector<ToyPairInfo> pairs;
};

ToyGroundTruth load_toy_ground_truth(const DatasetManifest& manifest);

}  // namespace cagan
