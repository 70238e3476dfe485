#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cagan/dataset.hpp"
#include "cagan/image.hpp"
#include "cagan/networks.hpp"
#include "cagan/toy_dataset.hpp"

namespace cagan {

// One article swap request. Indices refer to the source dataset and are -1
// for images that do not come from one.
struct SwapQuery {
  ImageTensor x;
  ImageTensor y_old;
  ImageTensor y_new;
  int human = -1;
  int old_article = -1;
  int new_article = -1;
};

struct SwapResult {
  ImageTensor composite;  // unit_signed, 3 channels
  ImageTensor alpha;      // unit, 1 channel
  ImageTensor raw_color;  // unit_signed, 3 channels
  std::string x_id;
  std::string y_old_id;
  std::string y_new_id;
};

// Anything that swaps articles in batches: a trained generator, or a
// hand-built reference used to validate the metrics.
using BatchSwapper = std::function<std::vector<SwapResult>(std::span<const SwapQuery>)>;

BatchSwapper generator_swapper(const Generator<float>& generator);

/// Single deterministic forward pass.
SwapResult swap(const Generator<float>& generator, const ImageTensor& x, const ImageTensor& y_old,
                const ImageTensor& y_new);

// Reference generator painting the new article's dominant color exactly
// inside the human's ground-truth torso mask.
BatchSwapper oracle_swapper(const ToyGroundTruth& truth);
// alpha == 0 everywhere: the composite is the untouched human.
BatchSwapper passthrough_swapper();

enum class GridMode { FixedHuman, FixedArticle, TripletRows };
GridMode parse_grid_mode(std::string_view name);

inline constexpr int kGridBorder = 2;

struct GridLayout {
  int rows = 0;
  int cols = 0;
  int height = 0;
  int width = 0;
};

GridLayout grid_layout(GridMode mode, int items, Resolution tile, bool alpha_panel);

/// Renders swaps as a figure-style grid (white 2 px borders) and writes it as
/// an 8-bit RGB PNG when `out_path` is non-empty. Returns the unit-range image.
ImageTensor grid_render(const BatchSwapper& swapper, GridMode mode, std::span<const SwapQuery> items,
                        const std::filesystem::path& out_path, bool alpha_panel = false);

struct EvalReport {
  double alpha_iou = 0.0;
  double color_swap_error = 0.0;
  double cycle_error = 0.0;
  double identity_leakage = 0.0;
  int n_samples = 0;

  bool operator==(const EvalReport&) const = default;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// Scores swaps on seeded toy triplets against ground-truth torso masks:
/// IoU of (alpha > 0.5), color error of the composite inside the mask against
/// the new article's dominant color, double-swap cycle error and change
/// outside the mask.
EvalReport evaluate_toy(const BatchSwapper& swapper, const Dataset& dataset, const ToyGroundTruth& truth,
                        int n_samples, std::uint64_t seed, int batch_size = 16);

}  // namespace cagan
