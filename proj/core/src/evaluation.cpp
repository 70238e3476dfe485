#include "cagan/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cagan/errors.hpp"

namespace cagan {

BatchSwapper generator_swapper(const Generator<float>& generator) {
  return [&generator](std::span<const SwapQuery> queries) {
    std::vector<ImageTensor> xs;
    std::vector<ImageTensor> olds;
    std::vector<ImageTensor> news;
    for (const auto& q : queries) {
      xs.push_back(q.x);
      olds.push_back(q.y_old);
      news.push_back(q.y_new);
    }
    const auto out = generator.forward(to_feature_map<float>(xs), to_feature_map<float>(olds),
                                       to_feature_map<float>(news));
    std::vector<SwapResult> results(queries.size());
    for (std::size_t n = 0; n < queries.size(); ++n) {
      const int b = static_cast<int>(n);
      results[n].composite = image_at(out.composite, b, RangeTag::UnitSigned);
      results[n].alpha = image_at(out.alpha, b, RangeTag::Unit);
      results[n].raw_color = image_at(out.raw_color, b, RangeTag::UnitSigned);
    }
    return results;
  };
}

SwapResult swap(const Generator<float>& generator, const ImageTensor& x, const ImageTensor& y_old,
                const ImageTensor& y_new) {
  const Resolution res = generator.spec().input_resolution;
  for (const auto* img : {&x, &y_old, &y_new}) {
    if (img->resolution() != res || img->channels != 3) {
      throw ValidationError("swap inputs must be RGB images at " + to_string(res) + ", got " +
                            to_string(img->resolution()));
    }
  }
  const SwapQuery q{normalize(x, RangeTag::UnitSigned), normalize(y_old, RangeTag::UnitSigned),
                    normalize(y_new, RangeTag::UnitSigned)};
  return generator_swapper(generator)(std::span(&q, 1)).front();
}

namespace {

void require_indexed(const SwapQuery& q, std::size_t masks) {
  if (q.human < 0 || q.new_article < 0 || static_cast<std::size_t>(q.human) >= masks ||
      static_cast<std::size_t>(q.new_article) >= masks) {
    throw ValidationError("oracle swapper needs dataset indices for every query");
  }
}

SwapResult blend(const SwapQuery& q, ImageTensor alpha, ImageTensor raw) {
  SwapResult r;
  r.composite = ImageTensor(3, q.x.height, q.x.width, RangeTag::UnitSigned);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < q.x.plane_size(); ++k) {
      const float a = alpha.data[k];
      const std::size_t idx = c * q.x.plane_size() + k;
      r.composite.data[idx] = a * raw.data[idx] + (1.0f - a) * q.x.data[idx];
    }
  }
  r.alpha = std::move(alpha);
  r.raw_color = std::move(raw);
  return r;
}

}  // namespace

BatchSwapper oracle_swapper(const ToyGroundTruth& truth) {
  return [&truth](std::span<const SwapQuery> queries) {
    std::vector<SwapResult> out;
    for (const auto& q : queries) {
      require_indexed(q, truth.masks.size());
      ImageTensor alpha = truth.masks[q.human];
      alpha.range = RangeTag::Unit;
      ImageTensor raw(3, q.x.height, q.x.width, RangeTag::UnitSigned);
      const Rgb& color = truth.pairs[q.new_article].dominant_color;
      for (int c = 0; c < 3; ++c) {
        std::fill_n(raw.data.begin() + c * raw.plane_size(), raw.plane_size(), color[c] * 2.0f - 1.0f);
      }
      out.push_back(blend(q, std::move(alpha), std::move(raw)));
    }
    return out;
  };
}

BatchSwapper passthrough_swapper() {
  return [](std::span<const SwapQuery> queries) {
    std::vector<SwapResult> out;
    for (const auto& q : queries) {
      out.push_back(blend(q, ImageTensor(1, q.x.height, q.x.width, RangeTag::Unit, 0.0f),
                          ImageTensor(3, q.x.height, q.x.width, RangeTag::UnitSigned, 0.0f)));
    }
    return out;
  };
}

GridMode parse_grid_mode(std::string_view name) {
  if (name == "fixed-human") return GridMode::FixedHuman;
  if (name == "fixed-article") return GridMode::FixedArticle;
  if (name == "triplet-rows") return GridMode::TripletRows;
  throw ValidationError("unknown grid mode '" + std::string(name) + "'");
}

GridLayout grid_layout(GridMode mode, int items, Resolution tile, bool alpha_panel) {
  if (items < 1) throw ValidationError("grid needs at least one item");
  GridLayout g;
  if (mode == GridMode::TripletRows) {
    g.rows = items;
    g.cols = alpha_panel ? 5 : 4;
  } else {
    if (alpha_panel) throw ValidationError("the alpha panel is only available in triplet-rows mode");
    g.cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(items))));
    g.rows = (items + g.cols - 1) / g.cols;
  }
  g.height = g.rows * tile.height + (g.rows + 1) * kGridBorder;
  g.width = g.cols * tile.width + (g.cols + 1) * kGridBorder;
  return g;
}

namespace {

void blit(ImageTensor& canvas, const ImageTensor& tile, int row, int col) {
  const ImageTensor unit = normalize(tile, RangeTag::Unit);
  const int top = kGridBorder + row * (tile.height + kGridBorder);
  const int left = kGridBorder + col * (tile.width + kGridBorder);
  for (int c = 0; c < 3; ++c) {
    const int src_c = unit.channels == 1 ? 0 : c;
    for (int y = 0; y < tile.height; ++y) {
      for (int x = 0; x < tile.width; ++x) canvas.at(c, top + y, left + x) = unit.at(src_c, y, x);
    }
  }
}

}  // namespace

ImageTensor grid_render(const BatchSwapper& swapper, GridMode mode, std::span<const SwapQuery> items,
                        const std::filesystem::path& out_path, bool alpha_panel) {
  if (items.empty()) throw ValidationError("grid_render needs at least one item");
  const Resolution tile = items.front().x.resolution();
  for (const auto& q : items) {
    if (q.x.resolution() != tile || q.y_old.resolution() != tile || q.y_new.resolution() != tile) {
      throw ValidationError("grid items must share one resolution");
    }
    if (mode == GridMode::FixedHuman && q.x.data != items.front().x.data) {
      throw ValidationError("fixed-human grids need the same human in every item");
    }
    if (mode == GridMode::FixedArticle && q.y_new.data != items.front().y_new.data) {
      throw ValidationError("fixed-article grids need the same article in every item");
    }
  }
  const GridLayout layout = grid_layout(mode, static_cast<int>(items.size()), tile, alpha_panel);
  const auto results = swapper(items);
  ImageTensor canvas(3, layout.height, layout.width, RangeTag::Unit, 1.0f);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const int n = static_cast<int>(k);
    if (mode == GridMode::TripletRows) {
      blit(canvas, items[k].x, n, 0);
      blit(canvas, items[k].y_old, n, 1);
      blit(canvas, items[k].y_new, n, 2);
      blit(canvas, results[k].composite, n, 3);
      if (alpha_panel) blit(canvas, results[k].alpha, n, 4);
    } else {
      blit(canvas, results[k].composite, n / layout.cols, n % layout.cols);
    }
  }
  if (!out_path.empty()) write_rgb_png(canvas, out_path);
  return canvas;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"alpha_iou", r.alpha_iou},
                     {"color_swap_error", r.color_swap_error},
                     {"cycle_error", r.cycle_error},
                     {"identity_leakage", r.identity_leakage},
                     {"n_samples", r.n_samples}};
}

EvalReport evaluate_toy(const BatchSwapper& swapper, const Dataset& dataset, const ToyGroundTruth& truth,
                        int n_samples, std::uint64_t seed, int batch_size) {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (truth.masks.size() != static_cast<std::size_t>(dataset.size()) || truth.pairs.size() != truth.masks.size()) {
    throw ValidationError("ground-truth masks missing for some pairs");
  }
  for (const auto& m : truth.masks) {
    if (m.channels != 1 || m.resolution() != dataset.resolution()) {
      throw ValidationError("ground-truth masks must be 1-channel at the dataset resolution");
    }
  }
  Rng rng(seed);
  const auto triplets = sample_triplet_indices(dataset.size(), n_samples, rng);

  double iou_sum = 0;
  double color_sum = 0;
  double cycle_sum = 0;
  double leak_sum = 0;
  for (std::size_t start = 0; start < triplets.size(); start += batch_size) {
    const std::size_t end = std::min(triplets.size(), start + batch_size);
    std::vector<SwapQuery> forward;
    for (std::size_t k = start; k < end; ++k) {
      const auto [i, j] = triplets[k];
      forward.push_back({dataset.human(i), dataset.article(i), dataset.article(j), i, i, j});
    }
    const auto swapped = swapper(forward);
    std::vector<SwapQuery> back;
    for (std::size_t k = start; k < end; ++k) {
      const auto [i, j] = triplets[k];
      back.push_back({swapped[k - start].composite, dataset.article(j), dataset.article(i), i, j, i});
    }
    const auto cycled = swapper(back);

    for (std::size_t k = start; k < end; ++k) {
      const auto [i, j] = triplets[k];
      const ImageTensor& x = dataset.human(i);
      const ImageTensor& mask = truth.masks[i];
      const SwapResult& r = swapped[k - start];
      const std::size_t plane = x.plane_size();

      std::size_t inter = 0;
      std::size_t uni = 0;
      std::size_t inside = 0;
      double inside_sum[3] = {0, 0, 0};
      double leak = 0;
      for (std::size_t p = 0; p < plane; ++p) {
        const bool in_mask = mask.data[p] > 0.5f;
        const bool predicted = r.alpha.data[p] > 0.5f;
        inter += (in_mask && predicted) ? 1 : 0;
        uni += (in_mask || predicted) ? 1 : 0;
        for (int c = 0; c < 3; ++c) {
          const float v = r.composite.data[c * plane + p];
          if (in_mask) {
            inside_sum[c] += v;
          } else {
            leak += std::abs(static_cast<double>(v) - x.data[c * plane + p]);
          }
        }
        inside += in_mask ? 1 : 0;
      }
      iou_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
      if (inside == 0) throw ValidationError("empty ground-truth mask for pair " + std::to_string(i));
      double color = 0;
      for (int c = 0; c < 3; ++c) {
        const double target = truth.pairs[j].dominant_color[c] * 2.0 - 1.0;
        color += std::abs(inside_sum[c] / static_cast<double>(inside) - target);
      }
      color_sum += color / 3.0;
      const std::size_t outside = plane - inside;
      leak_sum += outside == 0 ? 0.0 : leak / (3.0 * static_cast<double>(outside));

      const ImageTensor& x2 = cycled[k - start].composite;
      double cyc = 0;
      for (std::size_t q = 0; q < x.data.size(); ++q) cyc += std::abs(static_cast<double>(x.data[q]) - x2.data[q]);
      cycle_sum += cyc / static_cast<double>(x.data.size());
    }
  }
  const double n = static_cast<double>(triplets.size());
  return {iou_sum / n, color_sum / n, cycle_sum / n, leak_sum / n, n_samples};
}

}  // namespace cagan
