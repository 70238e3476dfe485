#include "cagan/toy_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "cagan/errors.hpp"

namespace cagan {
namespace {

constexpr Rgb kBackground{0.86f, 0.86f, 0.84f};
constexpr Rgb kArticleBackground{0.96f, 0.96f, 0.96f};
constexpr Rgb kSkin{0.88f, 0.72f, 0.60f};
constexpr Rgb kTrousers{0.20f, 0.22f, 0.35f};

int frac(double f, int dim) { return static_cast<int>(std::lround(f * dim)); }

void fill(ImageTensor& img, const Rgb& c) {
  for (int ch = 0; ch < 3; ++ch) {
    std::fill_n(img.data.begin() + ch * img.plane_size(), img.plane_size(), c[ch]);
  }
}

void paint(ImageTensor& img, int y, int x, const Rgb& c) {
  if (y < 0 || x < 0 || y >= img.height || x >= img.width) return;
  for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = c[ch];
}

void paint_rect(ImageTensor& img, const PixelRect& r, const Rgb& c) {
  for (int y = r.top; y < r.top + r.height; ++y) {
    for (int x = r.left; x < r.left + r.width; ++x) paint(img, y, x, c);
  }
}

// Color of a style at row `row` of a region with `height` rows.
Rgb style_color(const ArticleStyle& s, int row, int height) {
  if (s.pattern == ArticlePattern::Solid) return s.primary;
  const int stripe = row * s.stripes / height;
  return stripe % 2 == 0 ? s.primary : s.secondary;
}

Rgb shifted(const Rgb& c, float shift) {
  return {std::clamp(c[0] + shift, 0.0f, 1.0f), std::clamp(c[1] + shift, 0.0f, 1.0f),
          std::clamp(c[2] + shift, 0.0f, 1.0f)};
}

PixelRect nominal_torso(Resolution r) {
  const int width = frac(0.30, r.width);
  const int height = frac(0.42, r.height);
  return {frac(0.30, r.height), (r.width - width) / 2, height, width};
}

void draw_body(ImageTensor& img) {
  const int h = img.height;
  const int w = img.width;
  const double cx = (w - 1) / 2.0;
  const double cy = 0.17 * h;
  const double radius = std::max(1.5, 0.11 * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= radius * radius) paint(img, y, x, kSkin);
    }
  }
  const PixelRect torso = nominal_torso(img.resolution());
  const int arm_w = std::max(1, frac(0.06, w));
  const int arm_top = frac(0.32, h);
  const int arm_h = frac(0.38, h);
  paint_rect(img, {arm_top, torso.left - arm_w - 1, arm_h, arm_w}, kSkin);
  paint_rect(img, {arm_top, torso.left + torso.width + 1, arm_h, arm_w}, kSkin);
  const int leg_top = torso.top + torso.height;
  const int leg_h = frac(0.96, h) - leg_top;
  const int leg_w = std::max(1, frac(0.11, w));
  const int gap = std::max(1, frac(0.02, w));
  const int mid = w / 2;
  paint_rect(img, {leg_top, mid - gap - leg_w, leg_h, leg_w}, kTrousers);
  paint_rect(img, {leg_top, mid + gap, leg_h, leg_w}, kTrousers);
}

Rgb mix(const Rgb& a, const Rgb& b, float t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

}  // namespace

std::vector<ArticleStyle> default_palette() {
  const std::vector<Rgb> solids{
      {0.85f, 0.10f, 0.10f}, {0.10f, 0.55f, 0.15f}, {0.12f, 0.25f, 0.80f}, {0.95f, 0.80f, 0.10f},
      {0.55f, 0.10f, 0.65f}, {0.05f, 0.65f, 0.70f}, {0.95f, 0.50f, 0.05f}, {0.10f, 0.10f, 0.10f},
      {0.98f, 0.98f, 0.98f}, {0.45f, 0.25f, 0.10f}, {0.90f, 0.40f, 0.65f}, {0.50f, 0.70f, 0.20f},
  };
  std::vector<ArticleStyle> palette;
  for (const auto& c : solids) palette.push_back({c, c, ArticlePattern::Solid, 1});
  palette.push_back({{0.85f, 0.10f, 0.10f}, {0.98f, 0.98f, 0.98f}, ArticlePattern::HorizontalStripes, 6});
  palette.push_back({{0.12f, 0.25f, 0.80f}, {0.95f, 0.80f, 0.10f}, ArticlePattern::HorizontalStripes, 6});
  palette.push_back({{0.10f, 0.10f, 0.10f}, {0.50f, 0.70f, 0.20f}, ArticlePattern::HorizontalStripes, 6});
  palette.push_back({mix({0.55f, 0.10f, 0.65f}, {1, 1, 1}, 0.3f), {0.05f, 0.65f, 0.70f},
                     ArticlePattern::HorizontalStripes, 6});
  return palette;
}

void ToyDatasetSpec::validate() const {
  if (count < 2) throw ValidationError("toy dataset count must be >= 2");
  if (depth < 0 || depth > 12) throw ValidationError("toy dataset depth out of range");
  const int divisor = 1 << depth;
  if (!resolution.divisible_by(divisor)) {
    throw ValidationError("resolution " + to_string(resolution) + " is not divisible by " + std::to_string(divisor));
  }
  if (resolution.height < 16 || resolution.width < 16) throw ValidationError("toy resolution must be at least 16x16");
  if (palette.empty()) throw ValidationError("toy palette is empty");
  for (const auto& s : palette) {
    if (s.pattern == ArticlePattern::HorizontalStripes && (s.stripes < 2 || s.stripes % 2 != 0)) {
      throw ValidationError("striped articles need an even stripe count >= 2");
    }
  }
  if (!(deformation >= 0.0f && deformation < 0.15f)) throw ValidationError("deformation must be in [0, 0.15)");
  if (!(brightness >= 0.0f && brightness <= 0.25f)) throw ValidationError("brightness must be in [0, 0.25]");
}

PixelRect article_rect(Resolution r) {
  const int width = frac(0.50, r.width);
  const int height = frac(0.60, r.height);
  return {(r.height - height) / 2, (r.width - width) / 2, height, width};
}

Rgb dominant_color(const ArticleStyle& style, const PixelRect& rect) {
  Rgb sum{0, 0, 0};
  for (int row = 0; row < rect.height; ++row) {
    const Rgb c = style_color(style, row, rect.height);
    for (int ch = 0; ch < 3; ++ch) sum[ch] += c[ch];
  }
  for (auto& v : sum) v /= static_cast<float>(rect.height);
  return sum;
}

ToyDataset synthesize_toy_dataset(const ToyDatasetSpec& spec) {
  spec.validate();
  const Resolution res = spec.resolution;
  Rng rng(spec.seed);
  std::uniform_int_distribution<int> pick_style(0, static_cast<int>(spec.palette.size()) - 1);
  std::uniform_real_distribution<float> pick_shift(-spec.brightness, spec.brightness);
  const int jitter_x = spec.deformation > 0 ? std::max(1, frac(spec.deformation, res.width)) : 0;
  const int jitter_y = spec.deformation > 0 ? std::max(1, frac(spec.deformation, res.height)) : 0;
  std::uniform_int_distribution<int> pick_jx(-jitter_x, jitter_x);
  std::uniform_int_distribution<int> pick_jy(-jitter_y, jitter_y);

  const PixelRect base = nominal_torso(res);
  const PixelRect art = article_rect(res);
  ToyDataset toy;
  for (int k = 0; k < spec.count; ++k) {
    ToyPairInfo info;
    char id[32];
    std::snprintf(id, sizeof(id), "pair_%05d", k);
    info.pair_id = id;
    info.style = pick_style(rng);
    info.brightness = pick_shift(rng);
    const int shift_x = pick_jx(rng);
    const int shift_y = pick_jy(rng);
    const int grow_x = pick_jx(rng) / 2;
    const int grow_y = pick_jy(rng);
    info.torso = {base.top + shift_y, base.left + shift_x - grow_x, base.height + grow_y, base.width + 2 * grow_x};
    const ArticleStyle& style = spec.palette[info.style];
    info.dominant_color = dominant_color(style, art);

    ImageTensor article(3, res.height, res.width, RangeTag::Unit);
    fill(article, kArticleBackground);
    for (int row = 0; row < art.height; ++row) {
      const Rgb c = style_color(style, row, art.height);
      paint_rect(article, {art.top + row, art.left, 1, art.width}, c);
    }

    ImageTensor human(3, res.height, res.width, RangeTag::Unit);
    fill(human, kBackground);
    draw_body(human);
    ImageTensor mask(1, res.height, res.width, RangeTag::Unit);
    for (int row = 0; row < info.torso.height; ++row) {
      const Rgb c = shifted(style_color(style, row, info.torso.height), info.brightness);
      for (int x = info.torso.left; x < info.torso.left + info.torso.width; ++x) {
        paint(human, info.torso.top + row, x, c);
        mask.at(0, info.torso.top + row, x) = 1.0f;
      }
    }

    toy.manifest.entries.push_back({info.pair_id, "humans/" + info.pair_id + ".png", "articles/" + info.pair_id + ".png"});
    toy.humans.push_back(std::move(human));
    toy.articles.push_back(std::move(article));
    toy.masks.push_back(std::move(mask));
    toy.pairs.push_back(std::move(info));
  }
  return toy;
}

DatasetManifest write_toy_dataset(ToyDataset& toy, const ToyDatasetSpec& spec, const std::filesystem::path& root) {
  toy.manifest.root = root;
  std::filesystem::create_directories(root / "humans");
  std::filesystem::create_directories(root / "articles");
  std::filesystem::create_directories(root / "masks");
  nlohmann::ordered_json meta;
  meta["resolution"] = to_string(spec.resolution);
  meta["seed"] = spec.seed;
  meta["count"] = spec.count;
  auto& pairs = meta["pairs"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < toy.pairs.size(); ++k) {
    const auto& e = toy.manifest.entries[k];
    const auto& info = toy.pairs[k];
    write_rgb_png(toy.humans[k], root / e.human);
    write_rgb_png(toy.articles[k], root / e.article);
    write_mask_png(toy.masks[k], root / "masks" / (info.pair_id + ".png"));
    pairs.push_back({{"pair_id", info.pair_id},
                     {"style", info.style},
                     {"brightness", info.brightness},
                     {"torso", {info.torso.top, info.torso.left, info.torso.height, info.torso.width}},
                     {"dominant_color", info.dominant_color}});
  }
  write_manifest(toy.manifest);
  std::ofstream out(root / kToyMetaFileName, std::ios::binary);
  if (!out) throw IoError("cannot write " + (root / kToyMetaFileName).string());
  out << meta.dump(2) << '\n';
  return toy.manifest;
}

ToyGroundTruth load_toy_ground_truth(const DatasetManifest& manifest) {
  const auto meta_path = manifest.root / kToyMetaFileName;
  std::ifstream in(meta_path);
  if (!in) throw ValidationError("no toy ground truth at " + meta_path.string() + " (not a synthesized dataset?)");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed " + meta_path.string() + ": " + e.what());
  }
  ToyGroundTruth gt;
  std::map<std::string, ToyPairInfo> by_id;
  for (const auto& p : meta.at("pairs")) {
    ToyPairInfo info;
    info.pair_id = p.at("pair_id").get<std::string>();
    info.style = p.at("style").get<int>();
    info.brightness = p.at("brightness").get<float>();
    const auto t = p.at("torso");
    info.torso = {t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<int>()};
    info.dominant_color = p.at("dominant_color").get<Rgb>();
    by_id[info.pair_id] = info;
  }
  for (const auto& e : manifest.entries) {
    auto it = by_id.find(e.pair_id);
    if (it == by_id.end()) throw ValidationError("no ground truth for pair '" + e.pair_id + "'");
    const auto mask_path = manifest.root / "masks" / (e.pair_id + ".png");
    if (!std::filesystem::exists(mask_path)) throw ValidationError("missing mask for pair '" + e.pair_id + "'");
    gt.masks.push_back(read_mask_png(mask_path));
    gt.pairs.push_back(it->second);
  }
  return gt;
}

}  // namespace cagan
