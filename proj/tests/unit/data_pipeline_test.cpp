#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "cagan/dataset.hpp"
#include "cagan/errors.hpp"
#include "cagan/image.hpp"
#include "cagan/toy_dataset.hpp"
#include "support/chi_square.hpp"
#include "support/temp_dir.hpp"

namespace cagan {
namespace {

using testing::TempDir;

ImageTensor solid(Resolution r, float v) { return ImageTensor(3, r.height, r.width, RangeTag::Unit, v); }

void write_pairs(const TempDir& dir, const std::vector<std::string>& ids) {
  std::filesystem::create_directories(dir / "img");
  std::ofstream m(dir / kManifestFileName);
  for (const auto& id : ids) {
    write_rgb_png(solid({24, 32}, 0.25f), dir / ("img/" + id + "_h.png"));
    write_rgb_png(solid({24, 32}, 0.75f), dir / ("img/" + id + "_a.png"));
    m << id << "\timg/" << id << "_h.png\timg/" << id << "_a.png\n";
  }
}

// ---- manifest ----

TEST(Manifest, ThreeValidPairs) {
  TempDir dir;
  write_pairs(dir, {"a", "b", "c"});
  const auto manifest = load_manifest(dir.path(), {48, 64});
  EXPECT_EQ(manifest.size(), 3);
  EXPECT_EQ(manifest.entries[1].pair_id, "b");
  EXPECT_EQ(manifest.index_of("c"), 2);
}

TEST(Manifest, SkipsBlankAndCommentLines) {
  TempDir dir;
  write_pairs(dir, {"a", "b"});
  {
    std::ofstream m(dir / kManifestFileName, std::ios::app);
    m << "\n# trailing comment\n";
  }
  EXPECT_EQ(read_manifest(dir.path()).size(), 2);
}

TEST(Manifest, MissingArticleNamesThePair) {
  TempDir dir;
  write_pairs(dir, {"a", "b", "c"});
  std::filesystem::remove(dir / "img/b_a.png");
  try {
    load_manifest(dir.path(), {48, 64});
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.pair_id(), "b");
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(Manifest, DuplicatePairIdIsValidationError) {
  TempDir dir;
  write_pairs(dir, {"a", "a", "c"});
  EXPECT_THROW(read_manifest(dir.path()), ValidationError);
}

TEST(Manifest, SinglePairIsTooSmall) {
  TempDir dir;
  write_pairs(dir, {"only"});
  EXPECT_THROW(read_manifest(dir.path()), DatasetTooSmallError);
}

TEST(Manifest, MalformedLineIsValidationError) {
  TempDir dir;
  write_pairs(dir, {"a", "b"});
  {
    std::ofstream m(dir / kManifestFileName, std::ios::app);
    m << "c\tonly-one-path\n";
  }
  EXPECT_THROW(read_manifest(dir.path()), ValidationError);
}

TEST(Manifest, WriteReadRoundTrip) {
  TempDir dir;
  DatasetManifest m{dir.path(), {{"p0", "h/0.png", "a/0.png"}, {"p1", "h/1.png", "a/1.png"}}};
  write_manifest(m);
  EXPECT_EQ(read_manifest(dir.path()).entries, m.entries);
}

// ---- triplet sampling ----

TEST(TripletSampling, TwoPairsAlwaysPickTheOther) {
  Rng rng(3);
  for (const auto [i, j] : sample_triplet_indices(2, 1000, rng)) EXPECT_EQ(j, 1 - i);
}

TEST(TripletSampling, NeverEqualAndUniformOverOthers) {
  constexpr int n = 10;
  constexpr int draws = 10000;
  Rng rng(20170425);
  const auto t = sample_triplet_indices(n, draws, rng);
  std::vector<std::vector<int>> table(n, std::vector<int>(n, 0));
  std::vector<long> per_j(n, 0);
  std::vector<long> per_i(n, 0);
  for (const auto [i, j] : t) {
    ASSERT_NE(i, j);
    ++table[i][j];
    ++per_i[i];
    ++per_j[j];
  }
  // Conditioned on i, every j != i within 5 sigma of 1/(n-1).
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (n - 1);
    const double sigma = std::sqrt(per_i[i] * p * (1 - p));
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      EXPECT_LT(std::abs(table[i][j] - per_i[i] * p), 5 * sigma) << i << "," << j;
    }
  }
  EXPECT_GT(testing::chi_square_uniform(per_j).p_value, 0.001);
  EXPECT_GT(testing::chi_square_uniform(per_i).p_value, 0.001);
}

TEST(TripletSampling, SameSeedSameSequence) {
  Rng a(9);
  Rng b(9);
  EXPECT_EQ(sample_triplet_indices(7, 500, a), sample_triplet_indices(7, 500, b));
}

TEST(TripletSampling, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(sample_triplet_indices(1, 4, rng), DatasetTooSmallError);
  EXPECT_THROW(sample_triplet_indices(5, 0, rng), ValidationError);
}

TEST(TripletSampling, BatchesAreDeterministicAndNormalized) {
  ToyDatasetSpec spec;
  spec.count = 6;
  spec.seed = 4;
  auto toy = synthesize_toy_dataset(spec);
  TempDir dir;
  write_toy_dataset(toy, spec, dir.path());
  const Dataset dataset = Dataset::load(dir.path(), spec.resolution);
  Rng a(5);
  Rng b(5);
  const auto ba = sample_triplets(dataset, 8, a);
  const auto bb = sample_triplets(dataset, 8, b);
  EXPECT_EQ(ba.indices, bb.indices);
  EXPECT_EQ(ba.x, bb.x);
  EXPECT_EQ(ba.y_j, bb.y_j);
  EXPECT_NO_THROW(ba.validate());
  for (int k = 0; k < ba.size(); ++k) {
    EXPECT_NE(ba.indices[k].i, ba.indices[k].j);
    EXPECT_EQ(ba.x[k].range, RangeTag::UnitSigned);
    EXPECT_EQ(ba.x[k], dataset.human(ba.indices[k].i));
    EXPECT_EQ(ba.y_j[k], dataset.article(ba.indices[k].j));
  }
}

TEST(TripletSampling, ArticlesAreResizedToTheHumanResolution) {
  TempDir dir;
  write_pairs(dir, {"a", "b"});
  write_rgb_png(solid({12, 20}, 0.5f), dir / "img/a_a.png");
  const Dataset dataset = Dataset::load(dir.path(), {48, 64});
  EXPECT_EQ(dataset.article(0).resolution(), (Resolution{48, 64}));
  EXPECT_NEAR(dataset.article(0).at(1, 20, 30), 0.0f, 2.0f / 255.0f);
}

// ---- toy dataset ----

ToyDataset small_toy(std::uint64_t seed, int count = 4) {
  ToyDatasetSpec spec;
  spec.count = count;
  spec.seed = seed;
  return synthesize_toy_dataset(spec);
}

TEST(ToyDataset, SameSeedIsByteIdentical) {
  ToyDatasetSpec spec;
  spec.count = 4;
  spec.seed = 7;
  auto a = synthesize_toy_dataset(spec);
  auto b = synthesize_toy_dataset(spec);
  EXPECT_EQ(a.humans, b.humans);
  EXPECT_EQ(a.articles, b.articles);
  EXPECT_EQ(a.masks, b.masks);

  TempDir da;
  TempDir db;
  write_toy_dataset(a, spec, da.path());
  write_toy_dataset(b, spec, db.path());
  for (const char* f : {"humans/pair_00000.png", "articles/pair_00003.png", "masks/pair_00002.png", "manifest.tsv"}) {
    std::ifstream fa(da / f, std::ios::binary);
    std::ifstream fb(db / f, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    ASSERT_FALSE(sa.empty()) << f;
    EXPECT_EQ(sa, sb) << f;
  }
}

TEST(ToyDataset, DifferentSeedsDiffer) { EXPECT_NE(small_toy(1).humans, small_toy(2).humans); }

// Property over many pairs: masks binary, nonempty, 4-connected and clear of the border.
TEST(ToyDataset, MasksAreConnectedInteriorRegions) {
  const auto toy = small_toy(11, 40);
  for (const auto& mask : toy.masks) {
    const int h = mask.height;
    const int w = mask.width;
    int total = 0;
    int sy = -1;
    int sx = -1;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = mask.at(0, y, x);
        ASSERT_TRUE(v == 0.0f || v == 1.0f);
        if (v == 1.0f) {
          ++total;
          sy = y;
          sx = x;
          EXPECT_TRUE(y > 0 && x > 0 && y < h - 1 && x < w - 1);
        }
      }
    }
    ASSERT_GT(total, 0);
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    std::queue<std::pair<int, int>> q;
    q.emplace(sy, sx);
    seen[sy * w + sx] = 1;
    int reached = 0;
    while (!q.empty()) {
      const auto [y, x] = q.front();
      q.pop();
      ++reached;
      const int dy[] = {1, -1, 0, 0};
      const int dx[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k];
        const int nx = x + dx[k];
        if (ny < 0 || nx < 0 || ny >= h || nx >= w || seen[ny * w + nx] || mask.at(0, ny, nx) != 1.0f) continue;
        seen[ny * w + nx] = 1;
        q.emplace(ny, nx);
      }
    }
    EXPECT_EQ(reached, total);
  }
}

// Independent recomputation of the expected torso color from the palette:
// stripes split the torso rows evenly, then the brightness shift is added.
Rgb expected_torso_color(const ArticleStyle& s, int rows, float brightness) {
  double acc[3] = {0, 0, 0};
  for (int r = 0; r < rows; ++r) {
    const bool primary = s.pattern == ArticlePattern::Solid || (r * s.stripes / rows) % 2 == 0;
    const Rgb& c = primary ? s.primary : s.secondary;
    for (int k = 0; k < 3; ++k) acc[k] += std::clamp(c[k] + brightness, 0.0f, 1.0f);
  }
  return {float(acc[0] / rows), float(acc[1] / rows), float(acc[2] / rows)};
}

TEST(ToyDataset, TorsoMeanMatchesPaletteWithinL1) {
  const auto toy = small_toy(5, 60);
  const auto palette = default_palette();
  for (std::size_t k = 0; k < toy.pairs.size(); ++k) {
    const auto& info = toy.pairs[k];
    const auto& mask = toy.masks[k];
    double mean[3] = {0, 0, 0};
    int n = 0;
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (mask.at(0, y, x) != 1.0f) continue;
        ++n;
        for (int c = 0; c < 3; ++c) mean[c] += toy.humans[k].at(c, y, x);
      }
    }
    const Rgb want = expected_torso_color(palette[info.style], info.torso.height, info.brightness);
    double l1 = 0;
    for (int c = 0; c < 3; ++c) l1 += std::abs(mean[c] / n - want[c]);
    EXPECT_LT(l1, 0.05) << info.pair_id;
  }
}

TEST(ToyDataset, ArticleImageMeanIsTheDominantColor) {
  const auto toy = small_toy(6, 32);
  const PixelRect rect = article_rect({48, 64});
  for (std::size_t k = 0; k < toy.pairs.size(); ++k) {
    double mean[3] = {0, 0, 0};
    for (int y = rect.top; y < rect.top + rect.height; ++y) {
      for (int x = rect.left; x < rect.left + rect.width; ++x) {
        for (int c = 0; c < 3; ++c) mean[c] += toy.articles[k].at(c, y, x);
      }
    }
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(mean[c] / (rect.height * rect.width), toy.pairs[k].dominant_color[c], 1e-5);
    }
  }
}

TEST(ToyDataset, OutputsRespectTheirRanges) {
  const auto toy = small_toy(8, 12);
  for (std::size_t k = 0; k < toy.humans.size(); ++k) {
    EXPECT_NO_THROW(toy.humans[k].validate());
    EXPECT_NO_THROW(toy.articles[k].validate());
    EXPECT_NO_THROW(toy.masks[k].validate());
  }
}

TEST(ToyDataset, RejectsBadSpecs) {
  ToyDatasetSpec spec;
  spec.resolution = {50, 64};
  EXPECT_THROW(synthesize_toy_dataset(spec), ValidationError);
  spec.resolution = {48, 64};
  spec.count = 1;
  EXPECT_THROW(synthesize_toy_dataset(spec), ValidationError);
}

TEST(ToyDataset, GroundTruthRoundTripsThroughDisk) {
  ToyDatasetSpec spec;
  spec.count = 5;
  spec.seed = 12;
  auto toy = synthesize_toy_dataset(spec);
  TempDir dir;
  write_toy_dataset(toy, spec, dir.path());
  const auto truth = load_toy_ground_truth(read_manifest(dir.path()));
  ASSERT_EQ(truth.masks.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(truth.masks[k].data, toy.masks[k].data);
    EXPECT_EQ(truth.pairs[k].torso.top, toy.pairs[k].torso.top);
    EXPECT_EQ(truth.pairs[k].style, toy.pairs[k].style);
    for (int c = 0; c < 3; ++c) EXPECT_FLOAT_EQ(truth.pairs[k].dominant_color[c], toy.pairs[k].dominant_color[c]);
  }
  std::filesystem::remove(dir / "masks/pair_00001.png");
  EXPECT_THROW(load_toy_ground_truth(read_manifest(dir.path())), ValidationError);
}

// ---- normalization ----

TEST(Normalize, Endpoints) {
  ImageTensor img(1, 1, 2, RangeTag::Unit);
  img.data = {0.0f, 1.0f};
  const auto s = normalize(img, RangeTag::UnitSigned);
  EXPECT_EQ(s.range, RangeTag::UnitSigned);
  EXPECT_FLOAT_EQ(s.data[0], -1.0f);
  EXPECT_FLOAT_EQ(s.data[1], 1.0f);
}

TEST(Normalize, RoundTripWithinOneMicro) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageTensor img(3, 48, 64, RangeTag::Unit);
  for (auto& v : img.data) v = u(rng);
  const auto back = denormalize(normalize(img, RangeTag::UnitSigned));
  float worst = 0;
  for (std::size_t k = 0; k < img.size(); ++k) worst = std::max(worst, std::abs(back.data[k] - img.data[k]));
  EXPECT_LT(worst, 1e-6f);
  EXPECT_EQ(normalize(img, RangeTag::Unit), img);
}

TEST(Normalize, UnknownRangeTagRejected) {
  EXPECT_EQ(parse_range_tag("unit_signed"), RangeTag::UnitSigned);
  EXPECT_EQ(parse_range_tag("unit"), RangeTag::Unit);
  EXPECT_THROW(parse_range_tag("bytes"), ValidationError);
}

TEST(Normalize, ValidateCatchesOutOfRangeValues) {
  ImageTensor img(1, 2, 2, RangeTag::Unit, 0.5f);
  EXPECT_NO_THROW(img.validate());
  img.data[3] = 1.5f;
  EXPECT_THROW(img.validate(), ValidationError);
  EXPECT_THROW(ImageTensor(2, 2, 2, RangeTag::Unit).validate(), ValidationError);
}

TEST(Resolution, ParsesWidthByHeight) {
  EXPECT_EQ(parse_resolution("64x48"), (Resolution{48, 64}));
  EXPECT_EQ(parse_resolution("256x192"), (Resolution{192, 256}));
  EXPECT_EQ(to_string(Resolution{96, 128}), "128x96");
  for (const char* bad : {"64", "x48", "64x", "0x48", "64x-2", "64x48x3", "sixty"}) {
    EXPECT_THROW(parse_resolution(bad), ValidationError) << bad;
  }
}

}  // namespace
}  // namespace cagan
