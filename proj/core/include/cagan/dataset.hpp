#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cagan/image.hpp"
#include "cagan/random.hpp"

namespace cagan {

inline constexpr const char* kManifestFileName = "manifest.tsv";

struct ManifestEntry {
  std::string pair_id;
  std::filesystem::path human;    // relative to the dataset root
  std::filesystem::path article;  // relative to the dataset root

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  // Unique pair ids and at least two pairs.
  void validate() const;
  int index_of(const std::string& pair_id) const;
};

// Parses `root/manifest_name` (`pair_id<TAB>human<TAB>article` per line)
// without touching the images.
DatasetManifest read_manifest(const std::filesystem::path& root,
                              const std::string& manifest_name = kManifestFileName);

// read_manifest plus a decode-and-resize check of every listed image.
DatasetManifest load_manifest(const std::filesystem::path& root, Resolution resolution,
                              const std::string& manifest_name = kManifestFileName);

void write_manifest(const DatasetManifest& manifest, const std::string& manifest_name = kManifestFileName);

/// Manifest plus every image decoded once, resized and in unit_signed range.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root, Resolution resolution,
                      const std::string& manifest_name = kManifestFileName);
  Dataset(DatasetManifest manifest, std::vector<ImageTensor> humans, std::vector<ImageTensor> articles);

  const DatasetManifest& manifest() const { return manifest_; }
  int size() const { return manifest_.size(); }
  Resolution resolution() const { return humans_.front().resolution(); }
  const ImageTensor& human(int i) const { return humans_.at(i); }
  const ImageTensor& article(int i) const { return articles_.at(i); }

 private:
  DatasetManifest manifest_;
  std::vector<ImageTensor> humans_;
  std::vector<ImageTensor> articles_;
};

struct TripletIndex {
  int i = 0;  // the human and the article it wears
  int j = 0;  // the article to paint, never equal to i

  bool operator==(const TripletIndex&) const = default;
};

struct TripletBatch {
  std::vector<ImageTensor> x;
  std::vector<ImageTensor> y_i;
  std::vector<ImageTensor> y_j;
  std::vector<TripletIndex> indices;

  int size() const { return static_cast<int>(indices.size()); }
  void validate() const;
};

// i uniform over [0, n), j uniform over [0, n) \ {i}.
std::vector<TripletIndex> sample_triplet_indices(int n, int batch_size, Rng& rng);

TripletBatch make_batch(const Dataset& dataset, std::span<const TripletIndex> indices);
TripletBatch sample_triplets(const Dataset& dataset, int batch_size, Rng& rng);

}  // namespace cagan
