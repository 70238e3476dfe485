#include "cagan/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cagan/errors.hpp"

namespace cagan {

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.pair_id.empty()) throw ValidationError("empty pair_id in manifest");
    if (!seen.insert(e.pair_id).second) throw ValidationError("duplicate pair_id '" + e.pair_id + "'");
  }
  if (entries.size() < 2) {
    throw DatasetTooSmallError("dataset has " + std::to_string(entries.size()) +
                               " pairs; triplet sampling needs at least 2");
  }
}

int DatasetManifest::index_of(const std::string& pair_id) const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].pair_id == pair_id) return static_cast<int>(k);
  }
  throw ValidationError("unknown pair_id '" + pair_id + "'");
}

DatasetManifest read_manifest(const std::filesystem::path& root, const std::string& manifest_name) {
  if (!std::filesystem::is_directory(root)) throw ValidationError("dataset root " + root.string() + " is not a directory");
  const auto path = root / manifest_name;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());

  DatasetManifest manifest;
  manifest.root = root;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    manifest.entries.push_back({fields[0], fields[1], fields[2]});
  }
  manifest.validate();
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& root, Resolution resolution,
                              const std::string& manifest_name) {
  auto manifest = read_manifest(root, manifest_name);
  for (const auto& e : manifest.entries) {
    for (const auto& rel : {e.human, e.article}) {
      try {
        (void)read_rgb_png(root / rel, resolution);
      } catch (const Error& err) {
        throw IngestionError(e.pair_id, err.what());
      }
    }
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& manifest_name) {
  manifest.validate();
  std::filesystem::create_directories(manifest.root);
  const auto path = manifest.root / manifest_name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& e : manifest.entries) {
    out << e.pair_id << '\t' << e.human.generic_string() << '\t' << e.article.generic_string() << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& root, Resolution resolution, const std::string& manifest_name) {
  auto manifest = read_manifest(root, manifest_name);
  std::vector<ImageTensor> humans;
  std::vector<ImageTensor> articles;
  humans.reserve(manifest.entries.size());
  articles.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    try {
      humans.push_back(normalize(read_rgb_png(root / e.human, resolution), RangeTag::UnitSigned));
      articles.push_back(normalize(read_rgb_png(root / e.article, resolution), RangeTag::UnitSigned));
    } catch (const Error& err) {
      throw IngestionError(e.pair_id, err.what());
    }
  }
  return Dataset(std::move(manifest), std::move(humans), std::move(articles));
}

Dataset::Dataset(DatasetManifest manifest, std::vector<ImageTensor> humans, std::vector<ImageTensor> articles)
    : manifest_(std::move(manifest)), humans_(std::move(humans)), articles_(std::move(articles)) {
  manifest_.validate();
  if (humans_.size() != manifest_.entries.size() || articles_.size() != manifest_.entries.size()) {
    throw ValidationError("dataset images do not match the manifest");
  }
  const auto res = humans_.front().resolution();
  for (std::size_t k = 0; k < humans_.size(); ++k) {
    if (humans_[k].resolution() != res || articles_[k].resolution() != res) {
      throw ValidationError("dataset images must share one resolution");
    }
  }
}

void TripletBatch::validate() const {
  const auto n = indices.size();
  if (n == 0) throw ValidationError("empty triplet batch");
  if (x.size() != n || y_i.size() != n || y_j.size() != n) throw ValidationError("triplet batch arrays disagree in size");
  const auto res = x.front().resolution();
  for (std::size_t k = 0; k < n; ++k) {
    if (indices[k].i == indices[k].j) throw ValidationError("triplet with i == j");
    if (x[k].resolution() != res || y_i[k].resolution() != res || y_j[k].resolution() != res) {
      throw ValidationError("triplet batch images must share one resolution");
    }
  }
}

std::vector<TripletIndex> sample_triplet_indices(int n, int batch_size, Rng& rng) {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (n < 2) throw DatasetTooSmallError("triplet sampling needs at least 2 pairs, got " + std::to_string(n));
  std::uniform_int_distribution<int> pick_i(0, n - 1);
  std::uniform_int_distribution<int> pick_other(0, n - 2);
  std::vector<TripletIndex> out(batch_size);
  for (auto& t : out) {
    t.i = pick_i(rng);
    const int r = pick_other(rng);
    t.j = r < t.i ? r : r + 1;
  }
  return out;
}

TripletBatch make_batch(const Dataset& dataset, std::span<const TripletIndex> indices) {
  TripletBatch batch;
  for (const auto& t : indices) {
    if (t.i < 0 || t.j < 0 || t.i >= dataset.size() || t.j >= dataset.size()) {
      throw ValidationError("triplet index out of range");
    }
    batch.x.push_back(dataset.human(t.i));
    batch.y_i.push_back(dataset.article(t.i));
    batch.y_j.push_back(dataset.article(t.j));
    batch.indices.push_back(t);
  }
  batch.validate();
  return batch;
}

TripletBatch sample_triplets(const Dataset& dataset, int batch_size, Rng& rng) {
  const auto indices = sample_triplet_indices(dataset.size(), batch_size, rng);
  return make_batch(dataset, indices);
}

}  // namespace cagan
