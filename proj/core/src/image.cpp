#include "cagan/image.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cagan/errors.hpp"

namespace cagan {

RangeTag parse_range_tag(std::string_view name) {
  if (name == "unit_signed") return RangeTag::UnitSigned;
  if (name == "unit") return RangeTag::Unit;
  throw ValidationError("unknown range tag '" + std::string(name) + "'");
}

std::string_view to_string(RangeTag tag) {
  switch (tag) {
    case RangeTag::UnitSigned:
      return "unit_signed";
    case RangeTag::Unit:
      return "unit";
  }
  throw ValidationError("unknown range tag value " + std::to_string(static_cast<int>(tag)));
}

float range_min(RangeTag tag) {
  switch (tag) {
    case RangeTag::UnitSigned:
      return -1.0f;
    case RangeTag::Unit:
      return 0.0f;
  }
  throw ValidationError("unknown range tag value " + std::to_string(static_cast<int>(tag)));
}

float range_max(RangeTag tag) {
  (void)range_min(tag);
  return 1.0f;
}

Resolution parse_resolution(std::string_view text) {
  const auto x = text.find('x');
  auto parse = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size() || value < 1) {
      throw ValidationError("bad resolution '" + std::string(text) + "', expected WIDTHxHEIGHT");
    }
    return value;
  };
  if (x == std::string_view::npos) {
    throw ValidationError("bad resolution '" + std::string(text) + "', expected WIDTHxHEIGHT");
  }
  const int width = parse(text.substr(0, x));
  const int height = parse(text.substr(x + 1));
  return {height, width};
}

std::string to_string(Resolution r) { return std::to_string(r.width) + "x" + std::to_string(r.height); }

ImageTensor::ImageTensor(int c, int h, int w, RangeTag tag, float fill)
    : channels(c), height(h), width(w), range(tag),
      data(static_cast<std::size_t>(c) * h * w, fill) {}

void ImageTensor::validate() const {
  if (channels != 1 && channels != 3) {
    throw ValidationError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (height < 1 || width < 1) throw ValidationError("image dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ValidationError("image buffer does not match its shape");
  }
  const float lo = range_min(range);
  const float hi = range_max(range);
  for (float v : data) {
    if (!(v >= lo && v <= hi)) {
      throw ValidationError("image value " + std::to_string(v) + " outside " + std::string(to_string(range)));
    }
  }
}

ImageTensor normalize(const ImageTensor& image, RangeTag target) {
  (void)to_string(image.range);
  (void)to_string(target);
  ImageTensor out = image;
  out.range = target;
  if (image.range == target) return out;
  if (target == RangeTag::UnitSigned) {
    for (float& v : out.data) v = std::clamp(v * 2.0f - 1.0f, -1.0f, 1.0f);
  } else {
    for (float& v : out.data) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  }
  return out;
}

ImageTensor denormalize(const ImageTensor& image) { return normalize(image, RangeTag::Unit); }

ImageTensor resize_bilinear(const ImageTensor& image, Resolution target) {
  if (target.height < 1 || target.width < 1) throw ValidationError("resize target must be positive");
  if (image.resolution() == target) return image;
  ImageTensor out(image.channels, target.height, target.width, image.range);
  for (int c = 0; c < image.channels; ++c) {
    const cv::Mat src(image.height, image.width, CV_32F,
                      const_cast<float*>(image.data.data() + c * image.plane_size()));
    cv::Mat dst(target.height, target.width, CV_32F, out.data.data() + c * out.plane_size());
    cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
  }
  const float lo = range_min(image.range);
  const float hi = range_max(image.range);
  for (float& v : out.data) v = std::clamp(v, lo, hi);
  return out;
}

ImageTensor read_rgb_png(const std::filesystem::path& path, Resolution target) {
  if (!std::filesystem::exists(path)) throw IoError("missing image " + path.string());
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot decode image " + path.string());
  ImageTensor img(3, bgr.rows, bgr.cols, RangeTag::Unit);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(0, y, x) = row[x][2] / 255.0f;
      img.at(1, y, x) = row[x][1] / 255.0f;
      img.at(2, y, x) = row[x][0] / 255.0f;
    }
  }
  if (target.height > 0 && target.width > 0) img = resize_bilinear(img, target);
  return img;
}

namespace {

std::uint8_t to_byte(float unit_value) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit_value, 0.0f, 1.0f) * 255.0f));
}

void write_mat(const cv::Mat& mat, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat, params);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

}  // namespace

void write_rgb_png(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels != 3) throw ValidationError("write_rgb_png expects a 3-channel image");
  const ImageTensor unit = normalize(image, RangeTag::Unit);
  cv::Mat bgr(unit.height, unit.width, CV_8UC3);
  for (int y = 0; y < unit.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < unit.width; ++x) {
      row[x] = cv::Vec3b(to_byte(unit.at(2, y, x)), to_byte(unit.at(1, y, x)), to_byte(unit.at(0, y, x)));
    }
  }
  write_mat(bgr, path);
}

ImageTensor read_mask_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing mask " + path.string());
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IoError("cannot decode mask " + path.string());
  ImageTensor mask(1, gray.rows, gray.cols, RangeTag::Unit);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) mask.at(0, y, x) = row[x] >= 128 ? 1.0f : 0.0f;
  }
  return mask;
}

void write_mask_png(const ImageTensor& mask, const std::filesystem::path& path) {
  if (mask.channels != 1) throw ValidationError("write_mask_png expects a 1-channel image");
  cv::Mat gray(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(0, y, x) >= 0.5f ? 255 : 0;
  }
  write_mat(gray, path);
}

}  // namespace cagan
