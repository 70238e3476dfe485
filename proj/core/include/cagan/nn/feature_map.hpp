#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cagan::nn {

/// Batched activation stored channel-major: (C, N, H, W). One GEMM per layer
/// produces this layout directly and channel concatenation is an append.
template <typename T>
struct FeatureMap {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int n, int h, int w, T fill = T(0))
      : channels(c), batch(n), height(h), width(w), data(static_cast<std::size_t>(c) * n * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t channel_stride() const { return plane() * batch; }
  std::size_t size() const { return data.size(); }

  T* channel(int c) { return data.data() + c * channel_stride(); }
  const T* channel(int c) const { return data.data() + c * channel_stride(); }
  T* plane_ptr(int c, int n) { return channel(c) + n * plane(); }
  const T* plane_ptr(int c, int n) const { return channel(c) + n * plane(); }

  T& at(int c, int n, int y, int x) { return plane_ptr(c, n)[static_cast<std::size_t>(y) * width + x]; }
  T at(int c, int n, int y, int x) const { return plane_ptr(c, n)[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
  }
  bool operator==(const FeatureMap&) const = default;
};

template <typename T>
FeatureMap<T> zeros_like(const FeatureMap<T>& x) {
  return FeatureMap<T>(x.channels, x.batch, x.height, x.width);
}

template <typename To, typename From>
FeatureMap<To> cast(const FeatureMap<From>& x) {
  FeatureMap<To> out(x.channels, x.batch, x.height, x.width);
  for (std::size_t k = 0; k < x.data.size(); ++k) out.data[k] = static_cast<To>(x.data[k]);
  return out;
}

}  // namespace cagan::nn
