#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cagan/errors.hpp"
#include "cagan/nn/feature_map.hpp"
#include "cagan/random.hpp"

namespace cagan::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Relation between an image grid and the grid of kernel windows placed on it.
struct ConvGeometry {
  int image_h = 0;
  int image_w = 0;
  int grid_h = 0;
  int grid_w = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
};

inline int conv_out_size(int in, int kernel, int stride, int pad) { return (in + 2 * pad - kernel) / stride + 1; }

// Unfolds windows of a (C, N, H, W) image into a (C*k*k, N*grid_h*grid_w) matrix.
template <typename T>
void im2col(const T* image, int channels, int batch, const ConvGeometry& g, T* col) {
  const std::size_t grid = static_cast<std::size_t>(g.grid_h) * g.grid_w;
  const std::size_t cols = grid * batch;
  const std::size_t image_plane = static_cast<std::size_t>(g.image_h) * g.image_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ky) * g.kernel + kx) * cols;
        for (int n = 0; n < batch; ++n) {
          const T* src = image + (static_cast<std::size_t>(c) * batch + n) * image_plane;
          T* dst = row + n * grid;
          for (int oy = 0; oy < g.grid_h; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            T* out = dst + static_cast<std::size_t>(oy) * g.grid_w;
            if (iy < 0 || iy >= g.image_h) {
              std::fill_n(out, g.grid_w, T(0));
              continue;
            }
            const T* in = src + static_cast<std::size_t>(iy) * g.image_w;
            for (int ox = 0; ox < g.grid_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              out[ox] = (ix >= 0 && ix < g.image_w) ? in[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds columns back into the image.
template <typename T>
void col2im(const T* col, int channels, int batch, const ConvGeometry& g, T* image) {
  const std::size_t grid = static_cast<std::size_t>(g.grid_h) * g.grid_w;
  const std::size_t cols = grid * batch;
  const std::size_t image_plane = static_cast<std::size_t>(g.image_h) * g.image_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ky) * g.kernel + kx) * cols;
        for (int n = 0; n < batch; ++n) {
          T* dst = image + (static_cast<std::size_t>(c) * batch + n) * image_plane;
          const T* src = row + n * grid;
          for (int oy = 0; oy < g.grid_h; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.image_h) continue;
            T* out = dst + static_cast<std::size_t>(iy) * g.image_w;
            const T* in = src + static_cast<std::size_t>(oy) * g.grid_w;
            for (int ox = 0; ox < g.grid_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < g.image_w) out[ix] += in[ox];
            }
          }
        }
      }
    }
  }
}

/// Learnable tensor plus its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, T(0)), grad(size, T(0)) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
  void init_normal(Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : value) v = static_cast<T>(dist(rng));
  }
};

/// Strided convolution, weights laid out (out, in, k, k).
template <typename T>
class Conv2d {
 public:
  struct Cache {
    std::vector<T> col;
    int in_h = 0;
    int in_w = 0;
  };

  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
      : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(pad),
        weight(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
        bias(name + ".bias", out_channels) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int out_size(int in) const { return conv_out_size(in, kernel_, stride_, pad_); }

  FeatureMap<T> forward(const FeatureMap<T>& x, Cache* cache) const {
    if (x.channels != in_) {
      throw ValidationError("conv expects " + std::to_string(in_) + " channels, got " + std::to_string(x.channels));
    }
    const ConvGeometry g = geometry(x.height, x.width);
    const int rows = in_ * kernel_ * kernel_;
    const int cols = x.batch * g.grid_h * g.grid_w;
    std::vector<T> col(static_cast<std::size_t>(rows) * cols);
    im2col(x.data.data(), in_, x.batch, g, col.data());
    FeatureMap<T> y(out_, x.batch, g.grid_h, g.grid_w);
    MatrixMap<T> ym(y.data.data(), out_, cols);
    ym.noalias() = ConstMatrixMap<T>(weight.value.data(), out_, rows) * ConstMatrixMap<T>(col.data(), rows, cols);
    for (int o = 0; o < out_; ++o) ym.row(o).array() += bias.value[o];
    if (cache) {
      cache->col = std::move(col);
      cache->in_h = x.height;
      cache->in_w = x.width;
    }
    return y;
  }

  // Accumulates parameter gradients; fills `dx` when non-null.
  void backward(const Cache& cache, const FeatureMap<T>& dy, FeatureMap<T>* dx) {
    const ConvGeometry g = geometry(cache.in_h, cache.in_w);
    const int rows = in_ * kernel_ * kernel_;
    const int cols = dy.batch * g.grid_h * g.grid_w;
    ConstMatrixMap<T> dym(dy.data.data(), out_, cols);
    ConstMatrixMap<T> colm(cache.col.data(), rows, cols);
    MatrixMap<T>(weight.grad.data(), out_, rows).noalias() += dym * colm.transpose();
    for (int o = 0; o < out_; ++o) {
      const T* p = dy.channel(o);
      T s = 0;
      for (std::size_t k = 0; k < dy.channel_stride(); ++k) s += p[k];
      bias.grad[o] += s;
    }
    if (dx) {
      RowMatrix<T> dcol = ConstMatrixMap<T>(weight.value.data(), out_, rows).transpose() * dym;
      *dx = FeatureMap<T>(in_, dy.batch, cache.in_h, cache.in_w);
      col2im(dcol.data(), in_, dy.batch, g, dx->data.data());
    }
  }

 private:
  ConvGeometry geometry(int h, int w) const {
    return {h, w, out_size(h), out_size(w), kernel_, stride_, pad_};
  }

  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;

 public:
  Parameter<T> weight;
  Parameter<T> bias;
};

/// Fractionally strided (transposed) convolution, weights laid out (in, out, k, k).
template <typename T>
class ConvTranspose2d {
 public:
  struct Cache {
    FeatureMap<T> input;
  };

  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
      : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(pad),
        weight(name + ".weight", static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel),
        bias(name + ".bias", out_channels) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int out_size(int in) const { return (in - 1) * stride_ - 2 * pad_ + kernel_; }

  FeatureMap<T> forward(const FeatureMap<T>& x, Cache* cache) const {
    if (x.channels != in_) {
      throw ValidationError("deconv expects " + std::to_string(in_) + " channels, got " + std::to_string(x.channels));
    }
    const ConvGeometry g = geometry(x.height, x.width);
    const int rows = out_ * kernel_ * kernel_;
    const int cols = x.batch * x.height * x.width;
    RowMatrix<T> col = ConstMatrixMap<T>(weight.value.data(), in_, rows).transpose() *
                       ConstMatrixMap<T>(x.data.data(), in_, cols);
    FeatureMap<T> y(out_, x.batch, g.image_h, g.image_w);
    col2im(col.data(), out_, x.batch, g, y.data.data());
    for (int o = 0; o < out_; ++o) {
      T* p = y.channel(o);
      for (std::size_t k = 0; k < y.channel_stride(); ++k) p[k] += bias.value[o];
    }
    if (cache) cache->input = x;
    return y;
  }

  void backward(const Cache& cache, const FeatureMap<T>& dy, FeatureMap<T>* dx) {
    const FeatureMap<T>& x = cache.input;
    const ConvGeometry g = geometry(x.height, x.width);
    const int rows = out_ * kernel_ * kernel_;
    const int cols = x.batch * x.height * x.width;
    std::vector<T> dcol(static_cast<std::size_t>(rows) * cols);
    im2col(dy.data.data(), out_, dy.batch, g, dcol.data());
    ConstMatrixMap<T> dcolm(dcol.data(), rows, cols);
    MatrixMap<T>(weight.grad.data(), in_, rows).noalias() +=
        ConstMatrixMap<T>(x.data.data(), in_, cols) * dcolm.transpose();
    for (int o = 0; o < out_; ++o) {
      const T* p = dy.channel(o);
      T s = 0;
      for (std::size_t k = 0; k < dy.channel_stride(); ++k) s += p[k];
      bias.grad[o] += s;
    }
    if (dx) {
      *dx = FeatureMap<T>(in_, x.batch, x.height, x.width);
      MatrixMap<T>(dx->data.data(), in_, cols).noalias() = ConstMatrixMap<T>(weight.value.data(), in_, rows) * dcolm;
    }
  }

 private:
  ConvGeometry geometry(int h, int w) const {
    return {out_size(h), out_size(w), h, w, kernel_, stride_, pad_};
  }

  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;

 public:
  Parameter<T> weight;
  Parameter<T> bias;
};

/// Per-sample, per-channel normalization without affine parameters.
template <typename T>
struct InstanceNorm {
  struct Cache {
    FeatureMap<T> normalized;
    std::vector<T> inv_std;
  };

  static constexpr double kEpsilon = 1e-5;

  static FeatureMap<T> forward(const FeatureMap<T>& x, Cache* cache) {
    FeatureMap<T> y = zeros_like(x);
    const std::size_t planes = static_cast<std::size_t>(x.channels) * x.batch;
    const std::size_t n = x.plane();
    std::vector<T> inv_std(planes);
    for (std::size_t p = 0; p < planes; ++p) {
      const T* in = x.data.data() + p * n;
      T* out = y.data.data() + p * n;
      double mean = 0;
      for (std::size_t k = 0; k < n; ++k) mean += in[k];
      mean /= static_cast<double>(n);
      double var = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = in[k] - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double s = 1.0 / std::sqrt(var + kEpsilon);
      inv_std[p] = static_cast<T>(s);
      for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<T>((in[k] - mean) * s);
    }
    if (cache) {
      cache->normalized = y;
      cache->inv_std = std::move(inv_std);
    }
    return y;
  }

  static FeatureMap<T> backward(const Cache& cache, const FeatureMap<T>& dy) {
    const auto& xhat = cache.normalized;
    FeatureMap<T> dx = zeros_like(dy);
    const std::size_t planes = static_cast<std::size_t>(dy.channels) * dy.batch;
    const std::size_t n = dy.plane();
    for (std::size_t p = 0; p < planes; ++p) {
      const T* g = dy.data.data() + p * n;
      const T* xh = xhat.data.data() + p * n;
      T* out = dx.data.data() + p * n;
      double mean_g = 0;
      double mean_gx = 0;
      for (std::size_t k = 0; k < n; ++k) {
        mean_g += g[k];
        mean_gx += static_cast<double>(g[k]) * xh[k];
      }
      mean_g /= static_cast<double>(n);
      mean_gx /= static_cast<double>(n);
      const double s = cache.inv_std[p];
      for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<T>(s * (g[k] - mean_g - xh[k] * mean_gx));
    }
    return dx;
  }
};

template <typename T>
void relu_inplace(FeatureMap<T>& x) {
  for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

// dy masked by the post-activation output.
template <typename T>
void relu_backward_inplace(const FeatureMap<T>& out, FeatureMap<T>& dy) {
  for (std::size_t k = 0; k < dy.data.size(); ++k) {
    if (!(out.data[k] > T(0))) dy.data[k] = T(0);
  }
}

template <typename T>
T sigmoid(T v) {
  return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
}

// Mean over non-overlapping factor x factor blocks.
template <typename T>
FeatureMap<T> box_downsample(const FeatureMap<T>& x, int factor) {
  if (factor == 1) return x;
  if (factor < 1 || x.height % factor != 0 || x.width % factor != 0) {
    throw ValidationError("cannot downsample " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                          " by " + std::to_string(factor));
  }
  FeatureMap<T> y(x.channels, x.batch, x.height / factor, x.width / factor);
  const T scale = T(1) / static_cast<T>(factor * factor);
  for (int c = 0; c < x.channels; ++c) {
    for (int n = 0; n < x.batch; ++n) {
      const T* in = x.plane_ptr(c, n);
      T* out = y.plane_ptr(c, n);
      for (int iy = 0; iy < x.height; ++iy) {
        T* orow = out + static_cast<std::size_t>(iy / factor) * y.width;
        const T* irow = in + static_cast<std::size_t>(iy) * x.width;
        for (int ix = 0; ix < x.width; ++ix) orow[ix / factor] += irow[ix];
      }
      for (std::size_t k = 0; k < y.plane(); ++k) out[k] *= scale;
    }
  }
  return y;
}

// Adds the adjoint of box_downsample(., factor) applied to `dy` into `dx`.
template <typename T>
void box_downsample_backward(const FeatureMap<T>& dy, int factor, FeatureMap<T>& dx) {
  const T scale = T(1) / static_cast<T>(factor * factor);
  for (int c = 0; c < dx.channels; ++c) {
    for (int n = 0; n < dx.batch; ++n) {
      const T* in = dy.plane_ptr(c, n);
      T* out = dx.plane_ptr(c, n);
      for (int iy = 0; iy < dx.height; ++iy) {
        const T* irow = in + static_cast<std::size_t>(iy / factor) * dy.width;
        T* orow = out + static_cast<std::size_t>(iy) * dx.width;
        for (int ix = 0; ix < dx.width; ++ix) orow[ix] += irow[ix / factor] * scale;
      }
    }
  }
}

inline constexpr int kInputCopyChannels = 6;

/// Overwrites the final 6 channels of `activation` with [x_small, y_small].
template <typename T>
void inject_input_copies(FeatureMap<T>& activation, const FeatureMap<T>& x_small, const FeatureMap<T>& y_small) {
  if (activation.channels <= kInputCopyChannels) {
    throw ValidationError("input-copy injection needs more than 6 channels, got " +
                          std::to_string(activation.channels));
  }
  for (const auto* small : {&x_small, &y_small}) {
    if (small->channels != 3 || small->batch != activation.batch || small->height != activation.height ||
        small->width != activation.width) {
      throw ValidationError("input copies must be 3-channel images at the activation's size");
    }
  }
  const int first = activation.channels - kInputCopyChannels;
  const std::size_t stride = activation.channel_stride();
  std::copy(x_small.data.begin(), x_small.data.end(), activation.data.begin() + first * stride);
  std::copy(y_small.data.begin(), y_small.data.end(), activation.data.begin() + (first + 3) * stride);
}

// Splits off the gradient of the injected channels: adds them to dx_small /
// dy_small (when non-null) and zeroes them in `dactivation`.
template <typename T>
void inject_input_copies_backward(FeatureMap<T>& dactivation, FeatureMap<T>* dx_small, FeatureMap<T>* dy_small) {
  const int first = dactivation.channels - kInputCopyChannels;
  const std::size_t stride = dactivation.channel_stride();
  auto base = dactivation.data.begin() + first * stride;
  if (dx_small) {
    for (std::size_t k = 0; k < 3 * stride; ++k) dx_small->data[k] += base[k];
  }
  if (dy_small) {
    for (std::size_t k = 0; k < 3 * stride; ++k) dy_small->data[k] += base[3 * stride + k];
  }
  std::fill(base, dactivation.data.end(), T(0));
}

template <typename T>
FeatureMap<T> concat_channels(const FeatureMap<T>& a, const FeatureMap<T>& b) {
  if (a.batch != b.batch || a.height != b.height || a.width != b.width) {
    throw ValidationError("cannot concatenate feature maps of different shapes");
  }
  FeatureMap<T> out(a.channels + b.channels, a.batch, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

// Inverse of concat_channels for gradients: the first `channels` go to `head`.
template <typename T>
void split_channels(const FeatureMap<T>& x, int channels, FeatureMap<T>& head, FeatureMap<T>& tail) {
  head = FeatureMap<T>(channels, x.batch, x.height, x.width);
  tail = FeatureMap<T>(x.channels - channels, x.batch, x.height, x.width);
  std::copy(x.data.begin(), x.data.begin() + head.data.size(), head.data.begin());
  std::copy(x.data.begin() + head.data.size(), x.data.end(), tail.data.begin());
}

template <typename T>
void add_inplace(FeatureMap<T>& into, const FeatureMap<T>& x) {
  for (std::size_t k = 0; k < into.data.size(); ++k) into.data[k] += x.data[k];
}

}  // namespace cagan::nn
