#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cagan/image.hpp"
#include "cagan/nn/layers.hpp"

namespace cagan {

/// r_0 = 1, r_n = r_{n-1} + (kernel_n - 1) * prod_{m<n} stride_m.
int receptive_field(std::span<const std::pair<int, int>> kernel_stride);

// Initial alpha logit bias: sigmoid(-3) ~ 0.047.
inline constexpr double kAlphaLogitInit = -3.0;

struct GeneratorSpec {
  Resolution input_resolution{48, 64};
  int base_channels = 16;
  int depth = 4;  // number of stride-2 encoder stages
  int input_copy_channels = nn::kInputCopyChannels;

  void validate() const;
  Resolution bottleneck() const { return {input_resolution.height >> depth, input_resolution.width >> depth}; }
};

struct ConvLayerSpec {
  int kernel = 3;
  int stride = 2;
  int out_channels = 1;

  bool operator==(const ConvLayerSpec&) const = default;
};

struct DiscriminatorSpec {
  Resolution input_resolution{48, 64};
  int base_channels = 16;
  std::vector<ConvLayerSpec> conv_layers;
  int input_copy_channels = nn::kInputCopyChannels;

  // Five 3x3 stride-2 convolutions with channels C, 2C, 4C, 8C, 1: a 63 pixel
  // receptive field.
  static DiscriminatorSpec patch63(Resolution resolution, int base_channels);

  void validate() const;
  int receptive_field() const;
  Resolution field_resolution() const;
};

namespace detail {
inline int same_pad(int kernel) { return (kernel - 1) / 2; }
}  // namespace detail

/// Encoder-decoder with concatenating skips; emits an alpha matte and a color
/// image and blends them with the human input.
template <typename T>
class Generator {
 public:
  struct Output {
    nn::FeatureMap<T> alpha;      // (1, N, H, W) in [0, 1]
    nn::FeatureMap<T> raw_color;  // (3, N, H, W) in [-1, 1]
    nn::FeatureMap<T> composite;  // alpha * raw_color + (1 - alpha) * x
  };

  struct Stage {
    typename nn::Conv2d<T>::Cache conv;
    typename nn::ConvTranspose2d<T>::Cache deconv;
    typename nn::InstanceNorm<T>::Cache norm;
    nn::FeatureMap<T> out;  // post-activation, post-injection
  };

  struct Trace {
    nn::FeatureMap<T> x;
    std::vector<nn::FeatureMap<T>> x_copies;  // level l at index l-1, level l = 1/2^l scale
    std::vector<nn::FeatureMap<T>> y_copies;
    std::vector<Stage> encoder;
    std::vector<Stage> decoder;
    std::vector<nn::FeatureMap<T>> concat;  // decoder stage output joined with its skip
    typename nn::ConvTranspose2d<T>::Cache head;
    Output output;
  };

  struct StageShape {
    int channels = 0;
    int height = 0;
    int width = 0;
  };

  Generator() = default;
  Generator(const GeneratorSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.validate();
    const int c = spec_.base_channels;
    const int d = spec_.depth;
    encoder_.emplace_back("enc0", 9, c, 4, 2, 1);
    for (int k = 1; k < d; ++k) encoder_.emplace_back("enc" + std::to_string(k), c << (k - 1), c << k, 4, 2, 1);
    for (int j = 0; j + 1 < d; ++j) {
      // Past the first stage the input is the previous output concatenated with its skip.
      const int in = j == 0 ? c << (d - 1) : c << (d - j);
      decoder_.emplace_back("dec" + std::to_string(j), in, c << (d - 2 - j), 4, 2, 1);
    }
    head_ = nn::ConvTranspose2d<T>("head", d == 1 ? c : 2 * c, 4, 4, 2, 1);
    Rng rng(seed);
    for (auto* p : parameters()) {
      if (p->name.ends_with(".weight")) p->init_normal(rng, 0.02);
    }
    head_.bias.value[0] = static_cast<T>(kAlphaLogitInit);
  }

  const GeneratorSpec& spec() const { return spec_; }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto& l : encoder_) out.insert(out.end(), {&l.weight, &l.bias});
    for (auto& l : decoder_) out.insert(out.end(), {&l.weight, &l.bias});
    out.insert(out.end(), {&head_.weight, &head_.bias});
    return out;
  }
  std::vector<const nn::Parameter<T>*> parameters() const {
    auto ps = const_cast<Generator*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }
  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::vector<StageShape> encoder_shapes() const {
    std::vector<StageShape> out;
    int h = spec_.input_resolution.height;
    int w = spec_.input_resolution.width;
    for (const auto& l : encoder_) {
      h = l.out_size(h);
      w = l.out_size(w);
      out.push_back({l.out_channels(), h, w});
    }
    return out;
  }
  std::vector<StageShape> decoder_shapes() const {
    std::vector<StageShape> out;
    auto enc = encoder_shapes();
    int h = enc.back().height;
    int w = enc.back().width;
    for (const auto& l : decoder_) {
      h = l.out_size(h);
      w = l.out_size(w);
      out.push_back({l.out_channels(), h, w});
    }
    out.push_back({head_.out_channels(), head_.out_size(h), head_.out_size(w)});
    return out;
  }

  Output forward(const nn::FeatureMap<T>& x, const nn::FeatureMap<T>& y_old, const nn::FeatureMap<T>& y_new,
                 Trace* trace = nullptr) const {
    const Resolution res = spec_.input_resolution;
    for (const auto* img : {&x, &y_old, &y_new}) {
      if (img->channels != 3 || img->height != res.height || img->width != res.width || img->batch != x.batch) {
        throw ValidationError("generator inputs must be 3-channel batches at " + to_string(res));
      }
    }
    Trace local;
    Trace& t = trace ? *trace : local;
    const int d = spec_.depth;
    t.x = x;
    t.x_copies.clear();
    t.y_copies.clear();
    for (int level = 1; level <= d; ++level) {
      t.x_copies.push_back(nn::box_downsample(x, 1 << level));
      t.y_copies.push_back(nn::box_downsample(y_new, 1 << level));
    }
    const bool keep = trace != nullptr;

    t.encoder.assign(d, {});
    nn::FeatureMap<T> input = nn::concat_channels(nn::concat_channels(x, y_old), y_new);
    for (int k = 0; k < d; ++k) {
      Stage& s = t.encoder[k];
      const nn::FeatureMap<T>& in = k == 0 ? input : t.encoder[k - 1].out;
      nn::FeatureMap<T> z = encoder_[k].forward(in, keep ? &s.conv : nullptr);
      if (k > 0) z = nn::InstanceNorm<T>::forward(z, keep ? &s.norm : nullptr);
      nn::relu_inplace(z);
      nn::inject_input_copies(z, t.x_copies[k], t.y_copies[k]);
      s.out = std::move(z);
    }
    t.decoder.assign(d - 1, {});
    t.concat.assign(d - 1, {});
    for (int j = 0; j + 1 < d; ++j) {
      Stage& s = t.decoder[j];
      const nn::FeatureMap<T>& in = j == 0 ? t.encoder[d - 1].out : t.concat[j - 1];
      nn::FeatureMap<T> z = decoder_[j].forward(in, keep ? &s.deconv : nullptr);
      z = nn::InstanceNorm<T>::forward(z, keep ? &s.norm : nullptr);
      nn::relu_inplace(z);
      const int level = d - 1 - j;
      nn::inject_input_copies(z, t.x_copies[level - 1], t.y_copies[level - 1]);
      s.out = std::move(z);
      t.concat[j] = nn::concat_channels(s.out, t.encoder[d - 2 - j].out);
    }
    const nn::FeatureMap<T>& head_in = d == 1 ? t.encoder[0].out : t.concat[d - 2];
    nn::FeatureMap<T> h = head_.forward(head_in, keep ? &t.head : nullptr);

    Output out;
    out.alpha = nn::FeatureMap<T>(1, x.batch, res.height, res.width);
    out.raw_color = nn::FeatureMap<T>(3, x.batch, res.height, res.width);
    out.composite = nn::FeatureMap<T>(3, x.batch, res.height, res.width);
    const std::size_t n = out.alpha.size();
    for (std::size_t k = 0; k < n; ++k) out.alpha.data[k] = nn::sigmoid(h.data[k]);
    for (std::size_t k = 0; k < 3 * n; ++k) out.raw_color.data[k] = std::tanh(h.data[n + k]);
    for (int c = 0; c < 3; ++c) {
      const T* xc = x.channel(c);
      const T* rc = out.raw_color.channel(c);
      T* oc = out.composite.channel(c);
      for (std::size_t k = 0; k < n; ++k) {
        const T a = out.alpha.data[k];
        oc[k] = a * rc[k] + (T(1) - a) * xc[k];
      }
    }
    if (trace) trace->output = out;
    return out;
  }

  // Backpropagates d(loss)/d(composite) and, optionally, d(loss)/d(alpha).
  // Accumulates parameter gradients; fills `dx` (gradient w.r.t. the human
  // input through every path) when non-null.
  void backward(const Trace& t, const nn::FeatureMap<T>& d_composite, const nn::FeatureMap<T>* d_alpha,
                nn::FeatureMap<T>* dx) {
    const int d = spec_.depth;
    const auto& out = t.output;
    const std::size_t n = out.alpha.size();
    nn::FeatureMap<T> dh(4, out.alpha.batch, out.alpha.height, out.alpha.width);
    nn::FeatureMap<T> dx_total = nn::zeros_like(t.x);
    for (std::size_t k = 0; k < n; ++k) {
      const T a = out.alpha.data[k];
      T da = d_alpha ? d_alpha->data[k] : T(0);
      for (int c = 0; c < 3; ++c) {
        const std::size_t idx = c * n + k;
        const T g = d_composite.data[idx];
        const T r = out.raw_color.data[idx];
        da += g * (r - t.x.data[idx]);
        dh.data[n + idx] = g * a * (T(1) - r * r);
        dx_total.data[idx] = g * (T(1) - a);
      }
      dh.data[k] = da * a * (T(1) - a);
    }

    std::vector<nn::FeatureMap<T>> dxs;
    for (const auto& xc : t.x_copies) dxs.push_back(nn::zeros_like(xc));
    std::vector<nn::FeatureMap<T>> d_enc;
    for (const auto& s : t.encoder) d_enc.push_back(nn::zeros_like(s.out));

    nn::FeatureMap<T> d_in;
    head_.backward(t.head, dh, &d_in);
    if (d == 1) {
      nn::add_inplace(d_enc[0], d_in);
    } else {
      nn::FeatureMap<T> d_cat = std::move(d_in);
      for (int j = d - 2; j >= 0; --j) {
        const Stage& s = t.decoder[j];
        nn::FeatureMap<T> dz;
        nn::FeatureMap<T> d_skip;
        nn::split_channels(d_cat, s.out.channels, dz, d_skip);
        nn::add_inplace(d_enc[d - 2 - j], d_skip);
        const int level = d - 1 - j;
        nn::inject_input_copies_backward(dz, &dxs[level - 1], static_cast<nn::FeatureMap<T>*>(nullptr));
        nn::relu_backward_inplace(s.out, dz);
        dz = nn::InstanceNorm<T>::backward(s.norm, dz);
        nn::FeatureMap<T> d_prev;
        decoder_[j].backward(s.deconv, dz, &d_prev);
        if (j == 0) {
          nn::add_inplace(d_enc[d - 1], d_prev);
        } else {
          d_cat = std::move(d_prev);
        }
      }
    }
    for (int k = d - 1; k >= 0; --k) {
      const Stage& s = t.encoder[k];
      nn::FeatureMap<T>& dz = d_enc[k];
      nn::inject_input_copies_backward(dz, &dxs[k], static_cast<nn::FeatureMap<T>*>(nullptr));
      nn::relu_backward_inplace(s.out, dz);
      if (k > 0) dz = nn::InstanceNorm<T>::backward(s.norm, dz);
      if (k > 0) {
        nn::FeatureMap<T> d_prev;
        encoder_[k].backward(s.conv, dz, &d_prev);
        nn::add_inplace(d_enc[k - 1], d_prev);
      } else if (dx) {
        nn::FeatureMap<T> d_input;
        encoder_[0].backward(s.conv, dz, &d_input);
        // Channels 0..2 of the 9-channel input are x.
        for (std::size_t k2 = 0; k2 < dx_total.size(); ++k2) dx_total.data[k2] += d_input.data[k2];
      } else {
        encoder_[0].backward(s.conv, dz, nullptr);
      }
    }
    if (dx) {
      for (int level = 1; level <= d; ++level) nn::box_downsample_backward(dxs[level - 1], 1 << level, dx_total);
      *dx = std::move(dx_total);
    }
  }

 private:
  GeneratorSpec spec_;
  std::vector<nn::Conv2d<T>> encoder_;
  std::vector<nn::ConvTranspose2d<T>> decoder_;
  nn::ConvTranspose2d<T> head_;
};

/// Patch discriminator producing a sigmoid score per spatial cell.
template <typename T>
class Discriminator {
 public:
  struct Stage {
    typename nn::Conv2d<T>::Cache conv;
    typename nn::InstanceNorm<T>::Cache norm;
    nn::FeatureMap<T> out;
  };

  struct Trace {
    std::vector<nn::FeatureMap<T>> x_copies;  // one per hidden layer
    std::vector<Stage> stages;
    nn::FeatureMap<T> scores;
  };

  Discriminator() = default;
  Discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.validate();
    int in = 6;
    for (std::size_t l = 0; l < spec_.conv_layers.size(); ++l) {
      const auto& ls = spec_.conv_layers[l];
      layers_.emplace_back("d" + std::to_string(l), in, ls.out_channels, ls.kernel, ls.stride,
                           detail::same_pad(ls.kernel));
      in = ls.out_channels;
    }
    Rng rng(seed);
    for (auto* p : parameters()) {
      if (p->name.ends_with(".weight")) p->init_normal(rng, 0.02);
    }
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto& l : layers_) out.insert(out.end(), {&l.weight, &l.bias});
    return out;
  }
  std::vector<const nn::Parameter<T>*> parameters() const {
    auto ps = const_cast<Discriminator*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }
  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  // Scores (1, N, H_d, W_d), each in (0, 1).
  nn::FeatureMap<T> forward(const nn::FeatureMap<T>& x, const nn::FeatureMap<T>& y, Trace* trace = nullptr) const {
    const Resolution res = spec_.input_resolution;
    for (const auto* img : {&x, &y}) {
      if (img->channels != 3 || img->height != res.height || img->width != res.width || img->batch != x.batch) {
        throw ValidationError("discriminator inputs must be 3-channel batches at " + to_string(res));
      }
    }
    Trace local;
    Trace& t = trace ? *trace : local;
    const bool keep = trace != nullptr;
    const std::size_t hidden = layers_.size() - 1;
    t.x_copies.assign(hidden, {});
    t.stages.assign(layers_.size(), {});
    nn::FeatureMap<T> z = nn::concat_channels(x, y);
    int factor = 1;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Stage& s = t.stages[l];
      z = layers_[l].forward(z, keep ? &s.conv : nullptr);
      factor *= layers_[l].stride();
      if (l == hidden) break;
      if (l > 0) z = nn::InstanceNorm<T>::forward(z, keep ? &s.norm : nullptr);
      nn::relu_inplace(z);
      t.x_copies[l] = nn::box_downsample(x, factor);
      nn::inject_input_copies(z, t.x_copies[l], nn::box_downsample(y, factor));
      s.out = z;
    }
    for (auto& v : z.data) v = nn::sigmoid(v);
    if (trace) trace->scores = z;
    return z;
  }

  // `d_scores` is d(loss)/d(score). Accumulates parameter gradients; fills
  // `dx` (gradient w.r.t. the first input image) when non-null.
  void backward(const Trace& t, const nn::FeatureMap<T>& d_scores, nn::FeatureMap<T>* dx) {
    nn::FeatureMap<T> dz = d_scores;
    for (std::size_t k = 0; k < dz.size(); ++k) {
      const T s = t.scores.data[k];
      dz.data[k] *= s * (T(1) - s);
    }
    const std::size_t hidden = layers_.size() - 1;
    const Resolution res = spec_.input_resolution;
    nn::FeatureMap<T> dx_total;
    if (dx) dx_total = nn::FeatureMap<T>(3, dz.batch, res.height, res.width);
    std::vector<int> factors;
    int factor = 1;
    for (const auto& l : layers_) factors.push_back(factor *= l.stride());

    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Stage& s = t.stages[l];
      if (l != hidden) {
        nn::FeatureMap<T> dxs = nn::zeros_like(t.x_copies[l]);
        nn::inject_input_copies_backward(dz, &dxs, static_cast<nn::FeatureMap<T>*>(nullptr));
        if (dx) nn::box_downsample_backward(dxs, factors[l], dx_total);
        nn::relu_backward_inplace(s.out, dz);
        if (l > 0) dz = nn::InstanceNorm<T>::backward(s.norm, dz);
      }
      if (l > 0) {
        nn::FeatureMap<T> d_prev;
        layers_[l].backward(s.conv, dz, &d_prev);
        dz = std::move(d_prev);
      } else if (dx) {
        nn::FeatureMap<T> d_input;
        layers_[0].backward(s.conv, dz, &d_input);
        for (std::size_t k = 0; k < dx_total.size(); ++k) dx_total.data[k] += d_input.data[k];
      } else {
        layers_[0].backward(s.conv, dz, nullptr);
      }
    }
    if (dx) *dx = std::move(dx_total);
  }

 private:
  DiscriminatorSpec spec_;
  std::vector<nn::Conv2d<T>> layers_;
};

// Packs per-image tensors into one (3, N, H, W) batch and back.
template <typename T>
nn::FeatureMap<T> to_feature_map(std::span<const ImageTensor> images) {
  if (images.empty()) throw ValidationError("empty image batch");
  const auto& first = images.front();
  nn::FeatureMap<T> out(first.channels, static_cast<int>(images.size()), first.height, first.width);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& img = images[n];
    if (img.channels != first.channels || img.resolution() != first.resolution()) {
      throw ValidationError("images in a batch must share one shape");
    }
    for (int c = 0; c < img.channels; ++c) {
      auto src = img.channel(c);
      std::transform(src.begin(), src.end(), out.plane_ptr(c, static_cast<int>(n)),
                     [](float v) { return static_cast<T>(v); });
    }
  }
  return out;
}

template <typename T>
ImageTensor image_at(const nn::FeatureMap<T>& fm, int n, RangeTag tag) {
  ImageTensor img(fm.channels, fm.height, fm.width, tag);
  for (int c = 0; c < fm.channels; ++c) {
    const T* src = fm.plane_ptr(c, n);
    for (std::size_t k = 0; k < fm.plane(); ++k) img.data[c * img.plane_size() + k] = static_cast<float>(src[k]);
  }
  return img;
}

}  // namespace cagan
