#include <string>

#include "cagan/errors.hpp"
#include "cagan/networks.hpp"

namespace cagan {

int receptive_field(std::span<const std::pair<int, int>> kernel_stride) {
  if (kernel_stride.empty()) throw ValidationError("receptive_field needs at least one layer");
  int field = 1;
  int jump = 1;
  for (const auto& [kernel, stride] : kernel_stride) {
    field += (kernel - 1) * jump;
    jump *= stride;
  }
  return field;
}

void GeneratorSpec::validate() const {
  if (depth < 1) throw ValidationError("generator depth must be >= 1");
  if (depth > 10) throw ValidationError("generator depth must be <= 10");
  if (input_copy_channels != nn::kInputCopyChannels) throw ValidationError("input_copy_channels is fixed at 6");
  if (base_channels <= input_copy_channels) {
    throw ValidationError("base_channels must exceed the 6 input-copy channels, got " + std::to_string(base_channels));
  }
  const int divisor = 1 << depth;
  if (!input_resolution.divisible_by(divisor)) {
    throw ValidationError("resolution " + to_string(input_resolution) + " is not divisible by 2^" +
                          std::to_string(depth));
  }
}

DiscriminatorSpec DiscriminatorSpec::patch63(Resolution resolution, int base_channels) {
  DiscriminatorSpec spec;
  spec.input_resolution = resolution;
  spec.base_channels = base_channels;
  for (int k = 0; k < 4; ++k) spec.conv_layers.push_back({3, 2, base_channels << k});
  spec.conv_layers.push_back({3, 2, 1});
  return spec;
}

void DiscriminatorSpec::validate() const {
  if (conv_layers.size() < 2) throw ValidationError("discriminator needs at least two convolutions");
  if (input_copy_channels != nn::kInputCopyChannels) throw ValidationError("input_copy_channels is fixed at 6");
  if (conv_layers.back().out_channels != 1) throw ValidationError("discriminator output layer must have 1 channel");
  int factor = 1;
  for (std::size_t l = 0; l < conv_layers.size(); ++l) {
    const auto& layer = conv_layers[l];
    if (layer.kernel < 1 || layer.stride < 1) throw ValidationError("bad discriminator layer geometry");
    if (l + 1 == conv_layers.size()) break;
    if (layer.out_channels <= input_copy_channels) {
      throw ValidationError("hidden discriminator layers need more than 6 channels");
    }
    factor *= layer.stride;
    if (!input_resolution.divisible_by(factor)) {
      throw ValidationError("resolution " + to_string(input_resolution) + " is not divisible by " +
                            std::to_string(factor) + " at discriminator layer " + std::to_string(l));
    }
  }
}

int DiscriminatorSpec::receptive_field() const {
  std::vector<std::pair<int, int>> ks;
  for (const auto& l : conv_layers) ks.emplace_back(l.kernel, l.stride);
  return cagan::receptive_field(ks);
}

Resolution DiscriminatorSpec::field_resolution() const {
  Resolution r = input_resolution;
  for (const auto& l : conv_layers) {
    const int pad = detail::same_pad(l.kernel);
    r = {nn::conv_out_size(r.height, l.kernel, l.stride, pad), nn::conv_out_size(r.width, l.kernel, l.stride, pad)};
  }
  return r;
}

}  // namespace cagan
