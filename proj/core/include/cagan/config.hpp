#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "cagan/image.hpp"
#include "cagan/networks.hpp"
#include "cagan/objectives.hpp"

namespace cagan {

/// Everything that determines a training run. Defaults follow the published
/// recipe (Adam lr 2e-4, beta1 0.5, batch 16, gamma_i 0.1, gamma_c 1.0).
struct TrainConfig {
  std::int64_t steps = 10000;
  int batch_size = 16;
  double learning_rate = 0.0002;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossWeights weights{};
  Resolution resolution{48, 64};
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 1000;
  int generator_base_channels = 16;
  int generator_depth = 4;
  int discriminator_base_channels = 16;
  std::filesystem::path data_root;
  std::filesystem::path out_dir;

  void validate() const;
  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;
  // True when two configs produce the same trajectory (ignores steps,
  // checkpoint cadence and paths).
  bool same_run(const TrainConfig& other) const;

  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace cagan
