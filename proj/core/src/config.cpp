#include "cagan/config.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "cagan/errors.hpp"

namespace cagan {

void TrainConfig::validate() const {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ValidationError("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ValidationError("adam_beta2 must be in [0, 1)");
  if (!(adam_epsilon > 0)) throw ValidationError("adam_epsilon must be > 0");
  if (checkpoint_every < 1) throw ValidationError("checkpoint_every must be >= 1");
  weights.validate();
  generator_spec().validate();
  discriminator_spec().validate();
}

GeneratorSpec TrainConfig::generator_spec() const {
  GeneratorSpec spec;
  spec.input_resolution = resolution;
  spec.base_channels = generator_base_channels;
  spec.depth = generator_depth;
  return spec;
}

DiscriminatorSpec TrainConfig::discriminator_spec() const {
  return DiscriminatorSpec::patch63(resolution, discriminator_base_channels);
}

bool TrainConfig::same_run(const TrainConfig& o) const {
  return batch_size == o.batch_size && learning_rate == o.learning_rate && adam_beta1 == o.adam_beta1 &&
         adam_beta2 == o.adam_beta2 && adam_epsilon == o.adam_epsilon && weights == o.weights &&
         resolution == o.resolution && seed == o.seed && generator_base_channels == o.generator_base_channels &&
         generator_depth == o.generator_depth && discriminator_base_channels == o.discriminator_base_channels;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"steps", c.steps},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_epsilon", c.adam_epsilon},
      {"gamma_i", c.weights.gamma_i},
      {"gamma_c", c.weights.gamma_c},
      {"resolution", to_string(c.resolution)},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"generator_base_channels", c.generator_base_channels},
      {"generator_depth", c.generator_depth},
      {"discriminator_base_channels", c.discriminator_base_channels},
      {"data_root", c.data_root.generic_string()},
      {"out_dir", c.out_dir.generic_string()},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("steps").get_to(c.steps);
  j.at("batch_size").get_to(c.batch_size);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("adam_beta1").get_to(c.adam_beta1);
  j.at("adam_beta2").get_to(c.adam_beta2);
  j.at("adam_epsilon").get_to(c.adam_epsilon);
  j.at("gamma_i").get_to(c.weights.gamma_i);
  j.at("gamma_c").get_to(c.weights.gamma_c);
  c.resolution = parse_resolution(j.at("resolution").get<std::string>());
  j.at("seed").get_to(c.seed);
  j.at("checkpoint_every").get_to(c.checkpoint_every);
  j.at("generator_base_channels").get_to(c.generator_base_channels);
  j.at("generator_depth").get_to(c.generator_depth);
  j.at("discriminator_base_channels").get_to(c.discriminator_base_channels);
  c.data_root = j.at("data_root").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
}

}  // namespace cagan
