#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cagan/config.hpp"
#include "cagan/dataset.hpp"
#include "cagan/networks.hpp"
#include "cagan/objectives.hpp"
#include "cagan/optimizer.hpp"
#include "cagan/random.hpp"

namespace cagan {

inline constexpr char kCheckpointMagic[] = "CAGANCKPT";  // 9 bytes on disk, no terminator
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr const char* kMetricsFileName = "metrics.jsonl";
inline constexpr const char* kFinalCheckpointName = "final.ckpt";

/// Mutable training state: both networks, their optimizers and the sampling stream.
struct TrainerState {
  TrainConfig config;
  std::int64_t step = 0;
  Generator<float> generator;
  Discriminator<float> discriminator;
  Adam g_optimizer;
  Adam d_optimizer;
  Rng rng;

  static TrainerState initialize(const TrainConfig& config);
};

/// One discriminator update followed by one generator update on `batch`.
LossReport train_step(TrainerState& state, const TripletBatch& batch);

// CRC-32 (zlib polynomial) guarding the checkpoint payload.
std::uint32_t checkpoint_crc32(std::string_view payload);

std::string serialize_checkpoint(const TrainerState& state);
TrainerState deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const TrainerState& state, const std::filesystem::path& path);
TrainerState load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step);

/// Runs config.steps updates, appending one metrics line per step and
/// checkpointing every config.checkpoint_every steps and at completion. When
/// `resume_from` is given, training continues from that checkpoint and
/// metrics lines past its step are discarded first.
TrainerState train_loop(const TrainConfig& config, const std::optional<std::filesystem::path>& resume_from = {});

}  // namespace cagan
