#include "cagan/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cagan/config.hpp"
#include "cagan/errors.hpp"
#include "cagan/evaluation.hpp"
#include "cagan/logging.hpp"
#include "cagan/toy_dataset.hpp"
#include "cagan/trainer.hpp"

namespace cagan::cli {
namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  fs::path out;
  int count = 200;
  std::string resolution = "64x48";
  std::uint64_t seed = 0;
};

struct TrainArgs {
  fs::path data;
  fs::path out;
  std::int64_t steps = 10000;
  int batch = 16;
  double lr = 0.0002;
  double gamma_i = 0.1;
  double gamma_c = 1.0;
  std::string resolution = "64x48";
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 1000;
  int base_channels = 16;
  int depth = 4;
  int d_base_channels = 16;
  fs::path resume;
};

struct SwapArgs {
  fs::path checkpoint;
  fs::path human;
  fs::path old_article;
  fs::path new_article;
  fs::path out;
  fs::path alpha_out;
};

struct GridArgs {
  fs::path checkpoint;
  fs::path data;
  fs::path out;
  std::string mode = "triplet-rows";
  int count = 9;
  std::uint64_t seed = 0;
  std::string human;
  std::string article;
  bool alpha = false;
};

struct EvalArgs {
  fs::path checkpoint;
  bool oracle = false;
  fs::path data;
  fs::path out;
  int samples = 200;
  int batch = 16;
  std::string resolution = "64x48";
  std::uint64_t seed = 0;
};

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path.string());
}

void require_output_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " is required");
  if (fs::is_directory(path)) throw ValidationError(what + " is a directory: " + path.string());
}

void require_dataset(const fs::path& root) {
  require_file(root / kManifestFileName, "dataset manifest");
}

ImageTensor alpha_as_rgb(const ImageTensor& alpha) {
  ImageTensor rgb(3, alpha.height, alpha.width, RangeTag::Unit);
  for (int c = 0; c < 3; ++c) std::copy(alpha.data.begin(), alpha.data.end(), rgb.data.begin() + c * alpha.plane_size());
  return rgb;
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  ToyDatasetSpec spec;
  spec.count = a.count;
  spec.resolution = parse_resolution(a.resolution);
  spec.seed = a.seed;
  spec.validate();
  if (fs::exists(a.out) && !fs::is_directory(a.out)) throw ValidationError("--out is not a directory: " + a.out.string());

  ToyDataset toy = synthesize_toy_dataset(spec);
  const auto manifest = write_toy_dataset(toy, spec, a.out);
  out << "wrote " << manifest.size() << " pairs to " << a.out.string() << '\n';
}

TrainConfig make_config(const TrainArgs& a) {
  TrainConfig c;
  c.steps = a.steps;
  c.batch_size = a.batch;
  c.learning_rate = a.lr;
  c.weights = {a.gamma_i, a.gamma_c};
  c.resolution = parse_resolution(a.resolution);
  c.seed = a.seed;
  c.checkpoint_every = a.checkpoint_every;
  c.generator_base_channels = a.base_channels;
  c.generator_depth = a.depth;
  c.discriminator_base_channels = a.d_base_channels;
  c.data_root = a.data;
  c.out_dir = a.out;
  return c;
}

void run_train(const TrainArgs& a, std::ostream& out) {
  const TrainConfig config = make_config(a);
  config.validate();
  require_dataset(a.data);
  if (fs::exists(a.out) && !fs::is_directory(a.out)) throw ValidationError("--out is not a directory: " + a.out.string());
  std::optional<fs::path> resume;
  if (!a.resume.empty()) {
    require_file(a.resume, "--resume checkpoint");
    resume = a.resume;
  }
  const TrainerState state = train_loop(config, resume);
  out << "trained to step " << state.step << "; final checkpoint " << (a.out / kFinalCheckpointName).string() << '\n';
}

void run_swap(const SwapArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "--checkpoint");
  require_file(a.human, "--human");
  require_file(a.old_article, "--old");
  require_file(a.new_article, "--new");
  require_output_file(a.out, "--out");
  if (!a.alpha_out.empty()) require_output_file(a.alpha_out, "--alpha-out");

  const TrainerState state = load_checkpoint(a.checkpoint);
  const Resolution res = state.config.resolution;
  const SwapResult r = swap(state.generator, read_rgb_png(a.human, res), read_rgb_png(a.old_article, res),
                            read_rgb_png(a.new_article, res));
  write_rgb_png(r.composite, a.out);
  if (!a.alpha_out.empty()) write_rgb_png(alpha_as_rgb(r.alpha), a.alpha_out);
  out << "wrote " << a.out.string() << '\n';
}

int pick_index(const Dataset& dataset, const std::string& id, Rng& rng) {
  if (!id.empty()) {
    const int k = dataset.manifest().index_of(id);
    if (k < 0) throw ValidationError("unknown pair id '" + id + "'");
    return k;
  }
  return std::uniform_int_distribution<int>(0, dataset.size() - 1)(rng);
}

// `count` distinct indices other than `fixed`, in seeded order.
std::vector<int> others(int n, int fixed, int count, Rng& rng) {
  std::vector<int> idx;
  for (int k = 0; k < n; ++k) {
    if (k != fixed) idx.push_back(k);
  }
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(count)));
  return idx;
}

void run_grid(const GridArgs& a, std::ostream& out) {
  const GridMode mode = parse_grid_mode(a.mode);
  if (a.count < 1) throw ValidationError("--count must be >= 1");
  if (a.alpha && mode != GridMode::TripletRows) {
    throw ValidationError("--alpha is only available with --mode triplet-rows");
  }
  require_file(a.checkpoint, "--checkpoint");
  require_dataset(a.data);
  require_output_file(a.out, "--out");

  const TrainerState state = load_checkpoint(a.checkpoint);
  const Dataset dataset = Dataset::load(a.data, state.config.resolution);
  Rng rng(a.seed);
  std::vector<SwapQuery> items;
  if (mode == GridMode::FixedHuman) {
    const int h = pick_index(dataset, a.human, rng);
    for (int j : others(dataset.size(), h, a.count, rng)) {
      items.push_back({dataset.human(h), dataset.article(h), dataset.article(j), h, h, j});
    }
  } else if (mode == GridMode::FixedArticle) {
    const int t = pick_index(dataset, a.article, rng);
    for (int i : others(dataset.size(), t, a.count, rng)) {
      items.push_back({dataset.human(i), dataset.article(i), dataset.article(t), i, i, t});
    }
  } else {
    for (const auto [i, j] : sample_triplet_indices(dataset.size(), a.count, rng)) {
      items.push_back({dataset.human(i), dataset.article(i), dataset.article(j), i, i, j});
    }
  }
  grid_render(generator_swapper(state.generator), mode, items, a.out, a.alpha);
  out << "wrote " << a.out.string() << '\n';
}

void run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.oracle == !a.checkpoint.empty()) throw ValidationError("give exactly one of --checkpoint or --oracle");
  if (a.samples < 1) throw ValidationError("--samples must be >= 1");
  if (a.batch < 1) throw ValidationError("--batch must be >= 1");
  Resolution res = parse_resolution(a.resolution);
  if (!a.checkpoint.empty()) require_file(a.checkpoint, "--checkpoint");
  require_dataset(a.data);
  if (!a.out.empty()) require_output_file(a.out, "--out");

  std::optional<TrainerState> state;
  if (!a.oracle) {
    state = load_checkpoint(a.checkpoint);
    res = state->config.resolution;
  }
  const Dataset dataset = Dataset::load(a.data, res);
  const ToyGroundTruth truth = load_toy_ground_truth(dataset.manifest());
  const BatchSwapper swapper = a.oracle ? oracle_swapper(truth) : generator_swapper(state->generator);
  const EvalReport report = evaluate_toy(swapper, dataset, truth, a.samples, a.seed, a.batch);
  const nlohmann::json j = report;
  if (!a.out.empty()) {
    std::ofstream file(a.out);
    file << j.dump(2) << '\n';
    if (!file) throw IoError("failed writing " + a.out.string());
  }
  out << j.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional analogy GAN: synthesize toy data, train, swap articles, render grids, evaluate"};
  app.name("cagan");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write a synthetic human/article dataset with torso masks");
  synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of pairs")->capture_default_str();
  synth_cmd->add_option("--resolution", synth.resolution, "WIDTHxHEIGHT")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train generator and discriminator on a dataset");
  train_cmd->add_option("--data", train.data, "Dataset directory holding manifest.tsv")->required();
  train_cmd->add_option("--out", train.out, "Run directory for checkpoints and metrics.jsonl")->required();
  train_cmd->add_option("--steps", train.steps, "Total optimizer steps")->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "Triplets per step")->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--gamma-i", train.gamma_i, "Identity loss weight")->capture_default_str();
  train_cmd->add_option("--gamma-c", train.gamma_c, "Cycle loss weight")->capture_default_str();
  train_cmd->add_option("--resolution", train.resolution, "WIDTHxHEIGHT (presets 128x96, 256x192)")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "Checkpoint cadence in steps")
      ->capture_default_str();
  train_cmd->add_option("--base-channels", train.base_channels, "Generator base width")->capture_default_str();
  train_cmd->add_option("--depth", train.depth, "Generator encoder depth")->capture_default_str();
  train_cmd->add_option("--d-base-channels", train.d_base_channels, "Discriminator base width")
      ->capture_default_str();
  train_cmd->add_option("--resume", train.resume, "Checkpoint to resume from");

  SwapArgs swap_args;
  auto* swap_cmd = app.add_subcommand("swap", "Paint a new article onto a human image");
  swap_cmd->add_option("--checkpoint", swap_args.checkpoint, "Trained checkpoint")->required();
  swap_cmd->add_option("--human", swap_args.human, "Human image (PNG)")->required();
  swap_cmd->add_option("--old", swap_args.old_article, "Article currently worn (PNG)")->required();
  swap_cmd->add_option("--new", swap_args.new_article, "Article to paint (PNG)")->required();
  swap_cmd->add_option("--out", swap_args.out, "Output composite PNG")->required();
  swap_cmd->add_option("--alpha-out", swap_args.alpha_out, "Optional alpha matte PNG");

  GridArgs grid;
  auto* grid_cmd = app.add_subcommand("grid", "Render a grid of swaps");
  grid_cmd->add_option("--checkpoint", grid.checkpoint, "Trained checkpoint")->required();
  grid_cmd->add_option("--data", grid.data, "Dataset directory")->required();
  grid_cmd->add_option("--out", grid.out, "Output PNG")->required();
  grid_cmd->add_option("--mode", grid.mode, "fixed-human | fixed-article | triplet-rows")->capture_default_str();
  grid_cmd->add_option("--count", grid.count, "Number of swaps")->capture_default_str();
  grid_cmd->add_option("--seed", grid.seed, "Random seed")->capture_default_str();
  grid_cmd->add_option("--human", grid.human, "Pair id of the fixed human");
  grid_cmd->add_option("--article", grid.article, "Pair id of the fixed article");
  grid_cmd->add_flag("--alpha", grid.alpha, "Add an alpha matte column (triplet-rows only)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score swaps on a synthetic dataset against its ground truth");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Trained checkpoint");
  eval_cmd->add_flag("--oracle", eval.oracle, "Score the ground-truth reference swapper instead");
  eval_cmd->add_option("--data", eval.data, "Synthetic dataset directory")->required();
  eval_cmd->add_option("--out", eval.out, "Optional JSON report path");
  eval_cmd->add_option("--samples", eval.samples, "Number of sampled triplets")->capture_default_str();
  eval_cmd->add_option("--batch", eval.batch, "Forward batch size")->capture_default_str();
  eval_cmd->add_option("--resolution", eval.resolution, "WIDTHxHEIGHT, used with --oracle")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Random seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  init_logging();
  try {
    if (*synth_cmd) run_synth(synth, out);
    if (*train_cmd) run_train(train, out);
    if (*swap_cmd) run_swap(swap_args, out);
    if (*grid_cmd) run_grid(grid, out);
    if (*eval_cmd) run_eval(eval, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace cagan::cli
