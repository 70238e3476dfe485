#include "cagan/trainer.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "cagan/logging.hpp"

namespace cagan {
namespace {

enum Stream : std::uint64_t { kGeneratorInit = 1, kDiscriminatorInit = 2, kSampling = 3 };

void scale_inplace(nn::FeatureMap<float>& x, double factor) {
  const auto f = static_cast<float>(factor);
  for (auto& v : x.data) v *= f;
}

}  // namespace

TrainerState TrainerState::initialize(const TrainConfig& config) {
  config.validate();
  TrainerState s;
  s.config = config;
  s.generator = Generator<float>(config.generator_spec(), derive_rng(config.seed, kGeneratorInit)());
  s.discriminator = Discriminator<float>(config.discriminator_spec(), derive_rng(config.seed, kDiscriminatorInit)());
  s.g_optimizer = Adam(s.generator.parameters(), config.learning_rate, config.adam_beta1, config.adam_beta2,
                       config.adam_epsilon);
  s.d_optimizer = Adam(s.discriminator.parameters(), config.learning_rate, config.adam_beta1, config.adam_beta2,
                       config.adam_epsilon);
  s.rng = derive_rng(config.seed, kSampling);
  return s;
}

LossReport train_step(TrainerState& state, const TripletBatch& batch) {
  batch.validate();
  auto& G = state.generator;
  auto& D = state.discriminator;
  const std::int64_t step = state.step + 1;
  try {
    const auto x = to_feature_map<float>(batch.x);
    const auto y_i = to_feature_map<float>(batch.y_i);
    const auto y_j = to_feature_map<float>(batch.y_j);

    // G's parameters do not change during the D update, so this pass serves
    // both the (detached) D step and the G step.
    Generator<float>::Trace swap_trace;
    const auto swapped = G.forward(x, y_i, y_j, &swap_trace);

    D.zero_grad();
    Discriminator<float>::Trace real_trace;
    Discriminator<float>::Trace fake_trace;
    Discriminator<float>::Trace mismatch_trace;
    const auto d_real = D.forward(x, y_i, &real_trace);
    const auto d_fake = D.forward(swapped.composite, y_j, &fake_trace);
    const auto d_mismatch = D.forward(x, y_j, &mismatch_trace);
    const auto d_loss = adversarial_loss_d(d_real, d_fake, d_mismatch);
    if (!std::isfinite(d_loss.total)) throw NumericalError("non-finite loss term d_total");
    D.backward(real_trace, d_loss.real.grad, nullptr);
    D.backward(fake_trace, d_loss.fake.grad, nullptr);
    D.backward(mismatch_trace, d_loss.mismatch.grad, nullptr);
    state.d_optimizer.step(D.parameters());

    G.zero_grad();
    Discriminator<float>::Trace g_trace;
    const auto d_gen = D.forward(swapped.composite, y_j, &g_trace);
    const auto g_adv = adversarial_loss_g(d_gen);
    nn::FeatureMap<float> d_composite;
    D.backward(g_trace, g_adv.grad, &d_composite);
    D.zero_grad();

    Generator<float>::Trace cycle_trace;
    const auto cycled = G.forward(swapped.composite, y_j, y_i, &cycle_trace);
    auto cyc = cycle_loss(x, cycled.composite);
    auto id = identity_loss(swapped.alpha);

    const auto report = total_losses({d_loss.real.value, d_loss.fake.value, d_loss.mismatch.value, g_adv.value,
                                      id.value, cyc.value},
                                     state.config.weights);

    scale_inplace(cyc.grad, state.config.weights.gamma_c);
    scale_inplace(id.grad, state.config.weights.gamma_i);
    nn::FeatureMap<float> d_from_cycle;
    G.backward(cycle_trace, cyc.grad, nullptr, &d_from_cycle);
    nn::add_inplace(d_composite, d_from_cycle);
    G.backward(swap_trace, d_composite, &id.grad, nullptr);
    state.g_optimizer.step(G.parameters());

    state.step = step;
    return report;
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step));
  }
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic | u32 version | u32 crc32(payload) | u64 size | payload

namespace {

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void floats(const std::vector<float>& v) {
    pod<std::uint64_t>(v.size());
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<float> floats() {
    const auto n = pod<std::uint64_t>();
    need(n * sizeof(float));
    std::vector<float> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw IntegrityError("checkpoint truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

template <typename Net>
void write_params(Writer& w, const Net& net) {
  const auto params = net.parameters();
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.str(p->name);
    w.floats(p->value);
  }
}

template <typename Net>
void read_params(Reader& r, Net& net) {
  auto params = net.parameters();
  if (r.pod<std::uint32_t>() != params.size()) throw IntegrityError("checkpoint parameter count mismatch");
  for (auto* p : params) {
    if (r.str() != p->name) throw IntegrityError("checkpoint parameter name mismatch at " + p->name);
    auto values = r.floats();
    if (values.size() != p->value.size()) throw IntegrityError("checkpoint parameter size mismatch at " + p->name);
    p->value = std::move(values);
  }
}

void write_optimizer(Writer& w, const Adam& opt) {
  w.pod<std::int64_t>(opt.steps());
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(opt.first_moments().size()));
  for (std::size_t k = 0; k < opt.first_moments().size(); ++k) {
    w.floats(opt.first_moments()[k]);
    w.floats(opt.second_moments()[k]);
  }
}

void read_optimizer(Reader& r, Adam& opt) {
  const auto steps = r.pod<std::int64_t>();
  const auto count = r.pod<std::uint32_t>();
  std::vector<std::vector<float>> m(count);
  std::vector<std::vector<float>> v(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    m[k] = r.floats();
    v[k] = r.floats();
  }
  opt.restore(steps, std::move(m), std::move(v));
}

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;
constexpr std::size_t kHeaderSize = kMagicSize + 4 + 4 + 8;

}  // namespace

std::string serialize_checkpoint(const TrainerState& s) {
  Writer w;
  w.pod<std::int64_t>(s.step);
  w.str(nlohmann::json(s.config).dump());
  w.str(serialize_rng(s.rng));
  write_params(w, s.generator);
  write_params(w, s.discriminator);
  write_optimizer(w, s.g_optimizer);
  write_optimizer(w, s.d_optimizer);
  const std::string payload = w.take();

  Writer header;
  std::string out(kCheckpointMagic, kMagicSize);
  header.pod<std::uint32_t>(kCheckpointFormatVersion);
  header.pod<std::uint32_t>(checkpoint_crc32(payload));
  header.pod<std::uint64_t>(payload.size());
  out += header.take();
  out += payload;
  return out;
}

TrainerState deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kHeaderSize || bytes.compare(0, kMagicSize, kCheckpointMagic, kMagicSize) != 0) {
    throw IntegrityError("not a checkpoint file (bad magic)");
  }
  Reader header(std::string_view(bytes).substr(kMagicSize, kHeaderSize - kMagicSize));
  const auto version = header.pod<std::uint32_t>();
  if (version != kCheckpointFormatVersion) {
    throw UnsupportedVersionError("unsupported checkpoint format_version " + std::to_string(version) +
                                  " (this build reads " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  const auto crc = header.pod<std::uint32_t>();
  const auto size = header.pod<std::uint64_t>();
  const std::string_view payload = std::string_view(bytes).substr(kHeaderSize);
  if (payload.size() != size) throw IntegrityError("checkpoint size mismatch");
  if (checkpoint_crc32(payload) != crc) throw IntegrityError("checkpoint checksum mismatch");

  Reader r(payload);
  const auto step = r.pod<std::int64_t>();
  TrainConfig config;
  try {
    config = nlohmann::json::parse(r.str()).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint config unreadable: ") + e.what());
  }
  TrainerState s = TrainerState::initialize(config);
  s.step = step;
  s.rng = deserialize_rng(r.str());
  read_params(r, s.generator);
  read_params(r, s.discriminator);
  read_optimizer(r, s.g_optimizer);
  read_optimizer(r, s.d_optimizer);
  if (!r.done()) throw IntegrityError("trailing bytes in checkpoint");
  return s;
}

void save_checkpoint(const TrainerState& state, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(state);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

TrainerState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step) {
  char name[48];
  std::snprintf(name, sizeof(name), "step_%08lld.ckpt", static_cast<long long>(step));
  return out_dir / name;
}

namespace {

// Keeps the metrics lines with step <= last_step; returns how many were kept.
std::int64_t truncate_metrics(const std::filesystem::path& path, std::int64_t last_step) {
  if (!std::filesystem::exists(path)) return 0;
  std::vector<std::string> kept;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("step")) break;
      if (j["step"].get<std::int64_t>() > last_step) break;
      kept.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << '\n';
  return static_cast<std::int64_t>(kept.size());
}

}  // namespace

TrainerState train_loop(const TrainConfig& config, const std::optional<std::filesystem::path>& resume_from) {
  init_logging();
  config.validate();
  if (config.out_dir.empty()) throw ValidationError("train_loop needs an output directory");
  const Dataset dataset = Dataset::load(config.data_root, config.resolution);

  TrainerState state;
  if (resume_from) {
    state = load_checkpoint(*resume_from);
    if (!state.config.same_run(config)) {
      throw ValidationError("checkpoint " + resume_from->string() + " was produced by a different configuration");
    }
    state.config = config;
  } else {
    state = TrainerState::initialize(config);
  }

  std::filesystem::create_directories(config.out_dir);
  const auto metrics_path = config.out_dir / kMetricsFileName;
  if (resume_from) {
    truncate_metrics(metrics_path, state.step);
  }
  std::ofstream metrics(metrics_path, resume_from ? std::ios::app : std::ios::trunc);
  if (!metrics) throw IoError("cannot open " + metrics_path.string());

  auto checkpoint = [&](const std::filesystem::path& path) {
    try {
      save_checkpoint(state, path);
    } catch (const Error&) {
      metrics.flush();
      throw;
    }
  };

  spdlog::info("training {} -> {} steps, batch {}, resolution {}", state.step, config.steps, config.batch_size,
               to_string(config.resolution));
  while (state.step < config.steps) {
    const auto batch = sample_triplets(dataset, config.batch_size, state.rng);
    const LossReport report = train_step(state, batch);
    nlohmann::json line = report;
    line["step"] = state.step;
    metrics << line.dump() << '\n';
    metrics.flush();
    if (!metrics) throw IoError("failed writing " + metrics_path.string());
    if (state.step % 50 == 0 || state.step == 1) {
      spdlog::info("step {:>6}  d_total {:.4f}  g_adv {:.4f}  l_id {:.4f}  l_cyc {:.4f}", state.step, report.d_total,
                   report.g_adv, report.l_id, report.l_cyc);
    }
    if (state.step % config.checkpoint_every == 0) checkpoint(checkpoint_path(config.out_dir, state.step));
  }
  checkpoint(config.out_dir / kFinalCheckpointName);
  return state;
}

}  // namespace cagan
