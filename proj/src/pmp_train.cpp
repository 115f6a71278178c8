#include "revision/pmp.hpp"

#include "revision/error.hpp"
#include "revision/io.hpp"
#include "revision/rng.hpp"

#include <bit>
#include <cmath>
#include <fstream>

namespace revision {

TrainResult pmp_train(PmpModel model, std::span<const TrainingMotion> corpus, const TrainConfig& config,
                      std::uint64_t seed) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "training corpus is empty");
  if (config.steps < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0))
    fail(ErrorCode::InvalidConfig, "steps, batch size and learning rate must be positive");
  check_config(config.perturb);
  TrainResult result{std::move(model), {}};
  PmpModel& m = result.model;
  const int max_frames = m.config().max_frames;
  Rng rng(seed);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(m.parameters().size());
  std::vector<TrainingExample> batch(config.batch_size);
  result.loss.reserve(config.steps);

  for (int step = 0; step < config.steps; ++step) {
    for (auto& ex : batch) {
      const TrainingMotion& tm = corpus[uniform_int(rng, 0, static_cast<int>(corpus.size()) - 1)];
      const int f = tm.motion.length();
      int len = std::min(f, max_frames);
      if (config.crop_min > 0) {
        const int lo = std::min(config.crop_min, len);
        const int hi = std::min(config.crop_max > 0 ? config.crop_max : len, len);
        len = uniform_int(rng, lo, std::max(lo, hi));
      }
      const int start = uniform_int(rng, 0, f - len);
      MotionSequence clean{tm.motion.model, tm.motion.fps, tm.motion.frames.middleRows(start, len)};
      const Perturbed pert = sample_perturbation(clean, config.perturb, rng());
      ex.input = pert.sequence.frames;
      ex.cond = make_conditioning(m.config(), tm.tags, motion_strength(clean).mean, clean.model->category);
      ex.target = std::move(clean.frames);
    }
    LossAndGradient lg = pmp_loss(m, batch);
    if (config.clip_norm > 0.0) {
      const double norm = lg.gradient.norm();
      if (norm > config.clip_norm) lg.gradient *= config.clip_norm / norm;
    }
    velocity = config.momentum * velocity + lg.gradient;
    m.parameters() -= config.learning_rate * velocity;
    result.loss.push_back(lg.loss);
  }
  return result;
}

double smoothed_loss(const std::vector<double>& loss, int step, int window) {
  if (step < 1 || step > static_cast<int>(loss.size()) || window < 1)
    fail(ErrorCode::RangeOutOfBounds, "step outside the training log");
  const int lo = std::max(0, step - window);
  double sum = 0.0;
  for (int i = lo; i < step; ++i) sum += loss[i];
  return sum / (step - lo);
}

namespace {

constexpr char kMagic[4] = {'P', 'M', 'P', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) fail(ErrorCode::ParseError, "checkpoint truncated");
    v |= static_cast<std::uint64_t>(c & 0xff) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const PmpModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  const std::string header = pmp_config_to_json(model.config()).dump();
  os.write(kMagic, 4);
  put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) put_u64(os, std::bit_cast<std::uint64_t>(model.parameters()[i]));
  if (!os) fail(ErrorCode::IoError, "failed writing " + path.string());
}

PmpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kMagic)) fail(ErrorCode::ParseError, path.string() + " is not a PMP1 checkpoint");
  const std::uint64_t n = get_u64(is);
  if (n > (1u << 24)) fail(ErrorCode::ParseError, "checkpoint header too large");
  std::string header(n, '\0');
  is.read(header.data(), static_cast<std::streamsize>(n));
  if (!is) fail(ErrorCode::ParseError, "checkpoint truncated");
  Json j;
  try {
    j = Json::parse(header);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("checkpoint config: ") + e.what());
  }
  PmpModel model(pmp_config_from_json(j));
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) model.parameters()[i] = std::bit_cast<double>(get_u64(is));
  if (is.peek() != std::char_traits<char>::eof()) fail(ErrorCode::ParseError, "checkpoint has trailing bytes");
  return model;
}

void write_training_log(const std::vector<double>& loss, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  os << "step,loss\n";
  os.precision(17);
  for (std::size_t i = 0; i < loss.size(); ++i) os << i + 1 << ',' << loss[i] << '\n';
}

}  // namespace revision
