#include "revision/perturb.hpp"

#include "revision/error.hpp"
#include "revision/rng.hpp"

#include <cmath>
#include <numeric>

namespace revision {

NoiseSchedule::NoiseSchedule(Eigen::VectorXd gamma) : gamma_(std::move(gamma)) {
  if (gamma_.size() < 1) fail(ErrorCode::InvalidConfig, "noise schedule needs at least one step");
  alpha_bar_.resize(gamma_.size());
  double acc = 1.0;
  for (Eigen::Index i = 0; i < gamma_.size(); ++i) {
    if (!(gamma_[i] > 0.0 && gamma_[i] < 1.0)) fail(ErrorCode::InvalidConfig, "gamma must lie in (0, 1)");
    acc *= 1.0 - gamma_[i];
    alpha_bar_[i] = acc;
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double gamma_start, double gamma_end) {
  if (steps < 1) fail(ErrorCode::InvalidConfig, "noise schedule needs at least one step");
  if (steps == 1) return NoiseSchedule(Eigen::VectorXd::Constant(1, gamma_start));
  return NoiseSchedule(Eigen::VectorXd::LinSpaced(steps, gamma_start, gamma_end));
}

std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Noise: return "Noise";
    case PerturbationKind::Shuffle: return "Shuffle";
    case PerturbationKind::DropRepeat: return "DropRepeat";
  }
  return "Noise";
}

PerturbationKind perturbation_kind_from_string(std::string_view s) {
  if (s == "Noise") return PerturbationKind::Noise;
  if (s == "Shuffle") return PerturbationKind::Shuffle;
  if (s == "DropRepeat") return PerturbationKind::DropRepeat;
  fail(ErrorCode::ParseError, "unknown perturbation kind '" + std::string(s) + "'");
}

MotionSequence forward_noise(const MotionSequence& seq, int t, const NoiseSchedule& schedule, std::uint64_t seed) {
  if (t < 1 || t > schedule.steps())
    fail(ErrorCode::StepOutOfRange, "step " + std::to_string(t) + " outside [1, " + std::to_string(schedule.steps()) + "]");
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MotionSequence out = seq;
  // Row-major draw order: frame by frame.
  for (int f = 0; f < out.length(); ++f)
    for (int c = 0; c < out.pose_dim(); ++c) out.frames(f, c) = signal * seq.frames(f, c) + noise * normal(rng);
  return out;
}

namespace {

void check_range(const MotionSequence& seq, int lo, int hi) {
  if (lo < 0 || lo >= hi || hi > seq.length())
    fail(ErrorCode::RangeOutOfBounds, "range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                          ") invalid for " + std::to_string(seq.length()) + " frames");
}

int max_drop(int frames) { return frames / 4; }

}  // namespace

MotionSequence shuffle_segment(const MotionSequence& seq, int lo, int hi, std::uint64_t seed) {
  check_range(seq, lo, hi);
  std::vector<int> order(hi - lo);
  std::iota(order.begin(), order.end(), lo);
  Rng rng(seed);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) std::swap(order[i], order[uniform_int(rng, 0, i)]);
  MotionSequence out = seq;
  for (int i = lo; i < hi; ++i) out.frames.row(i) = seq.frames.row(order[i - lo]);
  return out;
}

MotionSequence drop_repeat(const MotionSequence& seq, int lo, int hi) {
  check_range(seq, lo, hi);
  const int f = seq.length();
  if (hi - lo > max_drop(f))
    fail(ErrorCode::SegmentTooLarge,
         "dropping " + std::to_string(hi - lo) + " frames exceeds floor(F/4) = " + std::to_string(max_drop(f)));
  const int kept = f - (hi - lo);
  auto retained = [&](int k) { return k < lo ? k : k + (hi - lo); };
  MotionSequence out = seq;
  for (int i = 0; i < f; ++i) out.frames.row(i) = seq.frames.row(retained(i % kept));
  return out;
}

void check_config(const PerturbConfig& config) {
  double sum = 0.0;
  for (double p : config.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidConfig, "kind probabilities must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidConfig, "kind probabilities must sum to 1");
  if (config.noise_t_min < 1 || config.noise_t_max < config.noise_t_min ||
      config.noise_t_max > config.schedule.steps())
    fail(ErrorCode::InvalidConfig, "noise step range must lie within the schedule");
  if (config.shuffle_min_len < 1 || config.drop_min_len < 1)
    fail(ErrorCode::InvalidConfig, "segment lengths must be positive");
  if (!(config.shuffle_max_fraction > 0.0 && config.shuffle_max_fraction <= 1.0) ||
      !(config.drop_max_fraction > 0.0 && config.drop_max_fraction <= 0.25))
    fail(ErrorCode::InvalidConfig, "segment fractions out of range");
}

namespace {

PerturbationKind draw_kind(Rng& rng, const PerturbConfig& config) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int k = 0; k < kPerturbationKinds; ++k) {
    acc += config.probabilities[k];
    if (u < acc && config.probabilities[k] > 0.0) return static_cast<PerturbationKind>(k);
  }
  for (int k = kPerturbationKinds - 1; k >= 0; --k)
    if (config.probabilities[k] > 0.0) return static_cast<PerturbationKind>(k);
  return PerturbationKind::Noise;
}

PerturbationRecord draw_params(Rng& rng, PerturbationKind kind, int frames, const PerturbConfig& config) {
  PerturbationRecord r;
  r.kind = kind;
  if (kind == PerturbationKind::DropRepeat && max_drop(frames) < 1) r.kind = PerturbationKind::Shuffle;
  switch (r.kind) {
    case PerturbationKind::Noise:
      r.t = uniform_int(rng, config.noise_t_min, config.noise_t_max);
      break;
    case PerturbationKind::Shuffle: {
      const int cap = std::max(1, static_cast<int>(std::floor(config.shuffle_max_fraction * frames)));
      const int hi_len = std::min(frames, std::max(config.shuffle_min_len, cap));
      const int lo_len = std::min(config.shuffle_min_len, hi_len);
      const int len = uniform_int(rng, lo_len, hi_len);
      r.lo = uniform_int(rng, 0, frames - len);
      r.hi = r.lo + len;
      break;
    }
    case PerturbationKind::DropRepeat: {
      const int cap = std::min(max_drop(frames), std::max(1, static_cast<int>(std::floor(config.drop_max_fraction * frames))));
      const int len = uniform_int(rng, std::min(config.drop_min_len, cap), cap);
      r.lo = uniform_int(rng, 0, frames - len);
      r.hi = r.lo + len;
      break;
    }
  }
  r.seed = rng();
  return r;
}

}  // namespace

MotionSequence apply_perturbation(const MotionSequence& seq, const PerturbationRecord& record,
                                  const NoiseSchedule& schedule) {
  switch (record.kind) {
    case PerturbationKind::Noise: return forward_noise(seq, record.t, schedule, record.seed);
    case PerturbationKind::Shuffle: return shuffle_segment(seq, record.lo, record.hi, record.seed);
    case PerturbationKind::DropRepeat: return drop_repeat(seq, record.lo, record.hi);
  }
  return seq;
}

MotionSequence replay(const MotionSequence& seq, const std::vector<PerturbationRecord>& records,
                      const NoiseSchedule& schedule) {
  MotionSequence out = seq;
  for (const auto& r : records) out = apply_perturbation(out, r, schedule);
  return out;
}

Perturbed sample_perturbation(const MotionSequence& seq, const PerturbConfig& config, std::uint64_t seed) {
  check_config(config);
  if (seq.length() < 2) fail(ErrorCode::SequenceTooShort, "perturbation needs at least 2 frames");
  Rng rng(seed);
  Perturbed out{seq, {}};
  if (!config.compose) {
    out.records.push_back(draw_params(rng, draw_kind(rng, config), seq.length(), config));
  } else {
    // Structural edits first so the noise lands on the final frame order.
    const PerturbationKind order[] = {PerturbationKind::DropRepeat, PerturbationKind::Shuffle, PerturbationKind::Noise};
    for (PerturbationKind k : order)
      if (uniform01(rng) < config.probabilities[static_cast<int>(k)])
        out.records.push_back(draw_params(rng, k, seq.length(), config));
    if (out.records.empty()) out.records.push_back(draw_params(rng, draw_kind(rng, config), seq.length(), config));
  }
  out.sequence = replay(seq, out.records, config.schedule);
  return out;
}

}  // namespace revision
