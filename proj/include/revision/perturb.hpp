#pragma once

#include "revision/motion.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace revision {

/// Cumulative forward-noising schedule. Steps are 1-based: alpha_bar(t) = prod_{i<=t} (1 - gamma_i).
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(Eigen::VectorXd gamma);

  static NoiseSchedule linear(int steps = 1000, double gamma_start = 1e-4, double gamma_end = 0.02);

  int steps() const { return static_cast<int>(gamma_.size()); }
  double gamma(int t) const { return gamma_[t - 1]; }
  double alpha_bar(int t) const { return alpha_bar_[t - 1]; }
  const Eigen::VectorXd& gammas() const { return gamma_; }
  const Eigen::VectorXd& alpha_bars() const { return alpha_bar_; }

 private:
  Eigen::VectorXd gamma_;
  Eigen::VectorXd alpha_bar_;
};

enum class PerturbationKind { Noise, Shuffle, DropRepeat };
constexpr int kPerturbationKinds = 3;

std::string_view to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(std::string_view s);

/// Everything needed to replay one perturbation. `t` is used by Noise; `lo`/`hi` by the
/// other two kinds.
struct PerturbationRecord {
  PerturbationKind kind = PerturbationKind::Noise;
  int t = 0;
  int lo = 0;
  int hi = 0;
  std::uint64_t seed = 0;

  bool operator==(const PerturbationRecord&) const = default;
};

MotionSequence forward_noise(const MotionSequence& seq, int t, const NoiseSchedule& schedule, std::uint64_t seed);

MotionSequence shuffle_segment(const MotionSequence& seq, int lo, int hi, std::uint64_t seed);

/// Removes frames [lo, hi) and tiles the retained frames from their start until the
/// original length is restored.
MotionSequence drop_repeat(const MotionSequence& seq, int lo, int hi);

struct PerturbConfig {
  std::array<double, kPerturbationKinds> probabilities{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  NoiseSchedule schedule = NoiseSchedule::linear();
  int noise_t_min = 1;
  int noise_t_max = 100;
  int shuffle_min_len = 2;
  double shuffle_max_fraction = 0.25;
  int drop_min_len = 1;
  double drop_max_fraction = 0.25;  // capped at floor(F/4) regardless
  // When set, each kind fires independently with its probability (at least one fires).
  bool compose = false;
};

void check_config(const PerturbConfig& config);

struct Perturbed {
  MotionSequence sequence;
  std::vector<PerturbationRecord> records;  // one entry unless config.compose
};

Perturbed sample_perturbation(const MotionSequence& seq, const PerturbConfig& config, std::uint64_t seed);

MotionSequence apply_perturbation(const MotionSequence& seq, const PerturbationRecord& record,
                                  const NoiseSchedule& schedule);

MotionSequence replay(const MotionSequence& seq, const std::vector<PerturbationRecord>& records,
                      const NoiseSchedule& schedule);

}  // namespace revision
