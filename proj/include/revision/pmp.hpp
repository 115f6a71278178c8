#pragma once

// Parameterized motion prior: a pre-norm transformer that maps a perturbed motion sequence
// plus conditioning (text tokens, motion strength) to a corrected sequence. Each sequence is
// centered over time and scaled to unit RMS before the network, which also sees the removed
// means; the correction is scaled back and added to the input.

#include "revision/motion.hpp"
#include "revision/perturb.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace revision {

std::vector<std::string> default_vocab();

struct PmpConfig {
  int layers = 4;
  int model_dim = 128;
  int heads = 4;
  int ffn_dim = 256;
  int max_frames = 128;
  int max_pose_dim = 165;
  std::vector<std::string> vocab = default_vocab();
  int refine_iterations = 1;

  int head_dim() const { return model_dim / heads; }
  // Normalized poses, per-channel means, category one-hot, log scale.
  int input_dim() const { return 2 * max_pose_dim + kCategoryCount + 1; }
};

void check_config(const PmpConfig& config);

constexpr int kMaxConditioningTokens = 32;
constexpr int kStrengthFeatures = 16;

/// Conditioning memory for cross-attention. Tokens form an unordered bag.
struct Conditioning {
  std::vector<int> tokens;
  double strength = 0.0;
  Category category = Category::Human;
};

/// Maps tags to vocabulary indices; tags missing from the vocabulary are skipped.
Conditioning make_conditioning(const PmpConfig& config, const std::vector<std::string>& tags, double strength,
                               Category category);

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(rows) * cols; }
};

/// Index of every tensor in declaration order. Matrices multiply row activations from the
/// right (activation[n x in] * W[in x out]).
struct PmpLayout {
  struct Attention {
    int wq, wk, wv, wo, bq, bk, bv, bo;
  };
  struct Layer {
    int ln1_gamma, ln1_beta;
    Attention self;
    int ln2_gamma, ln2_beta;
    Attention cross;
    int ln3_gamma, ln3_beta;
    int ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  };
  int input_w, input_b, positions, tokens, strength_w, strength_b;
  std::vector<Layer> layers;
  int output_w, output_b;
  std::vector<TensorInfo> tensors;
  Eigen::Index parameter_count = 0;
};

PmpLayout make_layout(const PmpConfig& config);

class PmpModel {
 public:
  explicit PmpModel(PmpConfig config);  // all-zero parameters

  const PmpConfig& config() const { return config_; }
  const PmpLayout& layout() const { return layout_; }
  const std::vector<TensorInfo>& tensors() const { return layout_.tensors; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> tensor(int index);
  Eigen::Map<const Eigen::MatrixXd> tensor(int index) const;

 private:
  PmpConfig config_;
  PmpLayout layout_;
  Eigen::VectorXd params_;
};

PmpModel pmp_init(const PmpConfig& config, std::uint64_t seed);

/// Raw network output for one sequence: F x max_pose_dim (padded channels included).
Eigen::MatrixXd pmp_forward(const PmpModel& model, const Eigen::MatrixXd& frames, const Conditioning& cond);

MotionSequence pmp_refine(const PmpModel& model, const MotionSequence& seq, const Conditioning& cond);

struct TrainingExample {
  Eigen::MatrixXd input;   // F x pose_dim
  Eigen::MatrixXd target;  // F x pose_dim
  Conditioning cond;
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as PmpModel::parameters()
};

/// Mean squared error over every un-padded entry of the batch, each example measured in units
/// of its own input error (RMS of input minus target, floored at 20% of the input scale), with
/// its exact gradient.
LossAndGradient pmp_loss(const PmpModel& model, std::span<const TrainingExample> batch);

double pmp_loss_value(const PmpModel& model, std::span<const TrainingExample> batch);

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  std::string worst_tensor;
};

GradCheckResult grad_check(const PmpModel& model, std::span<const TrainingExample> batch, double epsilon,
                           int samples = 200, std::uint64_t seed = 0);

struct TrainingMotion {
  MotionSequence motion;
  std::vector<std::string> tags;
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double clip_norm = 1.0;  // 0 disables global-norm clipping
  // Random crop length range; 0 keeps whole sequences.
  int crop_min = 0;
  int crop_max = 0;
  PerturbConfig perturb;
};

struct TrainResult {
  PmpModel model;
  std::vector<double> loss;  // one entry per step
};

TrainResult pmp_train(PmpModel model, std::span<const TrainingMotion> corpus, const TrainConfig& config,
                      std::uint64_t seed);

/// Moving average with the given window, evaluated at `step` (1-based, window ending there).
double smoothed_loss(const std::vector<double>& loss, int step, int window = 50);

void save_checkpoint(const PmpModel& model, const std::filesystem::path& path);
PmpModel load_checkpoint(const std::filesystem::path& path);

void write_training_log(const std::vector<double>& loss, const std::filesystem::path& path);

}  // namespace revision
