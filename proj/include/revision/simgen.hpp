#pragma once

// Video-generator seam plus a synthetic generator: it synthesizes ground-truth motion for a
// scene, corrupts it according to how strongly it is conditioned, and renders grayscale frames.

#include "revision/geometry.hpp"
#include "revision/motion.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace revision {

/// Articulated objects: `initial_pose` holds Euler angles and `placement` the root position.
/// Generic objects: `initial_pose` holds 21 camera-frame points (x, y, z per point) and
/// `placement` their center.
struct SceneObject {
  ModelRef model;
  Eigen::VectorXd initial_pose;
  double shape_scale = 1.0;
  Eigen::Vector3d placement = Eigen::Vector3d(0.0, 0.0, 3.0);
  std::vector<std::string> tags;
};

struct SceneSpec {
  std::string name;
  std::vector<SceneObject> objects;
  CameraSpec camera;
  int duration = 32;
  double fps = 30.0;
  std::uint64_t motion_seed = 0;  // ground truth is a function of the scene alone
};

void check_scene(const SceneSpec& scene);

/// Flat disc of radius 0.12 * shape_scale facing the camera, in 21-point layout.
Eigen::VectorXd object_template(const Eigen::Vector3d& center, double shape_scale);

/// Camera-frame labeled points of one object at one pose.
LabeledPoints object_points(const SceneObject& object, const Eigen::Ref<const Eigen::VectorXd>& pose);

std::vector<std::string> action_tags();
std::string action_of(const SceneObject& object);  // "static" when untagged
int action_period(const std::vector<std::string>& tags);  // frames per cycle for cyclic actions
constexpr double kDropGravity = 0.002;

std::vector<MotionSequence> synthesize_gt_motion(const SceneSpec& scene, std::uint64_t seed);

struct CorruptionConfig {
  double noise_level = 0.15;
  double shuffle_prob = 0.5;
  double drop_prob = 0.5;
};

/// Piecewise-linear map from normalized confidence (0 = empty, 1 = full) to attenuation.
struct FidelityMap {
  std::vector<std::pair<double, double>> knots{{0.0, 1.0}, {0.5, 0.4}, {1.0, 0.02}};

  double operator()(double normalized_confidence) const;
};

void check_fidelity(const FidelityMap& map);

struct GeneratorConfig {
  double resolution_scale = 1.0;
  double frame_fraction = 1.0;
  int steps = 50;
  CorruptionConfig corruption;
  FidelityMap fidelity;
  double splat_radius = 3.0;  // at base resolution

  static GeneratorConfig coarse();
  static GeneratorConfig fine();

  int frame_count(int duration) const;
};

void check_config(const GeneratorConfig& config);

/// Active confidence of a mode mapped onto [0, 1] relative to the triple.
double normalized_confidence(ConditionMode mode, const ConfidenceTriple& triple);

double attenuation(const GeneratorConfig& config, ConditionMode mode, const ConfidenceTriple& triple);

MotionSequence corrupt_motion(const MotionSequence& gt, ConditionMode mode, const ConfidenceTriple& triple,
                              const GeneratorConfig& config, std::uint64_t seed);

struct VideoClip {
  std::vector<GrayImage> frames;
  double fps = 30.0;
  int width = 0;
  int height = 0;

  int length() const { return static_cast<int>(frames.size()); }
  bool operator==(const VideoClip&) const = default;
};

std::uint8_t part_intensity(int label, int part_count);

/// Per-frame labeled points for every object (frames x objects).
std::vector<std::vector<LabeledPoints>> scene_points(const SceneSpec& scene, const std::vector<MotionSequence>& motions);

VideoClip render_video(const SceneSpec& scene, const std::vector<MotionSequence>& motions, const GeneratorConfig& config);

/// What the generator is conditioned on. `guide` carries the motions a FullMotion condition
/// was rasterized from.
struct VideoCondition {
  ConditionChannels channels;
  std::vector<MotionSequence> guide;
};

struct Generation {
  VideoClip clip;
  std::vector<MotionSequence> realized;
};

class VideoGenerator {
 public:
  virtual ~VideoGenerator() = default;
  virtual Generation generate(const SceneSpec& scene, const VideoCondition& condition, const GeneratorConfig& config,
                              std::uint64_t seed) const = 0;
};

class SyntheticGenerator final : public VideoGenerator {
 public:
  Generation generate(const SceneSpec& scene, const VideoCondition& condition, const GeneratorConfig& config,
                      std::uint64_t seed) const override;
};

/// Ground truth resampled to the generator's frame count.
std::vector<MotionSequence> gt_at_frames(const SceneSpec& scene, int frames);

}  // namespace revision
