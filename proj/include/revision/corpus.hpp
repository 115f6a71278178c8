#pragma once

// Random synthetic scenes, the conditioning mix used for generated training data, training
// motions for the prior, and the fixed fixture scenes.

#include "revision/pipeline.hpp"
#include "revision/pmp.hpp"
#include "revision/simgen.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace revision {

struct SceneSampling {
  int min_objects = 1;
  int max_objects = 2;
  CameraSpec camera;
  int duration = 32;
  double fps = 30.0;
  std::array<double, kCategoryCount> category_weights{0.4, 0.3, 0.3};  // human, animal, object
};

/// Objects are spread across the frame at depths 2.6 to 3.2 with a random action and
/// optional side and speed words.
SceneSpec random_scene(std::uint64_t seed, const SceneSampling& sampling = {});

/// Full motion, target pose and empty conditioning drawn with the given probabilities.
ConditionMode sample_condition_mode(std::uint64_t seed, const std::array<double, 3>& mix);

struct CorpusEntry {
  SceneSpec scene;
  std::vector<MotionSequence> gt;
  ConditionMode mode = ConditionMode::Empty;
};

std::vector<CorpusEntry> generate_corpus(int count, std::uint64_t seed, const std::array<double, 3>& mix,
                                         const SceneSampling& sampling = {});

/// Writes entry_%04d/{scene.json, gt.json, condition.json, clip/} where the clip is generated
/// under the entry's conditioning mode.
void write_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& dir,
                  const RevisionConfig& config, const VideoGenerator& generator, std::uint64_t seed);

/// Ground-truth motions of random scenes, one per object, tagged with the object's words.
std::vector<TrainingMotion> training_motions(int count, std::uint64_t seed, const SceneSampling& sampling = {});

/// Perturbed training examples built from `frames`-frame random ground truth, for gradient
/// checks and held-out evaluation.
std::vector<TrainingExample> example_batch(const PmpConfig& config, int count, int frames, std::uint64_t seed,
                                           const PerturbConfig& perturb = {});

/// Per-channel mean and spread of ground-truth poses for one category.
struct PosePrior {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

PosePrior fit_pose_prior(const std::vector<MotionSequence>& motions, double floor);

/// Prior fitted once on a fixed synthetic corpus (cached).
const PosePrior& corpus_pose_prior(Category category);

/// Named single-scene fixtures; index 0 is "walker".
SceneSpec fixture_scene(int index);

}  // namespace revision
