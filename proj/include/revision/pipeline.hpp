#pragma once

// Extract, optimize, reinforce: coarse generation, motion recovery and refinement, and
// regeneration conditioned on the refined motion.

#include "revision/geometry.hpp"
#include "revision/metrics.hpp"
#include "revision/pmp.hpp"
#include "revision/simgen.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace revision {

struct ExtractionConfig {
  double pixel_sigma = 0.5;        // centroid noise, in clip pixels
  double pose_prior_weight = 1.0;  // weight of the corpus pose prior
  double prior_weight = 0.05;      // pull toward the previous frame, per squared radian
  int iterations = 25;
  double missing_fraction = 0.25;  // ExtractionFailed at or above this share of empty frames
};

/// Recovers per-object motion from a clip whose part-intensity coding and splat radius (at
/// base resolution) are known. Articulated objects are fitted to part centroids under the
/// corpus pose prior; generic objects are lifted from their masks with depth read from the
/// scene placement (the depth-estimator seam).
std::vector<MotionSequence> extract_motion(const VideoClip& clip, const SceneSpec& scene,
                                           const ExtractionConfig& config = {}, double splat_radius = 3.0);

/// Pixel-space camera matching the clip's resolution.
CameraSpec clip_camera(const SceneSpec& scene, const VideoClip& clip);

/// A user condition: Empty, or final-frame polygons in base-resolution pixels.
struct UserCondition {
  ConditionMode mode = ConditionMode::Empty;
  std::vector<PartPolygon> target;
};

/// Final-frame part polygons of the scene's ground truth: convex hulls of each part's projected
/// points, every point widened to a 2-pixel octagon so one-bone parts stay non-degenerate.
UserCondition target_from_ground_truth(const SceneSpec& scene);

struct RevisionConfig {
  GeneratorConfig coarse = GeneratorConfig::coarse();
  GeneratorConfig fine = GeneratorConfig::fine();
  ConfidenceTriple confidence_triple = kDefaultTriple;
  std::array<double, 3> training_mix{0.4, 0.3, 0.3};
  std::filesystem::path pmp_checkpoint;
  std::uint64_t seed = 42;
  ExtractionConfig extraction;
};

void check_config(const RevisionConfig& config);

struct Stage1Result {
  ConditionChannels channels;
  Generation generation;
};

Stage1Result stage1_coarse(const SceneSpec& scene, const UserCondition& user, const RevisionConfig& config,
                           const VideoGenerator& generator, std::uint64_t seed);

struct Stage2Result {
  std::vector<MotionSequence> raw;       // at the coarse clip's frame count
  std::vector<MotionSequence> raw_fine;  // resampled to the fine frame count
  std::vector<MotionStrength> strength;
  std::vector<MotionSequence> refined;
};

Stage2Result stage2_optimize(const VideoClip& clip, const SceneSpec& scene, const PmpModel& pmp,
                             const RevisionConfig& config);

struct Stage3Result {
  ConditionChannels channels;
  Generation generation;
};

/// FullMotion channels rasterized from the given motions at the fine resolution.
ConditionChannels full_motion_channels(const SceneSpec& scene, const std::vector<MotionSequence>& motions,
                                       const GeneratorConfig& config, const ConfidenceTriple& triple);

Stage3Result stage3_regenerate(const SceneSpec& scene, const std::vector<MotionSequence>& refined,
                               const RevisionConfig& config, const VideoGenerator& generator, std::uint64_t seed);

struct RunResult {
  Stage1Result stage1;
  Stage2Result stage2;
  Stage3Result stage3;
  EvalReport report;
};

/// Runs all three stages. When `out_dir` is given the intermediates are written there.
RunResult run_revision(const SceneSpec& scene, const UserCondition& user, const RevisionConfig& config,
                       const PmpModel& pmp, const VideoGenerator& generator,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

void write_run_directory(const std::filesystem::path& dir, const SceneSpec& scene, const UserCondition& user,
                         const RevisionConfig& config, const RunResult& result);

}  // namespace revision
