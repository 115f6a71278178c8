#pragma once

// Long motions: interpolate, extrapolate and refine a short motion, generate overlapping
// windows along it and stitch them with a linear ramp across each overlap.

#include "revision/io.hpp"
#include "revision/pipeline.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace revision {

struct WindowPlan {
  int window = 32;
  int stride = 24;
  int total = 0;    // covered length, including padding
  int padding = 0;  // frames appended to the requested length so the windows tile exactly
  std::vector<std::pair<int, int>> windows;  // half-open [start, end)

  int overlap() const { return window - stride; }
  int requested() const { return total - padding; }
};

constexpr int kDefaultWindow = 32;
constexpr int kDefaultStride = 24;

WindowPlan plan_windows(int total_len, int window = kDefaultWindow, int stride = kDefaultStride);

Json plan_to_json(const WindowPlan& plan);
WindowPlan plan_from_json(const Json& j);

/// Resample to min(2F, target), extrapolate the rest, then refine with the prior.
MotionSequence extend_motion(const MotionSequence& seq, int target_len, const PmpModel& pmp, const Conditioning& cond);

/// Weight of the later window at overlap frame j (1-based) of an overlap of length L.
inline double blend_weight(int j, int overlap) { return static_cast<double>(j) / (overlap + 1); }

VideoClip stitch(const std::vector<VideoClip>& clips, const WindowPlan& plan);

/// The same ramp applied in parameter space.
MotionSequence stitch_motion(const std::vector<MotionSequence>& windows, const WindowPlan& plan);

/// Transitions t -> t+1 that enter, cross or leave an overlap.
std::vector<int> seam_transitions(const WindowPlan& plan);

struct LongVideo {
  WindowPlan plan;
  std::vector<VideoClip> clips;
  std::vector<std::vector<MotionSequence>> realized;  // per window, per object
  VideoClip stitched;
  std::vector<MotionSequence> stitched_motion;  // per object
};

/// Generates one FullMotion-conditioned window per plan entry from slices of `motions`
/// (each at least plan.total frames long) and stitches the results.
LongVideo generate_long_video(const SceneSpec& scene, const std::vector<MotionSequence>& motions,
                              const WindowPlan& plan, const GeneratorConfig& config, const ConfidenceTriple& triple,
                              const VideoGenerator& generator, std::uint64_t seed);

}  // namespace revision
