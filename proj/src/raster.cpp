#include "revision/error.hpp"
#include "revision/geometry.hpp"

namespace revision {

std::string_view to_string(ConditionMode m) {
  switch (m) {
    case ConditionMode::FullMotion: return "FullMotion";
    case ConditionMode::TargetPose: return "TargetPose";
    case ConditionMode::Empty: return "Empty";
  }
  return "Empty";
}

ConditionMode condition_mode_from_string(std::string_view s) {
  if (s == "FullMotion") return ConditionMode::FullMotion;
  if (s == "TargetPose") return ConditionMode::TargetPose;
  if (s == "Empty") return ConditionMode::Empty;
  fail(ErrorCode::ParseError, "unknown condition mode '" + std::string(s) + "'");
}

void check_triple(const ConfidenceTriple& t) {
  for (double v : t)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidConfig, "confidence values must be finite");
  if (!(t[0] > t[1] && t[1] > t[2]))
    fail(ErrorCode::InvalidConfig, "confidence triple must be ordered full > target > empty");
}

ConditionChannels build_condition(ConditionMode mode, const ConditionPayload& payload, const ConfidenceTriple& triple) {
  check_triple(triple);
  if (payload.frames < 1 || payload.width < 1 || payload.height < 1)
    fail(ErrorCode::PayloadMismatch, "condition needs at least one frame of positive size");
  const bool has_motion = !payload.motion.empty();
  const bool has_target = !payload.target.empty();
  switch (mode) {
    case ConditionMode::FullMotion:
      if (!has_motion || has_target || static_cast<int>(payload.motion.size()) != payload.frames)
        fail(ErrorCode::PayloadMismatch, "FullMotion needs per-frame labeled points for every frame");
      if (payload.camera.width != payload.width || payload.camera.height != payload.height)
        fail(ErrorCode::PayloadMismatch, "camera size differs from the condition size");
      break;
    case ConditionMode::TargetPose:
      if (!has_target || has_motion) fail(ErrorCode::PayloadMismatch, "TargetPose needs final-frame part polygons only");
      break;
    case ConditionMode::Empty:
      if (has_target || has_motion) fail(ErrorCode::PayloadMismatch, "Empty conditioning takes no payload");
      break;
  }

  ConditionChannels c;
  c.mode = mode;
  c.triple = triple;
  c.part_mask.assign(payload.frames, LabelGrid(payload.width, payload.height, 0));
  c.confidence.assign(payload.frames, Grid<double>(payload.width, payload.height, triple[2]));
  auto mark = [&](int f, const LabelGrid& labels, double value) {
    c.part_mask[f] = labels;
    for (std::size_t i = 0; i < labels.data.size(); ++i)
      if (labels.data[i] != 0) c.confidence[f].data[i] = value;
  };
  if (mode == ConditionMode::FullMotion) {
    for (int f = 0; f < payload.frames; ++f)
      mark(f, render_part_masks(payload.motion[f], payload.camera, payload.splat_radius), triple[0]);
  } else if (mode == ConditionMode::TargetPose) {
    mark(payload.frames - 1, polygon_target_mask(payload.target, payload.width, payload.height), triple[1]);
  }
  return c;
}

}  // namespace revision
