#include "revision/simgen.hpp"

#include "revision/error.hpp"
#include "revision/perturb.hpp"
#include "revision/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revision {

namespace {

const std::vector<std::string>& descriptor_tags() {
  static const std::vector<std::string> tags{"human", "animal", "object", "left", "right", "fast", "slow"};
  return tags;
}

bool has_tag(const std::vector<std::string>& tags, std::string_view t) {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::vector<std::string> action_tags() { return {"static", "walk", "reach", "wave", "drop", "slide"}; }

std::string action_of(const SceneObject& object) {
  std::string action;
  const auto actions = action_tags();
  for (const auto& t : object.tags) {
    if (has_tag(actions, t)) {
      if (!action.empty() && action != t) fail(ErrorCode::UnknownActionTag, "object has two action tags");
      action = t;
    } else if (!has_tag(descriptor_tags(), t)) {
      fail(ErrorCode::UnknownActionTag, "unknown tag '" + t + "'");
    }
  }
  if (action.empty()) action = "static";
  const bool generic = object.model && !object.model->articulated();
  const bool generic_action = action == "drop" || action == "slide";
  if (action != "static" && generic != generic_action)
    fail(ErrorCode::UnknownActionTag, "action '" + action + "' does not apply to " +
                                          std::string(object.model ? to_string(object.model->category) : "?"));
  return action;
}

int action_period(const std::vector<std::string>& tags) {
  const int base = has_tag(tags, "wave") ? 12 : 16;
  if (has_tag(tags, "fast")) return base * 3 / 4;
  if (has_tag(tags, "slow")) return base * 5 / 4;
  return base;
}

void check_scene(const SceneSpec& scene) {
  if (scene.objects.empty()) fail(ErrorCode::InvalidConfig, "scene needs at least one object");
  if (scene.duration < 2) fail(ErrorCode::SequenceTooShort, "scene duration must be at least 2 frames");
  if (!(scene.fps > 0.0)) fail(ErrorCode::InvalidConfig, "scene fps must be positive");
  check_camera(scene.camera);
  for (const auto& o : scene.objects) {
    if (!o.model) fail(ErrorCode::InvalidConfig, "scene object has no model");
    if (o.initial_pose.size() != o.model->pose_dim)
      fail(ErrorCode::DimensionMismatch, "initial pose does not match the model's pose_dim");
    if (!o.initial_pose.allFinite()) fail(ErrorCode::NonFiniteEntry, "initial pose is not finite");
    if (!(o.shape_scale > 0.0)) fail(ErrorCode::InvalidConfig, "shape_scale must be positive");
    if (!(o.placement.z() > 0.0)) fail(ErrorCode::NonPositiveDepth, "object placed behind the camera");
    action_of(o);
  }
}

Eigen::VectorXd object_template(const Eigen::Vector3d& center, double shape_scale) {
  const double r = 0.12 * shape_scale;
  Eigen::Matrix<double, kObjectPoints, 3> p;
  // Counterclockwise on screen (y down) starting at the top: top, left, bottom, right.
  for (int k = 0; k < kContourVertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / kContourVertices;
    p.row(k) << center.x() - r * std::sin(t), center.y() - r * std::cos(t), center.z();
  }
  const double corners[4][2] = {{-r, -r}, {r, -r}, {r, r}, {-r, r}};
  for (int i = 0; i < 4; ++i) p.row(kContourVertices + i) << center.x() + corners[i][0], center.y() + corners[i][1], center.z();
  p.row(kObjectPoints - 1) = center.transpose();
  Eigen::VectorXd out(3 * kObjectPoints);
  for (int i = 0; i < kObjectPoints; ++i) out.segment<3>(3 * i) = p.row(i).transpose();
  return out;
}

LabeledPoints object_points(const SceneObject& object, const Eigen::Ref<const Eigen::VectorXd>& pose) {
  const ParametricModelSpec& spec = *object.model;
  if (spec.articulated()) return forward_kinematics(spec, pose, object.shape_scale, object.placement);
  if (pose.size() != 3 * kObjectPoints) fail(ErrorCode::DimensionMismatch, "generic pose must hold 21 points");
  auto pt = [&](int i) -> Eigen::Vector3d { return pose.segment<3>(3 * i); };
  const int n = kObjectPoints + 2 * kContourVertices * kBoneSamples;
  LabeledPoints out;
  out.positions.resize(3, n);
  out.labels.assign(n, 1);
  int k = 0;
  for (int i = 0; i < kObjectPoints; ++i) out.positions.col(k++) = pt(i);
  const Eigen::Vector3d center = pt(kObjectPoints - 1);
  for (int i = 0; i < kContourVertices; ++i) {
    const Eigen::Vector3d a = pt(i);
    const Eigen::Vector3d b = pt((i + 1) % kContourVertices);
    for (int s = 1; s <= kBoneSamples; ++s) {
      const double t = static_cast<double>(s) / (kBoneSamples + 1);
      out.positions.col(k++) = (1.0 - t) * a + t * b;
      out.positions.col(k++) = (1.0 - t) * center + t * a;
    }
  }
  return out;
}

std::vector<MotionSequence> synthesize_gt_motion(const SceneSpec& scene, std::uint64_t seed) {
  check_scene(scene);
  std::vector<MotionSequence> out;
  const int n = scene.duration;
  for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const SceneObject& o = scene.objects[oi];
    const std::string action = action_of(o);
    Rng rng(derive_seed(seed, oi));
    const double jitter = 2.0 * uniform01(rng) - 1.0;
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    const double omega = 2.0 * std::numbers::pi / action_period(o.tags);
    const double amp = 1.0 + 0.2 * jitter;
    const bool left = has_tag(o.tags, "left");
    // Oscillation that starts at zero so frame 0 is the initial pose.
    auto osc = [&](int k, double a, double shift = 0.0) {
      return a * amp * (std::sin(omega * k + phase + shift) - std::sin(phase + shift));
    };

    MotionSequence seq{o.model, scene.fps, Eigen::MatrixXd(n, o.model->pose_dim)};
    const Category cat = o.model->category;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd pose = o.initial_pose;
      auto rz = [&](int joint) -> double& { return pose[3 * joint + 2]; };
      const double ramp = smoothstep(static_cast<double>(k) / std::max(1, n - 1));
      if (action == "walk" && cat == Category::Human) {
        rz(1) += osc(k, 0.35);
        rz(2) += osc(k, 0.35, std::numbers::pi);
        rz(4) += osc(k, 0.2, -0.5);
        rz(5) += osc(k, 0.2, std::numbers::pi - 0.5);
        rz(16) += osc(k, 0.25, std::numbers::pi);
        rz(17) += osc(k, 0.25);
      } else if (action == "walk") {
        rz(8) += osc(k, 0.4);
        rz(14) += osc(k, 0.4);
        rz(10) += osc(k, 0.4, std::numbers::pi);
        rz(12) += osc(k, 0.4, std::numbers::pi);
        rz(6) += osc(k, 0.15, 0.5 * std::numbers::pi);
      } else if (action == "wave" && cat == Category::Human) {
        const double s = left ? -1.0 : 1.0;
        const double raise = smoothstep(k / 6.0);
        rz(left ? 16 : 17) += s * 1.0 * amp * raise;
        rz(left ? 18 : 19) += s * raise * osc(k, 0.6);
      } else if (action == "wave") {
        rz(6) += osc(k, 0.5);
        rz(7) += osc(k, 0.4, 0.5 * std::numbers::pi);
      } else if (action == "reach" && cat == Category::Human) {
        const double s = left ? -1.0 : 1.0;
        rz(left ? 16 : 17) += s * (0.7 + 0.15 * jitter) * ramp;
        rz(left ? 18 : 19) += s * (0.5 + 0.1 * jitter) * ramp;
        rz(3) += s * 0.12 * ramp;
      } else if (action == "reach") {
        rz(3) += (0.5 + 0.1 * jitter) * ramp;
        rz(4) += 0.3 * ramp;
      } else if (action == "drop") {
        const double g = kDropGravity * amp;
        for (int i = 0; i < kObjectPoints; ++i) pose[3 * i + 1] += 0.5 * g * k * k;
      } else if (action == "slide") {
        const double v = (left ? -1.0 : 1.0) * 0.01 * amp;
        for (int i = 0; i < kObjectPoints; ++i) pose[3 * i] += v * k;
      }
      seq.frames.row(k) = pose.transpose();
    }
    out.push_back(std::move(seq));
  }
  return out;
}

double FidelityMap::operator()(double c) const {
  if (knots.empty()) return 1.0;
  if (c <= knots.front().first) return knots.front().second;
  if (c >= knots.back().first) return knots.back().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (c <= knots[i].first) {
      const auto [x0, y0] = knots[i - 1];
      const auto [x1, y1] = knots[i];
      return y0 + (c - x0) / (x1 - x0) * (y1 - y0);
    }
  }
  return knots.back().second;
}

void check_fidelity(const FidelityMap& map) {
  if (map.knots.empty()) fail(ErrorCode::InvalidConfig, "fidelity map needs at least one knot");
  for (std::size_t i = 0; i < map.knots.size(); ++i) {
    const auto [x, y] = map.knots[i];
    if (!(y >= 0.0 && y <= 1.0)) fail(ErrorCode::InvalidConfig, "attenuation must lie in [0, 1]");
    if (i > 0 && !(x > map.knots[i - 1].first))
      fail(ErrorCode::InvalidConfig, "fidelity knots must be strictly increasing");
    if (i > 0 && y > map.knots[i - 1].second)
      fail(ErrorCode::InvalidConfig, "attenuation must not increase with confidence");
  }
}

GeneratorConfig GeneratorConfig::coarse() {
  GeneratorConfig c;
  c.resolution_scale = 0.25;
  c.frame_fraction = 0.5;
  c.steps = 32;
  return c;
}

GeneratorConfig GeneratorConfig::fine() { return GeneratorConfig{}; }

int GeneratorConfig::frame_count(int duration) const {
  return std::max(1, static_cast<int>(std::ceil(duration * frame_fraction - 1e-9)));
}

void check_config(const GeneratorConfig& c) {
  if (!(c.resolution_scale > 0.0 && c.resolution_scale <= 1.0))
    fail(ErrorCode::InvalidConfig, "resolution_scale must lie in (0, 1]");
  if (!(c.frame_fraction > 0.0 && c.frame_fraction <= 1.0))
    fail(ErrorCode::InvalidConfig, "frame_fraction must lie in (0, 1]");
  if (c.steps < 1) fail(ErrorCode::InvalidConfig, "steps must be positive");
  if (!(c.corruption.noise_level >= 0.0) || !(c.corruption.shuffle_prob >= 0.0 && c.corruption.shuffle_prob <= 1.0) ||
      !(c.corruption.drop_prob >= 0.0 && c.corruption.drop_prob <= 1.0))
    fail(ErrorCode::InvalidConfig, "corruption parameters out of range");
  if (!(c.splat_radius > 0.0)) fail(ErrorCode::InvalidConfig, "splat radius must be positive");
  check_fidelity(c.fidelity);
}

double normalized_confidence(ConditionMode mode, const ConfidenceTriple& triple) {
  check_triple(triple);
  const double v = triple[static_cast<int>(mode)];
  return (v - triple[2]) / (triple[0] - triple[2]);
}

double attenuation(const GeneratorConfig& config, ConditionMode mode, const ConfidenceTriple& triple) {
  return config.fidelity(normalized_confidence(mode, triple));
}

MotionSequence corrupt_motion(const MotionSequence& gt, ConditionMode mode, const ConfidenceTriple& triple,
                              const GeneratorConfig& config, std::uint64_t seed) {
  check_config(config);
  const double a = attenuation(config, mode, triple);
  if (a == 0.0) return gt;
  const int f = gt.length();
  const CorruptionConfig& cc = config.corruption;
  Rng rng(seed);
  MotionSequence p = gt;
  if (f >= 2 && uniform01(rng) < cc.shuffle_prob) {
    const int len = uniform_int(rng, 2, std::max(2, f / 4));
    const int lo = uniform_int(rng, 0, f - len);
    p = shuffle_segment(p, lo, lo + len, rng());
  }
  if (f >= 4 && uniform01(rng) < cc.drop_prob) {
    const int len = uniform_int(rng, 1, f / 4);
    const int lo = uniform_int(rng, 0, f - len);
    p = drop_repeat(p, lo, lo + len);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < f; ++r)
    for (int c = 0; c < p.pose_dim(); ++c) p.frames(r, c) += cc.noise_level * normal(rng);

  MotionSequence out = gt;
  out.frames = gt.frames + a * (p.frames - gt.frames);
  if (mode == ConditionMode::TargetPose) {
    // The final frame is pinned close to the target; never further off than the unpinned value.
    Eigen::RowVectorXd u(gt.pose_dim());
    for (int c = 0; c < u.size(); ++c) u[c] = 2.0 * uniform01(rng) - 1.0;
    Eigen::RowVectorXd e = (cc.noise_level / 10.0) * a * u;
    const double cap = a * (p.frames.row(f - 1) - gt.frames.row(f - 1)).norm();
    if (e.norm() > cap) e *= cap / e.norm();
    out.frames.row(f - 1) = gt.frames.row(f - 1) + e;
  }
  return out;
}

std::uint8_t part_intensity(int label, int part_count) {
  if (label <= 0) return 0;
  return static_cast<std::uint8_t>(std::lround(64.0 + 191.0 * label / part_count));
}

std::vector<std::vector<LabeledPoints>> scene_points(const SceneSpec& scene, const std::vector<MotionSequence>& motions) {
  if (motions.size() != scene.objects.size()) fail(ErrorCode::DimensionMismatch, "one motion per scene object expected");
  const int n = motions.empty() ? 0 : motions.front().length();
  std::vector<std::vector<LabeledPoints>> out(n);
  for (std::size_t o = 0; o < motions.size(); ++o) {
    if (motions[o].length() != n) fail(ErrorCode::DimensionMismatch, "object motions differ in length");
    if (motions[o].pose_dim() != scene.objects[o].model->pose_dim)
      fail(ErrorCode::DimensionMismatch, "motion pose_dim does not match its object");
  }
  for (int f = 0; f < n; ++f)
    for (std::size_t o = 0; o < motions.size(); ++o)
      out[f].push_back(object_points(scene.objects[o], motions[o].frames.row(f).transpose()));
  return out;
}

VideoClip render_video(const SceneSpec& scene, const std::vector<MotionSequence>& motions, const GeneratorConfig& config) {
  check_config(config);
  const CameraSpec cam = scene.camera.scaled(config.resolution_scale);
  const double radius = config.splat_radius * config.resolution_scale;
  VideoClip clip{{}, scene.fps, cam.width, cam.height};
  if (scene.objects.empty()) {
    clip.frames.assign(config.frame_count(scene.duration), GrayImage(cam.width, cam.height, 0));
    return clip;
  }
  const int expected = config.frame_count(scene.duration);
  for (const auto& m : motions)
    if (m.length() != expected)
      fail(ErrorCode::DimensionMismatch, "motion has " + std::to_string(m.length()) + " frames, generator renders " +
                                             std::to_string(expected));
  for (const auto& frame : scene_points(scene, motions)) {
    const SplatBuffer b = splat(frame, cam, radius);
    GrayImage img(cam.width, cam.height, 0);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      const int o = b.object.data[i];
      if (o >= 0) img.data[i] = part_intensity(b.label.data[i], scene.objects[o].model->part_count);
    }
    clip.frames.push_back(std::move(img));
  }
  return clip;
}

std::vector<MotionSequence> gt_at_frames(const SceneSpec& scene, int frames) {
  auto gt = synthesize_gt_motion(scene, scene.motion_seed);
  if (frames != scene.duration)
    for (auto& m : gt) m = resample(m, frames);
  return gt;
}

Generation SyntheticGenerator::generate(const SceneSpec& scene, const VideoCondition& condition,
                                        const GeneratorConfig& config, std::uint64_t seed) const {
  check_scene(scene);
  check_config(config);
  const int n = config.frame_count(scene.duration);
  const ConditionChannels& ch = condition.channels;
  if (ch.frames() != n)
    fail(ErrorCode::PayloadMismatch,
         "condition has " + std::to_string(ch.frames()) + " frames, generator renders " + std::to_string(n));
  std::vector<MotionSequence> anchor;
  if (ch.mode == ConditionMode::FullMotion) {
    if (condition.guide.size() != scene.objects.size())
      fail(ErrorCode::PayloadMismatch, "FullMotion condition needs one guide motion per object");
    for (std::size_t o = 0; o < condition.guide.size(); ++o)
      if (condition.guide[o].length() != n || condition.guide[o].pose_dim() != scene.objects[o].model->pose_dim)
        fail(ErrorCode::DimensionMismatch, "guide motion shape does not match the generator output");
    anchor = condition.guide;
  } else {
    anchor = gt_at_frames(scene, n);
  }
  Generation g;
  for (std::size_t o = 0; o < anchor.size(); ++o)
    g.realized.push_back(corrupt_motion(anchor[o], ch.mode, ch.triple, config, derive_seed(seed, o)));
  g.clip = render_video(scene, g.realized, config);
  return g;
}

}  // namespace revision
