#include "revision/pipeline.hpp"

#include "revision/error.hpp"
#include "revision/io.hpp"
#include "revision/rng.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace revision {

constexpr double kTargetPointRadius = 2.0;

void check_config(const RevisionConfig& c) {
  check_config(c.coarse);
  check_config(c.fine);
  check_triple(c.confidence_triple);
  double sum = 0.0;
  for (double p : c.training_mix) {
    if (!(p >= 0.0)) fail(ErrorCode::InvalidConfig, "training_mix entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidConfig, "training_mix must sum to 1");
  if (!(c.extraction.pixel_sigma > 0.0) || !(c.extraction.pose_prior_weight >= 0.0) ||
      !(c.extraction.prior_weight >= 0.0) || c.extraction.iterations < 1 || !(c.extraction.missing_fraction > 0.0) ||
      c.extraction.missing_fraction > 1.0)
    fail(ErrorCode::InvalidConfig, "invalid extraction settings");
}

UserCondition target_from_ground_truth(const SceneSpec& scene) {
  const auto gt = synthesize_gt_motion(scene, scene.motion_seed);
  UserCondition u;
  u.mode = ConditionMode::TargetPose;
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const LabeledPoints pts = object_points(scene.objects[o], gt[o].frames.bottomRows(1).transpose());
    std::map<int, std::vector<Eigen::Vector2d>> by_label;
    for (int i = 0; i < pts.size(); ++i) {
      const Eigen::Vector2d c = project_point(pts.positions.col(i), scene.camera);
      for (int k = 0; k < 8; ++k) {
        const double a = k * std::numbers::pi / 4.0;
        by_label[pts.labels[i]].push_back(c + kTargetPointRadius * Eigen::Vector2d(std::cos(a), std::sin(a)));
      }
    }
    for (const auto& [label, uv] : by_label) {
      PartPolygon p;
      p.label = label;
      p.points.resize(2, static_cast<Eigen::Index>(uv.size()));
      for (std::size_t i = 0; i < uv.size(); ++i) p.points.col(static_cast<Eigen::Index>(i)) = uv[i];
      u.target.push_back(std::move(p));
    }
  }
  return u;
}

namespace {

// Re-raises a module error with the failing stage named in front.
template <typename F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  }
}

}  // namespace

Stage1Result stage1_coarse(const SceneSpec& scene, const UserCondition& user, const RevisionConfig& config,
                           const VideoGenerator& generator, std::uint64_t seed) {
  if (user.mode == ConditionMode::FullMotion)
    fail(ErrorCode::InvalidConfig, "a user condition is TargetPose or Empty");
  check_scene(scene);
  const double s = config.coarse.resolution_scale;
  const CameraSpec cam = scene.camera.scaled(s);
  ConditionPayload payload;
  payload.frames = config.coarse.frame_count(scene.duration);
  payload.width = cam.width;
  payload.height = cam.height;
  payload.camera = cam;
  payload.splat_radius = config.coarse.splat_radius * s;
  if (user.mode == ConditionMode::TargetPose) {
    payload.target = user.target;
    for (auto& p : payload.target) p.points *= s;
  }
  Stage1Result r;
  r.channels = build_condition(user.mode, payload, config.confidence_triple);
  r.generation = generator.generate(scene, VideoCondition{r.channels, {}}, config.coarse, seed);
  return r;
}

Stage2Result stage2_optimize(const VideoClip& clip, const SceneSpec& scene, const PmpModel& pmp,
                             const RevisionConfig& config) {
  Stage2Result r;
  r.raw = extract_motion(clip, scene, config.extraction, config.coarse.splat_radius);
  const int fine_frames = config.fine.frame_count(scene.duration);
  for (std::size_t o = 0; o < r.raw.size(); ++o) {
    const SceneObject& so = scene.objects[o];
    MotionSequence m = r.raw[o].length() == fine_frames ? r.raw[o] : resample(r.raw[o], fine_frames);
    m.fps = scene.fps;
    const MotionStrength st = motion_strength(m);
    const Conditioning cond = make_conditioning(pmp.config(), so.tags, st.mean, so.model->category);
    r.refined.push_back(pmp_refine(pmp, m, cond));
    r.raw_fine.push_back(std::move(m));
    r.strength.push_back(st);
  }
  return r;
}

ConditionChannels full_motion_channels(const SceneSpec& scene, const std::vector<MotionSequence>& motions,
                                       const GeneratorConfig& config, const ConfidenceTriple& triple) {
  const double s = config.resolution_scale;
  const CameraSpec cam = scene.camera.scaled(s);
  ConditionPayload payload;
  payload.frames = motions.empty() ? config.frame_count(scene.duration) : motions.front().length();
  payload.width = cam.width;
  payload.height = cam.height;
  payload.camera = cam;
  payload.splat_radius = config.splat_radius * s;
  payload.motion = scene_points(scene, motions);
  return build_condition(ConditionMode::FullMotion, payload, triple);
}

Stage3Result stage3_regenerate(const SceneSpec& scene, const std::vector<MotionSequence>& refined,
                               const RevisionConfig& config, const VideoGenerator& generator, std::uint64_t seed) {
  const int n = config.fine.frame_count(scene.duration);
  if (refined.size() != scene.objects.size())
    fail(ErrorCode::PayloadMismatch, "one refined motion per scene object is required");
  for (const auto& m : refined)
    if (m.length() != n)
      fail(ErrorCode::DimensionMismatch,
           "refined motion has " + std::to_string(m.length()) + " frames, the fine stage renders " + std::to_string(n));
  Stage3Result r;
  r.channels = full_motion_channels(scene, refined, config.fine, config.confidence_triple);
  r.generation = generator.generate(scene, VideoCondition{r.channels, refined}, config.fine, seed);
  return r;
}

RunResult run_revision(const SceneSpec& scene, const UserCondition& user, const RevisionConfig& config,
                       const PmpModel& pmp, const VideoGenerator& generator,
                       const std::optional<std::filesystem::path>& out_dir) {
  check_config(config);
  check_scene(scene);
  RunResult r;
  r.stage1 = staged("stage1", [&] {
    return stage1_coarse(scene, user, config, generator, derive_seed(config.seed, "stage1"));
  });
  r.stage2 = staged("stage2", [&] { return stage2_optimize(r.stage1.generation.clip, scene, pmp, config); });
  r.stage3 = staged("stage3", [&] {
    return stage3_regenerate(scene, r.stage2.refined, config, generator, derive_seed(config.seed, "stage3"));
  });

  r.report = staged("eval", [&] {
    const int fine_frames = config.fine.frame_count(scene.duration);
    const auto gt_fine = gt_at_frames(scene, fine_frames);
    const auto gt_coarse = gt_at_frames(scene, config.coarse.frame_count(scene.duration));
    const VideoClip reference = render_video(scene, gt_fine, config.fine);
    const VideoClip& final_clip = r.stage3.generation.clip;
    EvalReport rep = eval_metrics(final_clip, reference, r.stage3.generation.realized, gt_fine,
                                  foreground_masks(final_clip), foreground_masks(reference));
    rep.coarse_traj_mse = traj_mse(r.stage1.generation.realized, gt_coarse);
    rep.raw_traj_mse = traj_mse(r.stage2.raw_fine, gt_fine);
    rep.refined_traj_mse = traj_mse(r.stage2.refined, gt_fine);
    return rep;
  });

  if (out_dir) write_run_directory(*out_dir, scene, user, config, r);
  return r;
}

void write_run_directory(const std::filesystem::path& dir, const SceneSpec& scene, const UserCondition& user,
                         const RevisionConfig& config, const RunResult& result) {
  std::filesystem::create_directories(dir);
  write_json(dir / "run.json", {{"config", revision_config_to_json(config)},
                                {"seed", config.seed},
                                {"scene", scene_to_json(scene)},
                                {"user_condition", user_condition_to_json(user)}});
  save_clip(result.stage1.generation.clip, dir / "coarse");
  save_motions(result.stage2.raw, dir / "stage2" / "raw.json");
  save_motions(result.stage2.refined, dir / "stage2" / "refined.json");
  Json strength = Json::array();
  for (const auto& s : result.stage2.strength)
    strength.push_back({{"mean", s.mean},
                        {"per_transition", std::vector<double>(s.per_transition.data(),
                                                               s.per_transition.data() + s.per_transition.size())}});
  write_json(dir / "stage2" / "strength.json", {{"objects", strength}});
  save_channels(result.stage3.channels, dir / "channels");
  save_clip(result.stage3.generation.clip, dir / "final");
  save_motions(result.stage3.generation.realized, dir / "final" / "motion.json");
  write_json(dir / "report.json", report_to_json(result.report));
}

}  // namespace revision
