#include "revision/corpus.hpp"
#include "revision/error.hpp"
#include "revision/simgen.hpp"

#include <doctest.h>

using namespace revision;

namespace {

double mse(const MotionSequence& a, const MotionSequence& b) { return (a.frames - b.frames).array().square().mean(); }

VideoCondition empty_condition(const SceneSpec& scene, const GeneratorConfig& g, const ConfidenceTriple& t) {
  const CameraSpec cam = scene.camera.scaled(g.resolution_scale);
  ConditionPayload p;
  p.frames = g.frame_count(scene.duration);
  p.width = cam.width;
  p.height = cam.height;
  return {build_condition(ConditionMode::Empty, p, t), {}};
}

}  // namespace

TEST_CASE("generator config") {
  const auto c = GeneratorConfig::coarse();
  CHECK(c.resolution_scale == 0.25);
  CHECK(c.frame_count(32) == 16);
  CHECK(c.frame_count(33) == 17);
  CHECK(GeneratorConfig::fine().frame_count(32) == 32);
  GeneratorConfig bad;
  bad.frame_fraction = 0.0;
  CHECK_THROWS_AS(check_config(bad), Error);
  bad = GeneratorConfig{};
  bad.fidelity.knots = {{0.0, 0.2}, {1.0, 0.5}};
  CHECK_THROWS_AS(check_config(bad), Error);
}

TEST_CASE("confidence mapping") {
  CHECK(normalized_confidence(ConditionMode::FullMotion, kDefaultTriple) == 1.0);
  CHECK(normalized_confidence(ConditionMode::TargetPose, kDefaultTriple) == 0.5);
  CHECK(normalized_confidence(ConditionMode::Empty, kDefaultTriple) == 0.0);
  for (const ConfidenceTriple& t : {ConfidenceTriple{0.8, 0.5, 0.2}, ConfidenceTriple{3, 2, 1}})
    CHECK(normalized_confidence(ConditionMode::TargetPose, t) == doctest::Approx(0.5));
  const GeneratorConfig g;
  CHECK(attenuation(g, ConditionMode::Empty, kDefaultTriple) == 1.0);
  CHECK(attenuation(g, ConditionMode::TargetPose, kDefaultTriple) == doctest::Approx(0.4));
  CHECK(attenuation(g, ConditionMode::FullMotion, kDefaultTriple) == doctest::Approx(0.02));
  CHECK(g.fidelity(0.25) == doctest::Approx(0.7));
  CHECK_THROWS_AS(normalized_confidence(ConditionMode::Empty, {0.5, 0.5, 0.0}), Error);
}

TEST_CASE("ground truth and corruption") {
  const SceneSpec scene = fixture_scene(0);
  const auto gt = synthesize_gt_motion(scene, scene.motion_seed);
  REQUIRE(gt.size() == 1);
  CHECK(gt[0].length() == 32);
  CHECK(gt[0].frames == synthesize_gt_motion(scene, scene.motion_seed)[0].frames);
  CHECK(gt_at_frames(scene, 16)[0].length() == 16);

  const GeneratorConfig g;
  double prev = -1.0;
  for (ConditionMode m : {ConditionMode::FullMotion, ConditionMode::TargetPose, ConditionMode::Empty}) {
    double e = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) e += mse(corrupt_motion(gt[0], m, kDefaultTriple, g, s), gt[0]);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(corrupt_motion(gt[0], ConditionMode::Empty, kDefaultTriple, g, 4).frames ==
        corrupt_motion(gt[0], ConditionMode::Empty, kDefaultTriple, g, 4).frames);
  const auto pinned = corrupt_motion(gt[0], ConditionMode::TargetPose, kDefaultTriple, g, 4);
  CHECK((pinned.frames.row(31) - gt[0].frames.row(31)).cwiseAbs().maxCoeff() <= g.corruption.noise_level / 10 + 1e-12);
}

TEST_CASE("rendering and generation") {
  const SceneSpec scene = fixture_scene(3);
  const GeneratorConfig coarse = GeneratorConfig::coarse();
  const auto gt = gt_at_frames(scene, coarse.frame_count(scene.duration));
  const VideoClip clip = render_video(scene, gt, coarse);
  CHECK(clip.length() == 16);
  CHECK(clip.width == 32);
  CHECK(clip.height == 18);
  int lit = 0;
  for (const auto& f : clip.frames)
    for (auto v : f.data) lit += v != 0;
  CHECK(lit > 0);
  CHECK(part_intensity(0, 5) == 0);
  CHECK(part_intensity(5, 5) == 255);

  const SyntheticGenerator gen;
  const auto cond = empty_condition(scene, coarse, kDefaultTriple);
  const Generation a = gen.generate(scene, cond, coarse, 9), b = gen.generate(scene, cond, coarse, 9);
  CHECK(a.clip == b.clip);
  CHECK(a.realized.size() == scene.objects.size());

  VideoCondition wrong = empty_condition(scene, GeneratorConfig::fine(), kDefaultTriple);
  CHECK_THROWS_AS(gen.generate(scene, wrong, coarse, 9), Error);
  VideoCondition full = cond;
  full.channels.mode = ConditionMode::FullMotion;
  CHECK_THROWS_AS(gen.generate(scene, full, coarse, 9), Error);
  full.guide = gt;
  const Generation g = gen.generate(scene, full, coarse, 9);
  for (std::size_t o = 0; o < gt.size(); ++o) CHECK(mse(g.realized[o], gt[o]) < mse(a.realized[o], gt[o]));
}

TEST_CASE("scene validation") {
  SceneSpec s = fixture_scene(0);
  s.duration = 0;
  CHECK_THROWS_AS(check_scene(s), Error);
  s = fixture_scene(0);
  s.objects[0].initial_pose = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(check_scene(s), Error);
  CHECK(object_template(Eigen::Vector3d(0, 0, 3), 1.0).size() == 63);
}
