#include "revision/corpus.hpp"
#include "revision/error.hpp"
#include "revision/io.hpp"
#include "revision/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace revision;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("revision_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("motion json") {
  const auto gt = synthesize_gt_motion(fixture_scene(2), 5);
  for (const auto& m : gt) {
    const MotionSequence back = motion_from_json(motion_to_json(m));
    CHECK(back.frames == m.frames);
    CHECK(back.model == m.model);
    CHECK(back.fps == m.fps);
  }
  Json j = motion_to_json(gt[0]);
  j["frames"][1].erase(0);
  CHECK_THROWS_AS(motion_from_json(j), Error);
  j = motion_to_json(gt[0]);
  j["category"] = "robot";
  CHECK_THROWS_AS(motion_from_json(j), Error);

  Json wide = motion_to_json(gt[0]);
  wide["pose_dim"] = 2;
  wide["frames"] = Json::array({Json::array({0.1, 0.2}), Json::array({0.3, 0.4})});
  const MotionSequence w = motion_from_json(wide);
  CHECK(w.pose_dim() == 2);
  CHECK(w.model->skeleton.empty());

  TempDir dir("motion");
  save_motions(gt, dir.path / "m.json");
  const auto back = load_motions(dir.path / "m.json");
  REQUIRE(back.size() == gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) CHECK(back[i].frames == gt[i].frames);
  save_motion(gt[0], dir.path / "one.json");
  CHECK(load_motions(dir.path / "one.json").size() == 1);
  CHECK_THROWS_AS(load_motion(dir.path / "missing.json"), Error);
  std::ofstream(dir.path / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_motion(dir.path / "bad.json"), Error);
}

TEST_CASE("config json") {
  const SceneSpec s = fixture_scene(4);
  const SceneSpec back = scene_from_json(scene_to_json(s));
  CHECK(scene_to_json(back) == scene_to_json(s));
  CHECK(back.motion_seed == s.motion_seed);

  PmpConfig p;
  p.layers = 2;
  p.vocab.push_back("jump");
  CHECK(pmp_config_to_json(pmp_config_from_json(pmp_config_to_json(p))) == pmp_config_to_json(p));
  CHECK(pmp_config_from_json(Json::object()).model_dim == PmpConfig{}.model_dim);
  CHECK_THROWS_AS(pmp_config_from_json(Json{{"heads", 3}}), Error);

  TrainConfig t;
  t.steps = 77;
  t.perturb.compose = true;
  t.perturb.probabilities = {0.5, 0.25, 0.25};
  CHECK(train_config_to_json(train_config_from_json(train_config_to_json(t))) == train_config_to_json(t));

  RevisionConfig r;
  r.confidence_triple = {3, 2, 1};
  r.extraction.pixel_sigma = 0.7;
  r.coarse.fidelity.knots = {{0.0, 0.9}, {1.0, 0.1}};
  const RevisionConfig rb = revision_config_from_json(revision_config_to_json(r));
  CHECK(revision_config_to_json(rb) == revision_config_to_json(r));
  CHECK(rb.extraction.pixel_sigma == 0.7);
  CHECK_THROWS_AS(revision_config_from_json(Json{{"confidence_triple", {0, 0.5, 1}}}), Error);
  CHECK_THROWS_AS(revision_config_from_json(Json{{"training_mix", {0.5, 0.5, 0.5}}}), Error);

  const UserCondition u = target_from_ground_truth(fixture_scene(0));
  CHECK(user_condition_to_json(user_condition_from_json(user_condition_to_json(u))) == user_condition_to_json(u));

  EvalReport e;
  e.traj_mse = 0.125;
  e.coarse_traj_mse = 0.5;
  CHECK(report_to_json(report_from_json(report_to_json(e))) == report_to_json(e));

  CameraSpec c;
  c.focal = 45;
  CHECK(camera_to_json(camera_from_json(camera_to_json(c))) == camera_to_json(c));
}

TEST_CASE("clips and images") {
  TempDir dir("clip");
  VideoClip clip;
  clip.width = 5;
  clip.height = 3;
  clip.fps = 24;
  for (int f = 0; f < 4; ++f) {
    GrayImage g(5, 3, 0);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<std::uint8_t>(17 * f + i);
    clip.frames.push_back(g);
  }
  save_clip(clip, dir.path / "c");
  CHECK(load_clip(dir.path / "c") == clip);
  CHECK(fs::exists(dir.path / "c" / "frame_0003.pgm"));
  CHECK_THROWS_AS(load_clip(dir.path / "none"), Error);

  DepthMap d{Grid<double>(3, 2, 0.0), 1e-3};
  d.values(1, 1) = 2.5;
  d.values(2, 0) = 0.0015;
  write_depth(d, dir.path / "d.pgm");
  const DepthMap db = read_depth(dir.path / "d.pgm");
  CHECK(db.values(1, 1) == doctest::Approx(2.5));
  CHECK(db.values(2, 0) == doctest::Approx(0.002));

  Grid<double> conf(2, 2, 0.2);
  conf(1, 0) = 0.8;
  write_confidence(conf, {0.8, 0.5, 0.2}, dir.path / "conf.pgm");
  CHECK(read_confidence(dir.path / "conf.pgm") == conf);
  conf(0, 0) = 0.3;
  CHECK_THROWS_AS(write_confidence(conf, {0.8, 0.5, 0.2}, dir.path / "x.pgm"), Error);

  std::ofstream(dir.path / "bad.pgm") << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(dir.path / "bad.pgm"), Error);
}

TEST_CASE("preset files match the built-in models") {
  const fs::path dir = fs::path(REVISION_DATA_DIR) / "presets";
  for (const auto& [file, model] : {std::pair{"human.json", human_model()}, std::pair{"animal.json", animal_model()},
                                    std::pair{"object.json", object_model()}}) {
    const ParametricModelSpec s = model_spec_from_json(read_json(dir / file));
    CHECK(model_spec_to_json(s) == model_spec_to_json(*model));
  }
  Json broken = model_spec_to_json(*human_model());
  broken["skeleton"][2]["parent"] = 5;
  CHECK_THROWS_AS(model_spec_from_json(broken), Error);
}
