#include "revision/corpus.hpp"

#include "revision/error.hpp"
#include "revision/io.hpp"
#include "revision/rng.hpp"

#include <algorithm>
#include <cstdio>

namespace revision {

namespace {

Category pick_category(Rng& rng, const std::array<double, kCategoryCount>& w) {
  std::discrete_distribution<int> d(w.begin(), w.end());
  return static_cast<Category>(d(rng));
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform_int(rng, 0, static_cast<int>(v.size()) - 1)];
}

SceneObject random_object(Rng& rng, Category cat, double x, double z) {
  SceneObject o;
  o.model = preset_model(cat);
  const double jitter = uniform01(rng) - 0.5;
  std::string action;
  switch (cat) {
    case Category::Human:
      o.tags = {"human"};
      o.shape_scale = 1.0 + 0.1 * jitter;
      o.placement = {x, -0.1 + 0.1 * jitter, z};
      action = pick(rng, std::vector<std::string>{"static", "walk", "walk", "reach", "wave", "wave"});
      break;
    case Category::Animal:
      o.tags = {"animal"};
      o.shape_scale = 1.8 + 0.2 * jitter;
      o.placement = {x - 0.3, 0.1 + 0.1 * jitter, z};
      action = pick(rng, std::vector<std::string>{"static", "walk", "walk", "reach", "wave"});
      break;
    case Category::GenericObject:
      o.tags = {"object"};
      o.shape_scale = 2.5 + 0.5 * jitter;
      action = pick(rng, std::vector<std::string>{"static", "drop", "slide", "slide"});
      o.placement = {x, action == "drop" ? -0.7 : 0.1 + 0.2 * jitter, z};
      break;
  }
  o.tags.push_back(action);
  if (action == "reach" || action == "wave" || action == "slide")
    o.tags.push_back(uniform01(rng) < 0.5 ? "left" : "right");
  const double speed = uniform01(rng);
  if (action != "static" && speed < 0.2) o.tags.push_back("fast");
  else if (action != "static" && speed > 0.8) o.tags.push_back("slow");
  o.initial_pose = o.model->articulated() ? Eigen::VectorXd::Zero(o.model->pose_dim)
                                          : object_template(o.placement, o.shape_scale);
  return o;
}

}  // namespace

SceneSpec random_scene(std::uint64_t seed, const SceneSampling& sampling) {
  if (sampling.min_objects < 1 || sampling.max_objects < sampling.min_objects)
    fail(ErrorCode::InvalidConfig, "object count range is empty");
  Rng rng(seed);
  SceneSpec s;
  s.camera = sampling.camera;
  s.duration = sampling.duration;
  s.fps = sampling.fps;
  s.motion_seed = rng();
  const int n = uniform_int(rng, sampling.min_objects, sampling.max_objects);
  // Columns of equal width across the visible range at the nearest depth.
  const double half = 0.85 * (s.camera.width / 2.0) / s.camera.focal * 2.6;
  for (int i = 0; i < n; ++i) {
    const double cx = -half + (2.0 * i + 1.0) * half / n;
    const double z = 2.6 + 0.6 * uniform01(rng);
    s.objects.push_back(random_object(rng, pick_category(rng, sampling.category_weights), cx, z));
  }
  s.name = "random-" + std::to_string(seed);
  check_scene(s);
  return s;
}

ConditionMode sample_condition_mode(std::uint64_t seed, const std::array<double, 3>& mix) {
  Rng rng(seed);
  std::discrete_distribution<int> d(mix.begin(), mix.end());
  return static_cast<ConditionMode>(d(rng));
}

std::vector<CorpusEntry> generate_corpus(int count, std::uint64_t seed, const std::array<double, 3>& mix,
                                         const SceneSampling& sampling) {
  if (count < 1) fail(ErrorCode::EmptyCorpus, "corpus size must be positive");
  std::vector<CorpusEntry> out;
  for (int i = 0; i < count; ++i) {
    CorpusEntry e;
    e.scene = random_scene(derive_seed(seed, 2 * i), sampling);
    e.gt = synthesize_gt_motion(e.scene, e.scene.motion_seed);
    e.mode = sample_condition_mode(derive_seed(seed, 2 * i + 1), mix);
    out.push_back(std::move(e));
  }
  return out;
}

void write_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& dir,
                  const RevisionConfig& config, const VideoGenerator& generator, std::uint64_t seed) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const CorpusEntry& e = corpus[i];
    char name[32];
    std::snprintf(name, sizeof name, "entry_%04zu", i);
    const auto d = dir / name;
    write_json(d / "scene.json", scene_to_json(e.scene));
    save_motions(e.gt, d / "gt.json");
    write_json(d / "condition.json", {{"mode", to_string(e.mode)}});
    const int n = config.fine.frame_count(e.scene.duration);
    const auto gt = gt_at_frames(e.scene, n);
    VideoCondition cond;
    if (e.mode == ConditionMode::FullMotion) {
      cond.channels = full_motion_channels(e.scene, gt, config.fine, config.confidence_triple);
      cond.guide = gt;
    } else {
      const CameraSpec cam = e.scene.camera.scaled(config.fine.resolution_scale);
      ConditionPayload p;
      p.frames = n;
      p.width = cam.width;
      p.height = cam.height;
      p.camera = cam;
      if (e.mode == ConditionMode::TargetPose) {
        p.target = target_from_ground_truth(e.scene).target;
        for (auto& poly : p.target) poly.points *= config.fine.resolution_scale;
      }
      cond.channels = build_condition(e.mode, p, config.confidence_triple);
    }
    const Generation g = generator.generate(e.scene, cond, config.fine, derive_seed(seed, i));
    save_clip(g.clip, d / "clip");
    save_channels(cond.channels, d / "channels");
  }
}

std::vector<TrainingMotion> training_motions(int count, std::uint64_t seed, const SceneSampling& sampling) {
  if (count < 1) fail(ErrorCode::EmptyCorpus, "corpus size must be positive");
  std::vector<TrainingMotion> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const SceneSpec s = random_scene(derive_seed(seed, i), sampling);
    const auto gt = synthesize_gt_motion(s, s.motion_seed);
    for (std::size_t o = 0; o < gt.size() && static_cast<int>(out.size()) < count; ++o)
      out.push_back({gt[o], s.objects[o].tags});
  }
  return out;
}

std::vector<TrainingExample> example_batch(const PmpConfig& config, int count, int frames, std::uint64_t seed,
                                           const PerturbConfig& perturb) {
  SceneSampling sampling;
  sampling.duration = std::max(frames, 2);
  const auto motions = training_motions(count, derive_seed(seed, "motions"), sampling);
  std::vector<TrainingExample> out;
  for (int i = 0; i < count; ++i) {
    const TrainingMotion& tm = motions[i];
    const Perturbed p = sample_perturbation(tm.motion, perturb, derive_seed(seed, i));
    out.push_back({p.sequence.frames, tm.motion.frames,
                   make_conditioning(config, tm.tags, motion_strength(tm.motion).mean, tm.motion.model->category)});
  }
  return out;
}

PosePrior fit_pose_prior(const std::vector<MotionSequence>& motions, double floor) {
  if (motions.empty()) fail(ErrorCode::EmptyCorpus, "no motions to fit a pose prior");
  const int pd = motions.front().pose_dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(pd), sq = Eigen::VectorXd::Zero(pd);
  double n = 0.0;
  for (const auto& m : motions) {
    if (m.pose_dim() != pd) fail(ErrorCode::DimensionMismatch, "pose prior motions differ in dimension");
    sum += m.frames.colwise().sum().transpose();
    sq += m.frames.array().square().matrix().colwise().sum().transpose();
    n += m.length();
  }
  PosePrior p;
  p.mean = sum / n;
  p.stddev = (sq / n - p.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(floor);
  return p;
}

const PosePrior& corpus_pose_prior(Category category) {
  static const std::array<PosePrior, kCategoryCount> priors = [] {
    std::array<std::vector<MotionSequence>, kCategoryCount> by_cat;
    for (auto& tm : training_motions(384, 0x9e05eu)) by_cat[category_index(tm.motion.model->category)].push_back(tm.motion);
    std::array<PosePrior, kCategoryCount> out;
    for (int c = 0; c < kCategoryCount; ++c)
      if (!by_cat[c].empty()) out[c] = fit_pose_prior(by_cat[c], 0.01);
    return out;
  }();
  const PosePrior& p = priors[category_index(category)];
  if (p.mean.size() == 0) fail(ErrorCode::EmptyCorpus, "no pose prior for " + std::string(to_string(category)));
  return p;
}

SceneSpec fixture_scene(int index) {
  if (index < 0) fail(ErrorCode::InvalidConfig, "fixture index must be non-negative");
  if (index > 0) {
    SceneSpec s = random_scene(derive_seed(0xF1C7u, index));
    s.name = "fixture-" + std::to_string(index);
    return s;
  }
  SceneSpec s;
  s.name = "walker";
  s.motion_seed = 7;
  SceneObject o;
  o.model = human_model();
  o.initial_pose = Eigen::VectorXd::Zero(o.model->pose_dim);
  o.placement = {0.0, -0.1, 2.8};
  o.tags = {"human", "walk"};
  s.objects.push_back(std::move(o));
  return s;
}

}  // namespace revision
