#include "revision/io.hpp"

#include "revision/error.hpp"
#include "revision/pipeline.hpp"

#include <cstdio>
#include <fstream>

namespace revision {

namespace fs = std::filesystem;

Json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) fail(ErrorCode::IoError, "failed writing " + path.string());
}

namespace {

// Converts nlohmann errors (missing keys, wrong types) into ParseError.
template <typename F>
auto parsing(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

Json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Json model_spec_to_json(const ParametricModelSpec& spec) {
  Json joints = Json::array();
  for (const Joint& j : spec.skeleton)
    joints.push_back({{"id", j.id}, {"parent", j.parent}, {"rest_offset", vec_json(j.rest_offset)}, {"part_label", j.part_label}});
  return {{"category", to_string(spec.category)},
          {"name", spec.name},
          {"pose_dim", spec.pose_dim},
          {"shape_dim", spec.shape_dim},
          {"expression_dim", spec.expression_dim},
          {"part_count", spec.part_count},
          {"reference_pose_dim", spec.reference_pose_dim},
          {"skeleton", joints}};
}

ParametricModelSpec model_spec_from_json(const Json& j) {
  ParametricModelSpec s = parsing("model spec", [&] {
    ParametricModelSpec s;
    s.category = category_from_string(j.at("category").get<std::string>());
    s.name = j.value("name", std::string());
    s.pose_dim = j.at("pose_dim").get<int>();
    s.shape_dim = j.value("shape_dim", 0);
    s.expression_dim = j.value("expression_dim", 0);
    s.part_count = j.at("part_count").get<int>();
    s.reference_pose_dim = j.value("reference_pose_dim", s.pose_dim);
    for (const Json& jj : j.value("skeleton", Json::array())) {
      const auto o = jj.at("rest_offset").get<std::vector<double>>();
      if (o.size() != 3) fail(ErrorCode::ParseError, "rest_offset needs 3 entries");
      s.skeleton.push_back(
          Joint{jj.at("id").get<int>(), jj.at("parent").get<int>(), Eigen::Vector3d(o[0], o[1], o[2]), jj.at("part_label").get<int>()});
    }
    return s;
  });
  const auto problems = check_spec(s);
  if (!problems.empty()) fail(ErrorCode::InvalidConfig, "model spec: " + problems.front());
  return s;
}

Json motion_to_json(const MotionSequence& seq) {
  if (!seq.model) fail(ErrorCode::InvalidConfig, "motion has no model");
  Json frames = Json::array();
  for (int f = 0; f < seq.length(); ++f) frames.push_back(vec_json(seq.frames.row(f).transpose()));
  return {{"version", "1"},
          {"category", to_string(seq.model->category)},
          {"pose_dim", seq.pose_dim()},
          {"shape_dim", seq.model->shape_dim},
          {"expression_dim", seq.model->expression_dim},
          {"fps", seq.fps},
          {"frames", frames}};
}

MotionSequence motion_from_json(const Json& j) {
  return parsing("motion", [&] {
    if (j.at("version").get<std::string>() != "1") fail(ErrorCode::ParseError, "unsupported motion version");
    const Category cat = category_from_string(j.at("category").get<std::string>());
    const int pose_dim = j.at("pose_dim").get<int>();
    const double fps = j.at("fps").get<double>();
    const auto rows = j.at("frames").get<std::vector<std::vector<double>>>();
    const auto violations = validate_rows(pose_dim, fps, rows);
    if (!violations.empty()) {
      const auto& v = violations.front();
      fail(v.kind == ViolationKind::NonFiniteEntry ? ErrorCode::NonFiniteEntry
           : v.kind == ViolationKind::EmptySequence ? ErrorCode::SequenceTooShort
                                                     : ErrorCode::DimensionMismatch,
           "motion file: " + v.detail);
    }
    ModelRef model = preset_model(cat);
    if (model->pose_dim != pose_dim) {
      ParametricModelSpec spec = *model;
      spec.pose_dim = pose_dim;
      spec.skeleton.clear();
      spec.shape_dim = j.value("shape_dim", spec.shape_dim);
      spec.expression_dim = j.value("expression_dim", spec.expression_dim);
      model = std::make_shared<const ParametricModelSpec>(std::move(spec));
    }
    MotionSequence seq{model, fps, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), pose_dim)};
    for (std::size_t f = 0; f < rows.size(); ++f)
      for (int c = 0; c < pose_dim; ++c) seq.frames(static_cast<Eigen::Index>(f), c) = rows[f][c];
    return seq;
  });
}

void save_motion(const MotionSequence& seq, const fs::path& path) { write_json(path, motion_to_json(seq)); }

MotionSequence load_motion(const fs::path& path) { return motion_from_json(read_json(path)); }

void save_motions(const std::vector<MotionSequence>& seqs, const fs::path& path) {
  Json objects = Json::array();
  for (const auto& s : seqs) objects.push_back(motion_to_json(s));
  write_json(path, {{"objects", objects}});
}

std::vector<MotionSequence> load_motions(const fs::path& path) {
  const Json j = read_json(path);
  std::vector<MotionSequence> out;
  if (!j.contains("objects")) return {motion_from_json(j)};
  for (const auto& o : j.at("objects")) out.push_back(motion_from_json(o));
  return out;
}

Json record_to_json(const PerturbationRecord& r) {
  Json params;
  if (r.kind == PerturbationKind::Noise) params = {{"t", r.t}};
  else params = {{"lo", r.lo}, {"hi", r.hi}};
  return {{"kind", to_string(r.kind)}, {"params", params}, {"seed", r.seed}};
}

PerturbationRecord record_from_json(const Json& j) {
  return parsing("perturbation record", [&] {
    PerturbationRecord r;
    r.kind = perturbation_kind_from_string(j.at("kind").get<std::string>());
    const Json& p = j.at("params");
    if (r.kind == PerturbationKind::Noise) {
      r.t = p.at("t").get<int>();
    } else {
      r.lo = p.at("lo").get<int>();
      r.hi = p.at("hi").get<int>();
    }
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  });
}

Json camera_to_json(const CameraSpec& c) {
  return {{"focal", c.focal}, {"principal", {c.principal.x(), c.principal.y()}}, {"width", c.width}, {"height", c.height}};
}

CameraSpec camera_from_json(const Json& j) {
  return parsing("camera", [&] {
    CameraSpec c;
    c.focal = j.value("focal", c.focal);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.principal = Eigen::Vector2d(c.width / 2.0, c.height / 2.0);
    if (j.contains("principal")) {
      const auto p = j.at("principal").get<std::array<double, 2>>();
      c.principal = {p[0], p[1]};
    }
    check_camera(c);
    return c;
  });
}

Json scene_to_json(const SceneSpec& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects)
    objects.push_back({{"category", to_string(o.model->category)},
                       {"initial_pose", vec_json(o.initial_pose)},
                       {"shape_scale", o.shape_scale},
                       {"placement", {o.placement.x(), o.placement.y(), o.placement.z()}},
                       {"tags", o.tags}});
  return {{"name", scene.name},         {"camera", camera_to_json(scene.camera)}, {"duration", scene.duration},
          {"fps", scene.fps},           {"motion_seed", scene.motion_seed},       {"objects", objects}};
}

SceneSpec scene_from_json(const Json& j) {
  SceneSpec s = parsing("scene", [&] {
    SceneSpec s;
    s.name = j.value("name", std::string());
    s.camera = j.contains("camera") ? camera_from_json(j.at("camera")) : CameraSpec{};
    s.duration = j.value("duration", s.duration);
    s.fps = j.value("fps", s.fps);
    s.motion_seed = j.value("motion_seed", s.motion_seed);
    for (const auto& jo : j.at("objects")) {
      SceneObject o;
      o.model = preset_model(category_from_string(jo.at("category").get<std::string>()));
      o.shape_scale = jo.value("shape_scale", 1.0);
      const auto p = jo.at("placement").get<std::array<double, 3>>();
      o.placement = {p[0], p[1], p[2]};
      o.tags = jo.value("tags", std::vector<std::string>{});
      if (jo.contains("initial_pose")) o.initial_pose = json_vec(jo.at("initial_pose"));
      else if (o.model->articulated()) o.initial_pose = Eigen::VectorXd::Zero(o.model->pose_dim);
      else o.initial_pose = object_template(o.placement, o.shape_scale);
      s.objects.push_back(std::move(o));
    }
    return s;
  });
  check_scene(s);
  return s;
}

Json pmp_config_to_json(const PmpConfig& c) {
  return {{"layers", c.layers},   {"model_dim", c.model_dim},   {"heads", c.heads},
          {"ffn_dim", c.ffn_dim}, {"max_frames", c.max_frames}, {"max_pose_dim", c.max_pose_dim},
          {"vocab", c.vocab},     {"refine_iterations", c.refine_iterations}};
}

PmpConfig pmp_config_from_json(const Json& j) {
  PmpConfig c = parsing("pmp config", [&] {
    PmpConfig c;
    c.layers = j.value("layers", c.layers);
    c.model_dim = j.value("model_dim", c.model_dim);
    c.heads = j.value("heads", c.heads);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.max_pose_dim = j.value("max_pose_dim", c.max_pose_dim);
    c.vocab = j.value("vocab", c.vocab);
    c.refine_iterations = j.value("refine_iterations", c.refine_iterations);
    return c;
  });
  check_config(c);
  return c;
}

Json generator_config_to_json(const GeneratorConfig& c) {
  Json knots = Json::array();
  for (const auto& [x, y] : c.fidelity.knots) knots.push_back({x, y});
  return {{"resolution_scale", c.resolution_scale},
          {"frame_fraction", c.frame_fraction},
          {"steps", c.steps},
          {"splat_radius", c.splat_radius},
          {"corruption",
           {{"noise_level", c.corruption.noise_level},
            {"shuffle_prob", c.corruption.shuffle_prob},
            {"drop_prob", c.corruption.drop_prob}}},
          {"condition_fidelity", knots}};
}

GeneratorConfig generator_config_from_json(const Json& j, const GeneratorConfig& defaults) {
  GeneratorConfig c = parsing("generator config", [&] {
    GeneratorConfig c = defaults;
    c.resolution_scale = j.value("resolution_scale", c.resolution_scale);
    c.frame_fraction = j.value("frame_fraction", c.frame_fraction);
    c.steps = j.value("steps", c.steps);
    c.splat_radius = j.value("splat_radius", c.splat_radius);
    if (j.contains("corruption")) {
      const Json& k = j.at("corruption");
      c.corruption.noise_level = k.value("noise_level", c.corruption.noise_level);
      c.corruption.shuffle_prob = k.value("shuffle_prob", c.corruption.shuffle_prob);
      c.corruption.drop_prob = k.value("drop_prob", c.corruption.drop_prob);
    }
    if (j.contains("condition_fidelity")) {
      c.fidelity.knots.clear();
      for (const auto& k : j.at("condition_fidelity")) c.fidelity.knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    }
    return c;
  });
  check_config(c);
  return c;
}

Json train_config_to_json(const TrainConfig& c) {
  return {{"steps", c.steps},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"clip_norm", c.clip_norm},
          {"crop_min", c.crop_min},
          {"crop_max", c.crop_max},
          {"probabilities", c.perturb.probabilities},
          {"noise_t", {c.perturb.noise_t_min, c.perturb.noise_t_max}},
          {"compose", c.perturb.compose}};
}

TrainConfig train_config_from_json(const Json& j) {
  return parsing("train config", [&] {
    TrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.crop_min = j.value("crop_min", c.crop_min);
    c.crop_max = j.value("crop_max", c.crop_max);
    c.perturb.probabilities = j.value("probabilities", c.perturb.probabilities);
    if (j.contains("noise_t")) {
      const auto t = j.at("noise_t").get<std::array<int, 2>>();
      c.perturb.noise_t_min = t[0];
      c.perturb.noise_t_max = t[1];
    }
    c.perturb.compose = j.value("compose", c.perturb.compose);
    check_config(c.perturb);
    return c;
  });
}

Json revision_config_to_json(const RevisionConfig& c) {
  return {{"coarse", generator_config_to_json(c.coarse)},
          {"fine", generator_config_to_json(c.fine)},
          {"confidence_triple", c.confidence_triple},
          {"training_mix", c.training_mix},
          {"pmp_checkpoint", c.pmp_checkpoint.generic_string()},
          {"seed", c.seed},
          {"extraction",
           {{"pixel_sigma", c.extraction.pixel_sigma},
            {"pose_prior_weight", c.extraction.pose_prior_weight},
            {"prior_weight", c.extraction.prior_weight},
            {"iterations", c.extraction.iterations},
            {"missing_fraction", c.extraction.missing_fraction}}}};
}

RevisionConfig revision_config_from_json(const Json& j) {
  RevisionConfig c = parsing("revision config", [&] {
    RevisionConfig c;
    if (j.contains("coarse")) c.coarse = generator_config_from_json(j.at("coarse"), GeneratorConfig::coarse());
    if (j.contains("fine")) c.fine = generator_config_from_json(j.at("fine"), GeneratorConfig::fine());
    c.confidence_triple = j.value("confidence_triple", c.confidence_triple);
    c.training_mix = j.value("training_mix", c.training_mix);
    c.pmp_checkpoint = j.value("pmp_checkpoint", std::string());
    c.seed = j.value("seed", c.seed);
    if (j.contains("extraction")) {
      const Json& e = j.at("extraction");
      c.extraction.pixel_sigma = e.value("pixel_sigma", c.extraction.pixel_sigma);
      c.extraction.pose_prior_weight = e.value("pose_prior_weight", c.extraction.pose_prior_weight);
      c.extraction.prior_weight = e.value("prior_weight", c.extraction.prior_weight);
      c.extraction.iterations = e.value("iterations", c.extraction.iterations);
      c.extraction.missing_fraction = e.value("missing_fraction", c.extraction.missing_fraction);
    }
    return c;
  });
  check_config(c);
  return c;
}

Json user_condition_to_json(const UserCondition& u) {
  Json parts = Json::array();
  for (const auto& p : u.target) {
    Json pts = Json::array();
    for (Eigen::Index i = 0; i < p.points.cols(); ++i) pts.push_back({p.points(0, i), p.points(1, i)});
    parts.push_back({{"label", p.label}, {"points", pts}});
  }
  return {{"mode", to_string(u.mode)}, {"target", parts}};
}

UserCondition user_condition_from_json(const Json& j) {
  return parsing("user condition", [&] {
    UserCondition u;
    u.mode = condition_mode_from_string(j.value("mode", std::string("Empty")));
    for (const auto& jp : j.value("target", Json::array())) {
      PartPolygon p;
      p.label = jp.at("label").get<int>();
      const auto pts = jp.at("points").get<std::vector<std::array<double, 2>>>();
      p.points.resize(2, static_cast<Eigen::Index>(pts.size()));
      for (std::size_t i = 0; i < pts.size(); ++i) p.points.col(static_cast<Eigen::Index>(i)) << pts[i][0], pts[i][1];
      u.target.push_back(std::move(p));
    }
    return u;
  });
}

Json report_to_json(const EvalReport& r) {
  return {{"traj_mse", r.traj_mse},
          {"mask_miou", r.mask_miou},
          {"psnr", r.psnr},
          {"ssim", r.ssim},
          {"coarse_traj_mse", r.coarse_traj_mse},
          {"raw_traj_mse", r.raw_traj_mse},
          {"refined_traj_mse", r.refined_traj_mse}};
}

EvalReport report_from_json(const Json& j) {
  return parsing("report", [&] {
    EvalReport r;
    r.traj_mse = j.at("traj_mse").get<double>();
    r.mask_miou = j.at("mask_miou").get<double>();
    r.psnr = j.at("psnr").get<double>();
    r.ssim = j.at("ssim").get<double>();
    r.coarse_traj_mse = j.value("coarse_traj_mse", -1.0);
    r.raw_traj_mse = j.value("raw_traj_mse", -1.0);
    r.refined_traj_mse = j.value("refined_traj_mse", -1.0);
    return r;
  });
}

namespace {

fs::path numbered(const fs::path& dir, const char* stem, int i) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%04d.pgm", stem, i);
  return dir / name;
}

}  // namespace

void save_clip(const VideoClip& clip, const fs::path& dir) {
  fs::create_directories(dir);
  for (int i = 0; i < clip.length(); ++i) write_pgm(clip.frames[i], numbered(dir, "frame", i));
  write_json(dir / "clip.json", {{"fps", clip.fps}, {"resolution", {clip.width, clip.height}}, {"frames", clip.length()}});
}

VideoClip load_clip(const fs::path& dir) {
  const Json j = read_json(dir / "clip.json");
  VideoClip clip;
  parsing("clip.json", [&] {
    clip.fps = j.at("fps").get<double>();
    const auto res = j.at("resolution").get<std::array<int, 2>>();
    clip.width = res[0];
    clip.height = res[1];
    return 0;
  });
  int n = j.value("frames", -1);
  if (n < 0) {
    n = 0;
    while (fs::exists(numbered(dir, "frame", n))) ++n;
  }
  for (int i = 0; i < n; ++i) {
    GrayImage img = read_pgm(numbered(dir, "frame", i));
    if (img.width != clip.width || img.height != clip.height)
      fail(ErrorCode::ShapeMismatch, numbered(dir, "frame", i).string() + " does not match clip resolution");
    clip.frames.push_back(std::move(img));
  }
  if (clip.frames.empty()) fail(ErrorCode::ParseError, dir.string() + " holds no frames");
  return clip;
}

void save_channels(const ConditionChannels& channels, const fs::path& dir) {
  fs::create_directories(dir);
  for (int i = 0; i < channels.frames(); ++i) {
    write_pgm(channels.part_mask[i], numbered(dir, "part", i));
    write_confidence(channels.confidence[i], channels.triple, numbered(dir, "confidence", i));
  }
  write_json(dir / "channels.json",
             {{"mode", to_string(channels.mode)}, {"triple", channels.triple}, {"frames", channels.frames()}});
}

}  // namespace revision
