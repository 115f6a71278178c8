#include "revision/cli.hpp"

#include "revision/corpus.hpp"
#include "revision/error.hpp"
#include "revision/longvideo.hpp"
#include "revision/pipeline.hpp"
#include "revision/rng.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace revision {

namespace fs = std::filesystem;

Json load_cli_config(const std::string& path) {
  Json cfg = {{"seed", 42}, {"revision", Json::object()}, {"pmp", Json::object()},
              {"train", Json::object()}, {"corpus_size", 512}};
  if (path.empty()) return cfg;
  Json file = read_json(path);
  if (!file.is_object()) fail(ErrorCode::ParseError, path + ": config must be a JSON object");
  cfg.merge_patch(file);
  cfg["config_dir"] = fs::absolute(path).parent_path().generic_string();
  return cfg;
}

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool out_required) {
  sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Root seed (overrides the config)");
  auto* o = sub->add_option("--out", c.out, "Output path");
  if (out_required) o->required();
}

// The parsed view every subcommand works from.
struct Context {
  Json cfg;
  std::uint64_t seed = 42;
  fs::path base;  // relative config paths resolve against the config file

  RevisionConfig revision() const {
    RevisionConfig r = revision_config_from_json(cfg.at("revision"));
    r.seed = seed;
    return r;
  }
  PmpConfig pmp() const { return pmp_config_from_json(cfg.at("pmp")); }
  TrainConfig train() const { return train_config_from_json(cfg.at("train")); }
  fs::path resolve(const fs::path& p) const { return p.is_absolute() || base.empty() ? p : base / p; }
};

Context make_context(const Common& c) {
  Context ctx;
  ctx.cfg = load_cli_config(c.config);
  ctx.seed = c.seed ? *c.seed : ctx.cfg.at("seed").get<std::uint64_t>();
  if (ctx.cfg.contains("config_dir")) ctx.base = ctx.cfg.at("config_dir").get<std::string>();
  return ctx;
}

SceneSpec resolve_scene(const Context& ctx, const std::string& scene_path, int fixture) {
  if (!scene_path.empty()) return scene_from_json(read_json(scene_path));
  if (ctx.cfg.contains("scene")) {
    const Json& s = ctx.cfg.at("scene");
    return s.is_string() ? scene_from_json(read_json(ctx.resolve(s.get<std::string>()))) : scene_from_json(s);
  }
  return fixture_scene(fixture);
}

PmpModel resolve_checkpoint(const Context& ctx, const std::string& flag) {
  fs::path p = flag;
  if (p.empty()) {
    const fs::path from_cfg = ctx.revision().pmp_checkpoint;
    if (from_cfg.empty()) fail(ErrorCode::InvalidConfig, "no PMP checkpoint given (--checkpoint or revision.pmp_checkpoint)");
    p = ctx.resolve(from_cfg);
  }
  return load_checkpoint(p);
}

Conditioning conditioning_for(const PmpModel& pmp, const MotionSequence& m, std::vector<std::string> tags) {
  if (tags.empty()) tags = {std::string(to_string(m.model->category))};
  for (auto& t : tags)
    if (t == "GenericObject") t = "object";
    else if (t == "Human") t = "human";
    else if (t == "Animal") t = "animal";
  return make_conditioning(pmp.config(), tags, motion_strength(m).mean, m.model->category);
}

MotionSequence single_motion(const fs::path& path) {
  auto motions = load_motions(path);
  if (motions.size() != 1) fail(ErrorCode::DimensionMismatch, path.string() + " holds more than one motion");
  return std::move(motions.front());
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Motion-conditioned video revision pipeline", "revision"};
  app.require_subcommand(1, 1);

  Common common;
  std::string scene_path, checkpoint, clip_dir, input, motion_path, target = "none";
  std::vector<std::string> tags, clip_dirs, eval_paths;
  int fixture = 0, count = 16, layers = 0, samples = 200, length = 128, window = kDefaultWindow, stride = kDefaultStride;
  std::optional<int> steps;
  double epsilon = 1e-4;

  auto* gen_corpus = app.add_subcommand("gen-corpus", "Synthetic scenes, ground truth and conditioned clips");
  add_common(gen_corpus, common, true);
  gen_corpus->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train-pmp", "Train the motion prior on a synthetic corpus");
  add_common(train, common, true);
  train->add_option("--steps", steps, "Training steps (overrides the config)")->check(CLI::PositiveNumber);

  auto* gcheck = app.add_subcommand("grad-check", "Compare analytic and numeric prior gradients");
  add_common(gcheck, common, false);
  gcheck->add_option("--layers", layers, "Transformer layers (overrides the config)")->check(CLI::PositiveNumber);
  gcheck->add_option("--epsilon", epsilon, "Central-difference step")->check(CLI::Range(1e-7, 1e-3));
  gcheck->add_option("--samples", samples, "Sampled parameters")->check(CLI::PositiveNumber);

  auto* denoise = app.add_subcommand("denoise", "Refine one motion file with the prior");
  add_common(denoise, common, true);
  denoise->add_option("--input", input, "Motion JSON")->required()->check(CLI::ExistingFile);
  denoise->add_option("--checkpoint", checkpoint, "Prior checkpoint")->check(CLI::ExistingFile);
  denoise->add_option("--tags", tags, "Text tags");

  auto* extract = app.add_subcommand("extract", "Recover per-object motion from a clip");
  add_common(extract, common, true);
  extract->add_option("--clip", clip_dir, "Clip directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--scene", scene_path, "Scene JSON")->check(CLI::ExistingFile);
  extract->add_option("--fixture", fixture, "Fixture scene index when no scene is given");

  auto* rasterize = app.add_subcommand("rasterize", "Render full-motion condition channels");
  add_common(rasterize, common, true);
  rasterize->add_option("--motion", motion_path, "Motion JSON (one entry per scene object)")->required()->check(CLI::ExistingFile);
  rasterize->add_option("--scene", scene_path, "Scene JSON")->check(CLI::ExistingFile);
  rasterize->add_option("--fixture", fixture, "Fixture scene index when no scene is given");

  auto* run = app.add_subcommand("run", "Run all three stages and write a run directory");
  add_common(run, common, true);
  run->add_option("--scene", scene_path, "Scene JSON")->check(CLI::ExistingFile);
  run->add_option("--fixture", fixture, "Fixture scene index when no scene is given");
  run->add_option("--checkpoint", checkpoint, "Prior checkpoint")->check(CLI::ExistingFile);
  run->add_option("--target", target, "User condition when the config has none")->check(CLI::IsMember({"none", "gt"}));

  auto* extend = app.add_subcommand("extend", "Lengthen a motion by interpolation, extrapolation and refinement");
  add_common(extend, common, true);
  extend->add_option("--input", input, "Motion JSON")->required()->check(CLI::ExistingFile);
  extend->add_option("--length", length, "Target frame count")->check(CLI::PositiveNumber);
  extend->add_option("--checkpoint", checkpoint, "Prior checkpoint")->check(CLI::ExistingFile);
  extend->add_option("--tags", tags, "Text tags");

  auto* stitch_cmd = app.add_subcommand("stitch", "Blend overlapping window clips into one clip");
  add_common(stitch_cmd, common, true);
  stitch_cmd->add_option("clips", clip_dirs, "Window clip directories in order")->required()->check(CLI::ExistingDirectory);
  stitch_cmd->add_option("--window", window, "Window length")->check(CLI::PositiveNumber);
  stitch_cmd->add_option("--stride", stride, "Window stride")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Compare two clips or two motion files");
  add_common(eval, common, false);
  eval->add_option("paths", eval_paths, "Prediction and reference")->required()->expected(2);

  std::vector<const char*> argv{"revision"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    const Context ctx = make_context(common);
    const fs::path out_path = common.out;

    if (gen_corpus->parsed()) {
      const RevisionConfig rc = ctx.revision();
      const auto corpus = generate_corpus(count, derive_seed(ctx.seed, "corpus"), rc.training_mix);
      write_corpus(corpus, out_path, rc, SyntheticGenerator{}, derive_seed(ctx.seed, "generate"));
      err << "wrote " << corpus.size() << " scenes\n";
      out << out_path.generic_string() << "\n";
    } else if (train->parsed()) {
      TrainConfig tc = ctx.train();
      if (steps) tc.steps = *steps;
      const auto corpus = training_motions(ctx.cfg.at("corpus_size").get<int>(), derive_seed(ctx.seed, "corpus"));
      err << "training on " << corpus.size() << " motions for " << tc.steps << " steps\n";
      const TrainResult r = pmp_train(pmp_init(ctx.pmp(), derive_seed(ctx.seed, "init")), corpus, tc,
                                      derive_seed(ctx.seed, "train"));
      fs::create_directories(out_path);
      save_checkpoint(r.model, out_path / "pmp.ckpt");
      write_training_log(r.loss, out_path / "train_log.csv");
      write_json(out_path / "train.json",
                 {{"seed", ctx.seed}, {"pmp", pmp_config_to_json(r.model.config())}, {"train", train_config_to_json(tc)},
                  {"corpus_size", corpus.size()}});
      err << "final smoothed loss " << smoothed_loss(r.loss, static_cast<int>(r.loss.size())) << "\n";
      out << (out_path / "pmp.ckpt").generic_string() << "\n" << (out_path / "train_log.csv").generic_string() << "\n";
    } else if (gcheck->parsed()) {
      PmpConfig pc = ctx.pmp();
      if (layers > 0) pc.layers = layers;
      const PmpModel model = pmp_init(pc, derive_seed(ctx.seed, "init"));
      const auto batch = example_batch(pc, 2, 16, derive_seed(ctx.seed, "batch"));
      const GradCheckResult r = grad_check(model, batch, epsilon, samples, derive_seed(ctx.seed, "sample"));
      out << "max relative error " << r.max_relative_error << " over " << r.checked << " parameters (worst "
          << r.worst_tensor << ")\n";
      if (!common.out.empty()) {
        write_json(out_path, {{"layers", pc.layers}, {"epsilon", epsilon}, {"checked", r.checked},
                              {"max_relative_error", r.max_relative_error}, {"worst_tensor", r.worst_tensor}});
        out << out_path.generic_string() << "\n";
      }
    } else if (denoise->parsed()) {
      const PmpModel pmp = resolve_checkpoint(ctx, checkpoint);
      const MotionSequence m = single_motion(input);
      save_motion(pmp_refine(pmp, m, conditioning_for(pmp, m, tags)), out_path);
      out << out_path.generic_string() << "\n";
    } else if (extract->parsed()) {
      const SceneSpec scene = resolve_scene(ctx, scene_path, fixture);
      const RevisionConfig rc = ctx.revision();
      save_motions(extract_motion(load_clip(clip_dir), scene, rc.extraction, rc.fine.splat_radius), out_path);
      out << out_path.generic_string() << "\n";
    } else if (rasterize->parsed()) {
      const SceneSpec scene = resolve_scene(ctx, scene_path, fixture);
      const RevisionConfig rc = ctx.revision();
      save_channels(full_motion_channels(scene, load_motions(motion_path), rc.fine, rc.confidence_triple), out_path);
      out << out_path.generic_string() << "\n";
    } else if (run->parsed()) {
      const SceneSpec scene = resolve_scene(ctx, scene_path, fixture);
      const RevisionConfig rc = ctx.revision();
      const PmpModel pmp = resolve_checkpoint(ctx, checkpoint);
      UserCondition user;
      if (ctx.cfg.contains("user_condition")) user = user_condition_from_json(ctx.cfg.at("user_condition"));
      else if (target == "gt") user = target_from_ground_truth(scene);
      const RunResult r = run_revision(scene, user, rc, pmp, SyntheticGenerator{}, out_path);
      err << "coarse traj_mse " << r.report.coarse_traj_mse << ", final traj_mse " << r.report.traj_mse << "\n";
      out << out_path.generic_string() << "\n" << (out_path / "report.json").generic_string() << "\n";
    } else if (extend->parsed()) {
      const PmpModel pmp = resolve_checkpoint(ctx, checkpoint);
      const MotionSequence m = single_motion(input);
      save_motion(extend_motion(m, length, pmp, conditioning_for(pmp, m, tags)), out_path);
      out << out_path.generic_string() << "\n";
    } else if (stitch_cmd->parsed()) {
      std::vector<VideoClip> clips;
      for (const auto& d : clip_dirs) clips.push_back(load_clip(d));
      const WindowPlan plan = plan_windows(window + (static_cast<int>(clips.size()) - 1) * stride, window, stride);
      save_clip(stitch(clips, plan), out_path);
      write_json(out_path / "plan.json", plan_to_json(plan));
      out << out_path.generic_string() << "\n";
    } else if (eval->parsed()) {
      Json report;
      const fs::path a = eval_paths[0], b = eval_paths[1];
      if (fs::is_directory(a) && fs::is_directory(b)) {
        const VideoClip pred = load_clip(a), ref = load_clip(b);
        std::vector<MotionSequence> pm, gm;
        if (fs::exists(a / "motion.json") && fs::exists(b / "motion.json")) {
          pm = load_motions(a / "motion.json");
          gm = load_motions(b / "motion.json");
        }
        const EvalReport r = eval_metrics(pred, ref, pm, gm, foreground_masks(pred), foreground_masks(ref));
        report = {{"psnr", r.psnr}, {"ssim", r.ssim}, {"mask_miou", r.mask_miou}};
        if (!pm.empty()) report["traj_mse"] = r.traj_mse;
      } else {
        report = {{"traj_mse", traj_mse(load_motions(a), load_motions(b))}};
      }
      err << report.dump() << "\n";
      if (!common.out.empty()) {
        write_json(out_path, report);
        out << out_path.generic_string() << "\n";
      } else {
        out << report.dump() << "\n";
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << to_string(ErrorCode::IoError) << ": " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    err << "error: " << to_string(ErrorCode::ParseError) << ": " << e.what() << "\n";
    return 1;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace revision
