#include "revision/corpus.hpp"
#include "revision/geometry.hpp"
#include "revision/io.hpp"
#include "revision/longvideo.hpp"
#include "revision/metrics.hpp"
#include "revision/perturb.hpp"
#include "revision/pipeline.hpp"
#include "revision/pmp.hpp"
#include "revision/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace revision;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;

PmpConfig prior_config() {
  PmpConfig c;
  c.layers = 3;
  c.model_dim = 96;
  c.heads = 4;
  c.ffn_dim = 192;
  return c;
}

TrainConfig prior_training() {
  TrainConfig t;
  t.steps = 5000;
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

int failures = 0;
int errors = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  failures += !pass;
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
}

void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    ++errors;
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

void gradient_exactness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string detail;
  for (int layers : {1, 2, 4}) {
    PmpConfig c;
    c.layers = layers;
    const PmpModel m = pmp_init(c, derive_seed(kSeed, "init"));
    const auto batch = example_batch(c, 2, 16, derive_seed(kSeed, "batch"));
    const GradCheckResult r = grad_check(m, batch, 1e-4, 200, derive_seed(kSeed, "sample"));
    worst = std::max(worst, r.max_relative_error);
    detail += "L" + std::to_string(layers) + " " + fmt(r.max_relative_error) + " (" + std::to_string(r.checked) + ") ";
  }
  const double t = seconds_since(start);
  report(1, "gradient exactness", worst < 1e-4 && t < 60.0, detail + "in " + fmt(t) + " s");
}

PmpModel denoising_improvement() {
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = training_motions(512, derive_seed(kSeed, "corpus"));
  TrainResult r = pmp_train(pmp_init(prior_config(), derive_seed(kSeed, "init")), corpus, prior_training(),
                            derive_seed(kSeed, "train"));
  const double t = seconds_since(start);

  const auto held = training_motions(128, derive_seed(kSeed, "held-out"));
  bool each = true;
  double mean = 0.0;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    PerturbConfig pc;
    pc.probabilities = {0.0, 0.0, 0.0};
    pc.probabilities[k] = 1.0;
    double perturbed = 0.0, refined = 0.0;
    for (std::size_t i = 0; i < held.size(); ++i) {
      const TrainingMotion& tm = held[i];
      const Perturbed p = sample_perturbation(tm.motion, pc, derive_seed(derive_seed(kSeed, "eval"), i));
      const Conditioning cond =
          make_conditioning(r.model.config(), tm.tags, motion_strength(tm.motion).mean, tm.motion.model->category);
      perturbed += motion_mse(p.sequence.frames, tm.motion.frames);
      refined += motion_mse(pmp_refine(r.model, p.sequence, cond).frames, tm.motion.frames);
    }
    const double improvement = 1.0 - refined / perturbed;
    each = each && refined < perturbed;
    mean += improvement / 3.0;
    detail += std::string(to_string(static_cast<PerturbationKind>(k))) + " " + fmt(improvement) + ", ";
  }
  report(2, "denoising improvement", each && mean >= 0.5 && t < 600.0,
         detail + "mean " + fmt(mean) + ", trained in " + fmt(t) + " s");
  return std::move(r.model);
}

void forward_noise_statistics() {
  const NoiseSchedule schedule = NoiseSchedule::linear();
  ParametricModelSpec spec;
  spec.pose_dim = 1;
  const double z0 = 4.0;
  const MotionSequence seq{std::make_shared<const ParametricModelSpec>(spec), 30.0,
                           Eigen::MatrixXd::Constant(100000, 1, z0)};
  bool pass = true;
  std::string detail;
  for (int t : {10, 100, 500}) {
    const Eigen::VectorXd x = forward_noise(seq, t, schedule, derive_seed(kSeed, static_cast<std::uint64_t>(t))).frames.col(0);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / (x.size() - 1);
    const double want_mean = std::sqrt(schedule.alpha_bar(t)) * z0;
    const double want_var = 1.0 - schedule.alpha_bar(t);
    const double em = std::abs(mean - want_mean) / want_mean, ev = std::abs(var - want_var) / want_var;
    pass = pass && em < 0.02 && ev < 0.02;
    detail += "t=" + std::to_string(t) + " mean " + fmt(em) + " var " + fmt(ev) + "; ";
  }
  report(3, "forward-noise statistics", pass, detail + "relative errors");
}

LabelGrid brute_force_masks(const std::vector<LabeledPoints>& objects, const CameraSpec& cam, double r) {
  LabelGrid out(cam.width, cam.height, 0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& obj : objects)
        for (int i = 0; i < obj.size(); ++i) {
          const Eigen::Vector3d p = obj.positions.col(i);
          const double u = cam.focal * p.x() / p.z() + cam.principal.x();
          const double v = cam.focal * p.y() / p.z() + cam.principal.y();
          const double dx = x + 0.5 - u, dy = y + 0.5 - v;
          if (dx * dx + dy * dy <= r * r && p.z() < best) {
            best = p.z();
            out(x, y) = static_cast<std::uint8_t>(obj.labels[i]);
          }
        }
    }
  return out;
}

void occlusion_oracle() {
  SceneSampling sampling;
  sampling.min_objects = 3;
  sampling.max_objects = 3;
  const GeneratorConfig coarse = GeneratorConfig::coarse();
  int equal = 0, frames = 0;
  for (int s = 0; s < 100; ++s) {
    const SceneSpec scene = random_scene(derive_seed(derive_seed(kSeed, "occlusion"), s), sampling);
    const auto gt = gt_at_frames(scene, coarse.frame_count(scene.duration));
    const auto points = scene_points(scene, gt);
    const CameraSpec cam = scene.camera.scaled(coarse.resolution_scale);
    bool same = true;
    for (std::size_t f = 0; f < points.size(); f += 5) {
      same = same && render_part_masks(points[f], cam, coarse.splat_radius) ==
                         brute_force_masks(points[f], cam, coarse.splat_radius);
      ++frames;
    }
    equal += same;
  }
  report(4, "occlusion oracle", equal == 100,
         std::to_string(equal) + "/100 scenes identical over " + std::to_string(frames) + " frames");
}

BinaryMask convex_mask(Rng& rng, int w, int h) {
  const int sides = uniform_int(rng, 3, 9);
  const double cx = w * (0.4 + 0.2 * uniform01(rng)), cy = h * (0.4 + 0.2 * uniform01(rng));
  const double rx = 6 + 18 * uniform01(rng), ry = 6 + 18 * uniform01(rng), rot = 6.3 * uniform01(rng);
  Eigen::Matrix2Xd pts(2, sides);
  for (int i = 0; i < sides; ++i) {
    const double a = rot + 6.283185307179586 * (i + 0.4 * uniform01(rng)) / sides;
    pts.col(i) << cx + rx * std::cos(a), cy + ry * std::sin(a);
  }
  return polygon_target_mask({{1, pts}}, w, h);
}

void twenty_one_points() {
  Rng rng(derive_seed(kSeed, "masks"));
  const int w = 64, h = 64;
  const DepthMap depth{Grid<double>(w, h, 2.5), 1e-3};
  int exact = 0, total = 0, convex = 0;
  double worst = 1.0;
  for (int trial = 0; trial < 300; ++trial) {
    BinaryMask m(w, h, 0);
    if (trial % 3 == 0) {
      m = convex_mask(rng, w, h);
      ++convex;
    } else {
      const double fill = trial % 3 == 1 ? 0.02 : 0.5;
      const int x0 = uniform_int(rng, 0, w - 2), y0 = uniform_int(rng, 0, h - 2);
      const int x1 = uniform_int(rng, x0 + 1, w), y1 = uniform_int(rng, y0 + 1, h);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m(x, y) = uniform01(rng) < fill ? 1 : 0;
      m(x0, y0) = 1;
    }
    const Object25D o = object_points_2d(m, mask_bbox(m), depth);
    ++total;
    exact += o.points.rows() == kObjectPoints && o.points.allFinite();
    if (trial % 3 == 0) {
      const LabelGrid poly =
          polygon_target_mask({{1, o.points.topRows(kContourVertices).leftCols(2).transpose()}}, w, h);
      int inter = 0, uni = 0;
      for (std::size_t i = 0; i < m.data.size(); ++i) {
        inter += poly.data[i] && m.data[i];
        uni += poly.data[i] || m.data[i];
      }
      worst = std::min(worst, static_cast<double>(inter) / uni);
    }
  }
  report(5, "21-point representation", exact == total && worst >= 0.9,
         std::to_string(exact) + "/" + std::to_string(total) + " masks give 21 points; worst convex IoU " + fmt(worst) +
             " over " + std::to_string(convex));
}

std::vector<double> fixture_finals(const PmpModel& pmp, const ConfidenceTriple& triple, std::vector<double>* coarse) {
  std::vector<double> out;
  for (int i = 0; i < 20; ++i) {
    RevisionConfig rc;
    rc.seed = kSeed;
    rc.confidence_triple = triple;
    const RunResult r = run_revision(fixture_scene(i), UserCondition{}, rc, pmp, SyntheticGenerator{});
    out.push_back(r.report.traj_mse);
    if (coarse) coarse->push_back(r.report.coarse_traj_mse);
  }
  return out;
}

std::vector<double> three_stage_improvement(const PmpModel& pmp) {
  std::vector<double> coarse;
  const std::vector<double> finals = fixture_finals(pmp, kDefaultTriple, &coarse);
  int wins = 0;
  std::vector<double> imp;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    wins += finals[i] < coarse[i];
    imp.push_back(1.0 - finals[i] / coarse[i]);
  }
  std::sort(imp.begin(), imp.end());
  const double median = 0.5 * (imp[9] + imp[10]);
  report(6, "three-stage improvement", wins >= 18 && median >= 0.3,
         std::to_string(wins) + "/20 improved, median improvement " + fmt(median));
  return finals;
}

void confidence_robustness(const PmpModel& pmp, const std::vector<double>& default_finals) {
  const std::vector<ConfidenceTriple> triples{{1.0, 0.5, 0.0}, {0.8, 0.5, 0.2}, {3.0, 2.0, 1.0}};
  std::vector<double> mean;
  for (const auto& t : triples) {
    const auto finals = t == kDefaultTriple && !default_finals.empty() ? default_finals : fixture_finals(pmp, t, nullptr);
    double s = 0.0;
    for (double v : finals) s += v;
    mean.push_back(s / finals.size());
  }
  double spread = 0.0;
  for (std::size_t a = 0; a < mean.size(); ++a)
    for (std::size_t b = a + 1; b < mean.size(); ++b)
      spread = std::max(spread, std::abs(mean[a] - mean[b]) / std::min(mean[a], mean[b]));
  report(7, "confidence robustness", spread < 0.25,
         "mean final traj_mse " + fmt(mean[0]) + " / " + fmt(mean[1]) + " / " + fmt(mean[2]) +
             ", max pairwise relative difference " + fmt(spread));
}

double max_strength(const MotionSequence& m) { return motion_strength(m).per_transition.maxCoeff(); }

// Largest dimension-normalized per-frame distance between two equally shaped motions.
double frame_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return ((a - b).rowwise().norm() / std::sqrt(static_cast<double>(a.cols()))).maxCoeff();
}

void long_motion(const PmpModel& pmp) {
  const WindowPlan plan = plan_windows(128);
  const GeneratorConfig fine = GeneratorConfig::fine();
  bool lengths = plan.total == 128 && plan.overlap() == 8 && plan.stride == 24;
  bool unity = true;
  for (int j = 1; j <= plan.overlap(); ++j)
    unity = unity && (1.0 - blend_weight(j, plan.overlap())) + blend_weight(j, plan.overlap()) == 1.0;
  int objects = 0, sliced_bounded = 0, agreeing = 0, agreeing_bounded = 0, generated_bounded = 0;
  double worst_excess = 0.0;
  for (int i = 0; i < 20; ++i) {
    SceneSpec scene = fixture_scene(i);
    const auto gt = synthesize_gt_motion(scene, scene.motion_seed);
    std::vector<MotionSequence> extended;
    std::vector<double> tolerance;
    for (std::size_t o = 0; o < gt.size(); ++o) {
      const auto& obj = scene.objects[o];
      const Conditioning cond = make_conditioning(pmp.config(), obj.tags, motion_strength(gt[o]).mean, obj.model->category);
      tolerance.push_back(frame_gap(pmp_refine(pmp, gt[o], cond).frames, gt[o].frames));
      extended.push_back(extend_motion(gt[o], 128, pmp, cond));
      lengths = lengths && extended.back().length() == 128;
    }
    scene.duration = 128;
    const LongVideo lv =
        generate_long_video(scene, extended, plan, fine, kDefaultTriple, SyntheticGenerator{}, derive_seed(kSeed, i));
    lengths = lengths && lv.stitched.length() == 128 && lv.clips.size() == plan.windows.size();

    for (std::size_t o = 0; o < gt.size(); ++o) {
      ++objects;
      lengths = lengths && lv.stitched_motion.at(o).length() == 128;
      std::vector<MotionSequence> generated, slices;
      double within = 0.0, within_sliced = 0.0, gap = 0.0;
      for (std::size_t k = 0; k < plan.windows.size(); ++k) {
        generated.push_back(lv.realized[k][o]);
        within = std::max(within, max_strength(generated.back()));
        const auto [a, b] = plan.windows[k];
        slices.push_back({extended[o].model, extended[o].fps, extended[o].frames.middleRows(a, b - a)});
        within_sliced = std::max(within_sliced, max_strength(slices.back()));
        if (k > 0)
          gap = std::max(gap, frame_gap(generated[k - 1].frames.bottomRows(plan.overlap()),
                                        generated[k].frames.topRows(plan.overlap())));
      }
      const MotionStrength stitched = motion_strength(stitch_motion(generated, plan));
      const MotionStrength stitched_slices = motion_strength(stitch_motion(slices, plan));
      double seam = 0.0, seam_sliced = 0.0;
      for (int t : seam_transitions(plan)) {
        seam = std::max(seam, stitched.per_transition[t]);
        seam_sliced = std::max(seam_sliced, stitched_slices.per_transition[t]);
      }
      sliced_bounded += seam_sliced <= within_sliced;
      generated_bounded += seam <= within;
      worst_excess = std::max(worst_excess, seam / within - 1.0);
      if (gap <= tolerance[o]) {
        ++agreeing;
        agreeing_bounded += seam <= within;
      }
    }
  }
  report(8, "long-motion pipeline",
         lengths && unity && sliced_bounded == objects && agreeing_bounded == agreeing,
         std::string("128-frame clips and motions ") + (lengths ? "yes" : "no") + ", partition of unity " +
             (unity ? "exact" : "broken") + ", seam bound on guide windows " + std::to_string(sliced_bounded) + "/" +
             std::to_string(objects) + ", on generated windows agreeing within refinement tolerance " +
             std::to_string(agreeing_bounded) + "/" + std::to_string(agreeing) + " (all generated windows " +
             std::to_string(generated_bounded) + "/" + std::to_string(objects) + ", worst excess " +
             fmt(std::max(worst_excess, 0.0)) + ")");
}

void metrics_consistency() {
  const GrayImage a(32, 24, 100), b(32, 24, 110);
  const double p = psnr(a, b);
  Rng rng(derive_seed(kSeed, "metrics"));
  GrayImage x(48, 32, 0);
  for (auto& v : x.data) v = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  const double s = ssim(x, x);
  int exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    LabelGrid m(24, 16, 0), n(24, 16, 0);
    int inter = 0, uni = 0;
    const double density = uniform01(rng);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      m.data[i] = static_cast<std::uint8_t>(uniform01(rng) < density ? uniform_int(rng, 1, 6) : 0);
      n.data[i] = static_cast<std::uint8_t>(uniform01(rng) < density ? uniform_int(rng, 1, 6) : 0);
      inter += m.data[i] && n.data[i];
      uni += m.data[i] || n.data[i];
    }
    exact += mask_iou(m, n) == (uni == 0 ? 1.0 : static_cast<double>(inter) / uni);
  }
  report(9, "metrics self-consistency", std::abs(p - 28.13) <= 0.01 && s == 1.0 && exact == 50,
         "PSNR " + fmt(p) + " dB, SSIM(x,x) " + fmt(s) + ", mIoU oracle " + std::to_string(exact) + "/50");
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void end_to_end_determinism(const PmpModel& pmp) {
  const fs::path dir = fs::temp_directory_path() / "revision_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_checkpoint(pmp, dir / "pmp.ckpt");
  RevisionConfig rc;
  rc.pmp_checkpoint = "pmp.ckpt";
  write_json(dir / "config.json", {{"seed", kSeed}, {"revision", revision_config_to_json(rc)}});
  for (const char* out : {"a", "b"}) {
    const std::string cmd = std::string("\"") + REVISION_CLI + "\" run --config \"" + (dir / "config.json").string() +
                            "\" --fixture 3 --target gt --out \"" + (dir / out).string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      report(10, "end-to-end determinism", false, "run invocation failed");
      return;
    }
  }
  int compared = 0, same = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    const std::string name = rel.filename().string();
    if (!entry.is_regular_file() || (name != "report.json" && rel.extension() != ".json")) continue;
    ++compared;
    same += fs::exists(dir / "b" / rel) && slurp(entry.path()) == slurp(dir / "b" / rel);
  }
  const bool has_report = fs::exists(dir / "a" / "report.json") && fs::exists(dir / "a" / "final" / "motion.json");
  fs::remove_all(dir);
  report(10, "end-to-end determinism", has_report && compared > 0 && same == compared,
         std::to_string(same) + "/" + std::to_string(compared) + " JSON files byte-identical");
}

}  // namespace

int main() {
  guarded(1, "gradient exactness", gradient_exactness);
  PmpModel pmp = pmp_init(prior_config(), derive_seed(kSeed, "init"));
  guarded(2, "denoising improvement", [&] { pmp = denoising_improvement(); });
  guarded(3, "forward-noise statistics", forward_noise_statistics);
  guarded(4, "occlusion oracle", occlusion_oracle);
  guarded(5, "21-point representation", twenty_one_points);
  std::vector<double> finals;
  guarded(6, "three-stage improvement", [&] { finals = three_stage_improvement(pmp); });
  guarded(7, "confidence robustness", [&] { confidence_robustness(pmp, finals); });
  guarded(8, "long-motion pipeline", [&] { long_motion(pmp); });
  guarded(9, "metrics self-consistency", metrics_consistency);
  guarded(10, "end-to-end determinism", [&] { end_to_end_determinism(pmp); });
  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria failed") << std::endl;
  return errors == 0 ? 0 : 1;
}
