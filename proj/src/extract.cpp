#include "revision/corpus.hpp"
#include "revision/error.hpp"
#include "revision/pipeline.hpp"

#include <cmath>
#include <limits>

namespace revision {

CameraSpec clip_camera(const SceneSpec& scene, const VideoClip& clip) {
  if (clip.width < 1 || scene.camera.width < 1) fail(ErrorCode::ShapeMismatch, "clip has no pixels");
  const CameraSpec cam = scene.camera.scaled(static_cast<double>(clip.width) / scene.camera.width);
  if (cam.width != clip.width || cam.height != clip.height)
    fail(ErrorCode::ShapeMismatch, "clip aspect ratio does not match the scene camera");
  return cam;
}

namespace {

struct Observation {
  std::vector<Eigen::Vector2d> centroid;  // indexed by label
  std::vector<int> count;
  int pixels = 0;
};

// Mean projected position of every part label.
std::vector<Eigen::Vector2d> part_means(const LabeledPoints& pts, const CameraSpec& cam, int part_count) {
  std::vector<Eigen::Vector2d> mean(part_count + 1, Eigen::Vector2d::Zero());
  std::vector<int> counts(part_count + 1, 0);
  for (int i = 0; i < pts.size(); ++i) {
    const int l = pts.labels[i];
    mean[l] += project_point(pts.positions.col(i), cam);
    ++counts[l];
  }
  for (int l = 1; l <= part_count; ++l)
    if (counts[l] > 0) mean[l] /= counts[l];
  return mean;
}

// Visible-pixel centroid minus all-point centroid of each part under the current estimates:
// how occlusion and clipping shift what the camera sees.
std::vector<std::vector<Eigen::Vector2d>> occlusion_bias(const SceneSpec& scene,
                                                         const std::vector<Eigen::VectorXd>& current,
                                                         const CameraSpec& cam, double radius) {
  std::vector<LabeledPoints> pts;
  for (std::size_t o = 0; o < scene.objects.size(); ++o) pts.push_back(object_points(scene.objects[o], current[o]));
  const SplatBuffer buf = splat(pts, cam, radius);
  std::vector<std::vector<Eigen::Vector2d>> sum(scene.objects.size());
  std::vector<std::vector<int>> count(scene.objects.size());
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    sum[o].assign(scene.objects[o].model->part_count + 1, Eigen::Vector2d::Zero());
    count[o].assign(scene.objects[o].model->part_count + 1, 0);
  }
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const int o = buf.object(x, y);
      if (o < 0) continue;
      sum[o][buf.label(x, y)] += Eigen::Vector2d(x + 0.5, y + 0.5);
      ++count[o][buf.label(x, y)];
    }
  std::vector<std::vector<Eigen::Vector2d>> bias(scene.objects.size());
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const int pc = scene.objects[o].model->part_count;
    const auto mean = part_means(pts[o], cam, pc);
    bias[o].assign(pc + 1, Eigen::Vector2d::Zero());
    for (int l = 1; l <= pc; ++l)
      if (count[o][l] > 0) bias[o][l] = sum[o][l] / count[o][l] - mean[l];
  }
  return bias;
}

// Levenberg-Marquardt fit of joint angles to observed part centroids under the pose prior,
// with a pull toward the previous frame.
Eigen::VectorXd fit_pose(const SceneObject& object, const Observation& obs, const std::vector<Eigen::Vector2d>& bias,
                         const Eigen::VectorXd& previous, const CameraSpec& cam, const ExtractionConfig& config) {
  const int pc = object.model->part_count;
  const PosePrior& prior = corpus_pose_prior(object.model->category);
  std::vector<int> visible;
  for (int l = 1; l <= pc; ++l)
    if (obs.count[l] > 0) visible.push_back(l);
  const int nv = static_cast<int>(visible.size());
  const int pd = static_cast<int>(previous.size());
  const double wp = std::sqrt(config.pose_prior_weight);
  const double wt = std::sqrt(config.prior_weight);

  auto residual = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd r(2 * nv + 2 * pd);
    const auto mean = part_means(object_points(object, theta), cam, pc);
    for (int i = 0; i < nv; ++i) {
      const int l = visible[i];
      r.segment<2>(2 * i) = (mean[l] + bias[l] - obs.centroid[l]) / config.pixel_sigma;
    }
    r.segment(2 * nv, pd) = wp * (theta - prior.mean).cwiseQuotient(prior.stddev);
    r.tail(pd) = wt * (theta - previous);
    return r;
  };

  Eigen::VectorXd theta = previous;
  Eigen::VectorXd r = residual(theta);
  double cost = r.squaredNorm();
  double mu = 1e-2;
  constexpr double h = 1e-6;
  for (int it = 0; it < config.iterations; ++it) {
    Eigen::MatrixXd jac(r.size(), pd);
    for (int k = 0; k < pd; ++k) {
      Eigen::VectorXd t = theta;
      t[k] += h;
      jac.col(k) = (residual(t) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 8 && !improved; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * (jtj.diagonal().array() + 1.0).matrix();
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd cand = theta + step;
      const Eigen::VectorXd rc = residual(cand);
      const double c = rc.squaredNorm();
      if (c < cost) {
        theta = cand;
        r = rc;
        const double gain = cost - c;
        cost = c;
        mu = std::max(mu / 3.0, 1e-9);
        improved = true;
        if (gain < 1e-12 * (1.0 + cost) || step.norm() < 1e-9) it = config.iterations;
      } else {
        mu *= 4.0;
      }
    }
    if (!improved) break;
  }
  return theta;
}

// The 21 points of a generic object's mask, with the renderer's splat dilation removed and
// the contour started straight above the center like the object template.
Eigen::VectorXd lift_generic(const BinaryMask& mask, double radius, double depth, const CameraSpec& cam) {
  const BBox box = mask_bbox(mask);
  const Eigen::Vector2d center(0.5 * (box.x0 + box.x1), 0.5 * (box.y0 + box.y1));
  std::vector<Eigen::Vector2d> contour = pixel_centers(extract_contour(mask));
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < contour.size(); ++i) {
    const Eigen::Vector2d d = contour[i] - center;
    if (d.y() >= 0.0 && contour.size() > 1) continue;
    const double off = std::abs(d.x()) - 1e-6 * d.y();
    if (off < best) {
      best = off;
      start = i;
    }
  }
  std::rotate(contour.begin(), contour.begin() + static_cast<std::ptrdiff_t>(start), contour.end());
  const auto vertices = simplify_contour(contour);

  Eigen::VectorXd out(3 * kObjectPoints);
  auto put = [&](int i, const Eigen::Vector2d& uv) { out.segment<3>(3 * i) = lift(uv, depth, cam); };
  const double shrink = std::max(0.0, radius - 0.5);
  for (int i = 0; i < kContourVertices; ++i) {
    const Eigen::Vector2d d = vertices[i] - center;
    const double n = d.norm();
    put(i, n > shrink ? Eigen::Vector2d(center + d * (1.0 - shrink / n)) : center);
  }
  const double hx = std::max(0.0, 0.5 * box.width() - radius);
  const double hy = std::max(0.0, 0.5 * box.height() - radius);
  put(kContourVertices + 0, center + Eigen::Vector2d(-hx, -hy));
  put(kContourVertices + 1, center + Eigen::Vector2d(hx, -hy));
  put(kContourVertices + 2, center + Eigen::Vector2d(hx, hy));
  put(kContourVertices + 3, center + Eigen::Vector2d(-hx, hy));
  put(kObjectPoints - 1, center);
  return out;
}

}  // namespace

std::vector<MotionSequence> extract_motion(const VideoClip& clip, const SceneSpec& scene, const ExtractionConfig& config,
                                           double splat_radius) {
  check_scene(scene);
  if (clip.length() < 1) fail(ErrorCode::ExtractionFailed, "clip has no frames");
  const CameraSpec cam = clip_camera(scene, clip);
  const double radius = splat_radius * static_cast<double>(clip.width) / scene.camera.width;
  const int n_obj = static_cast<int>(scene.objects.size());
  const int frames = clip.length();

  // Intensity lookup: for every gray value, the objects whose coding can produce it.
  std::vector<std::vector<int>> owners(256);
  for (int o = 0; o < n_obj; ++o) {
    const int pc = scene.objects[o].model->part_count;
    for (int l = 1; l <= pc; ++l) owners[part_intensity(l, pc)].push_back(o);
  }

  std::vector<Eigen::VectorXd> current;
  for (const auto& o : scene.objects) current.push_back(o.initial_pose);
  std::vector<MotionSequence> out;
  for (const auto& o : scene.objects)
    out.push_back(MotionSequence{o.model, clip.fps, Eigen::MatrixXd(frames, o.model->pose_dim)});
  std::vector<int> missing(n_obj, 0);
  std::vector<int> first_seen(n_obj, -1);

  for (int f = 0; f < frames; ++f) {
    const GrayImage& img = clip.frames[f];
    if (img.width != cam.width || img.height != cam.height) fail(ErrorCode::ShapeMismatch, "clip frames differ in size");
    std::vector<Eigen::Matrix2Xd> predicted(n_obj);
    for (int o = 0; o < n_obj; ++o) {
      const LabeledPoints pts = object_points(scene.objects[o], current[o]);
      predicted[o].resize(2, pts.size());
      for (int i = 0; i < pts.size(); ++i) predicted[o].col(i) = project_point(pts.positions.col(i), cam);
    }

    std::vector<Observation> obs(n_obj);
    std::vector<BinaryMask> masks(n_obj, BinaryMask(cam.width, cam.height, 0));
    for (int o = 0; o < n_obj; ++o) {
      const int pc = scene.objects[o].model->part_count;
      obs[o].centroid.assign(pc + 1, Eigen::Vector2d::Zero());
      obs[o].count.assign(pc + 1, 0);
    }
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const int v = img(x, y);
        if (v == 0) continue;
        const Eigen::Vector2d c(x + 0.5, y + 0.5);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        auto consider = [&](int o) {
          const double d = (predicted[o].colwise() - c).colwise().squaredNorm().minCoeff();
          if (d < best_d) {
            best_d = d;
            best = o;
          }
        };
        if (!owners[v].empty()) {
          for (int o : owners[v]) consider(o);
        } else {
          for (int o = 0; o < n_obj; ++o) consider(o);
        }
        const int pc = scene.objects[best].model->part_count;
        const int label = std::clamp(static_cast<int>(std::lround((v - 64.0) * pc / 191.0)), 1, pc);
        obs[best].centroid[label] += c;
        ++obs[best].count[label];
        ++obs[best].pixels;
        masks[best](x, y) = 1;
      }
    for (int o = 0; o < n_obj; ++o)
      for (std::size_t l = 0; l < obs[o].count.size(); ++l)
        if (obs[o].count[l] > 0) obs[o].centroid[l] /= obs[o].count[l];

    // Two passes: the occlusion bias is re-estimated at the first pass's poses.
    const std::vector<Eigen::VectorXd> previous = current;
    for (int pass = 0; pass < 2; ++pass) {
      const auto bias = occlusion_bias(scene, current, cam, radius);
      for (int o = 0; o < n_obj; ++o) {
        const SceneObject& so = scene.objects[o];
        if (obs[o].pixels == 0 || !so.model->articulated()) continue;
        current[o] = fit_pose(so, obs[o], bias[o], previous[o], cam, config);
      }
    }

    for (int o = 0; o < n_obj; ++o) {
      const SceneObject& so = scene.objects[o];
      if (obs[o].pixels == 0) {
        ++missing[o];
        out[o].frames.row(f) = current[o].transpose();
        continue;
      }
      if (!so.model->articulated()) current[o] = lift_generic(masks[o], radius, so.placement.z(), cam);
      if (first_seen[o] < 0) first_seen[o] = f;
      out[o].frames.row(f) = current[o].transpose();
    }
  }

  for (int o = 0; o < n_obj; ++o) {
    if (missing[o] >= config.missing_fraction * frames || first_seen[o] < 0)
      fail(ErrorCode::ExtractionFailed, "object " + std::to_string(o) + " has no pixels in " +
                                            std::to_string(missing[o]) + " of " + std::to_string(frames) + " frames");
    // Leading gaps take the first observed pose.
    for (int f = 0; f < first_seen[o]; ++f) out[o].frames.row(f) = out[o].frames.row(first_seen[o]);
  }
  return out;
}

}  // namespace revision
