#pragma once

// 2.5D object parameterization, pinhole projection and condition-channel rasterization.
// Pixel (x, y) covers [x, x+1) x [y, y+1); its center sits at (x + 0.5, y + 0.5).

#include "revision/image.hpp"
#include "revision/motion.hpp"

#include <array>
#include <vector>

namespace revision {

struct CameraSpec {
  double focal = 90.0;
  Eigen::Vector2d principal{64.0, 36.0};
  int width = 128;
  int height = 72;

  /// Same optics at a different resolution (focal length and principal point scale along).
  CameraSpec scaled(double s) const;
};

void check_camera(const CameraSpec& camera);

/// Half-open pixel box [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const BBox&) const = default;
};

BBox mask_bbox(const BinaryMask& mask);

constexpr int kContourVertices = 16;
constexpr int kObjectPoints = 21;

/// Rows: 16 contour vertices, bbox corners TL, TR, BR, BL, center.
struct Object25D {
  Eigen::Matrix<double, kObjectPoints, 3> points;
};

/// Largest 8-connected component, Moore-traced counterclockwise on screen starting from its
/// topmost-leftmost pixel. Points are integer pixel coordinates (x, y).
std::vector<Eigen::Vector2i> extract_contour(const BinaryMask& mask);

/// Uniform arc-length resampling of the closed contour, starting at its first point. Shorter
/// contours repeat each vertex in order.
std::vector<Eigen::Vector2d> simplify_contour(const std::vector<Eigen::Vector2d>& contour, int n = kContourVertices);

/// Contour pixels mapped to their centers.
std::vector<Eigen::Vector2d> pixel_centers(const std::vector<Eigen::Vector2i>& contour);

/// Contour pixel centers pushed outward along the contour normal by an L1 length of half a
/// pixel: to the pixel edge on straight runs and halfway to the next pixel centers on diagonal
/// steps. A single pixel yields its four corners.
std::vector<Eigen::Vector2d> outer_boundary(const std::vector<Eigen::Vector2i>& contour);

Eigen::Vector3d lift(const Eigen::Vector2d& uv, double z, const CameraSpec& camera);

/// The 21 image-space points (x, y in pixels; z set to the sampled depth).
Object25D object_points_2d(const BinaryMask& mask, const BBox& bbox, const DepthMap& depth);

Object25D object25d_from_mask(const BinaryMask& mask, const BBox& bbox, const DepthMap& depth,
                              const CameraSpec& camera);

struct ProjectedPoint {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  int label = 0;
};

std::vector<ProjectedPoint> project(const LabeledPoints& points, const CameraSpec& camera);

Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraSpec& camera);

/// Per-pixel winner of the z-buffer; object -1 marks background.
struct SplatBuffer {
  Grid<int> object;
  Grid<int> label;
  Grid<double> depth;
};

SplatBuffer splat(const std::vector<LabeledPoints>& objects, const CameraSpec& camera, double splat_radius);

/// Each point covers the pixels whose centers lie within splat_radius; smallest z wins,
/// ties go to the lower (object index, point index).
LabelGrid render_part_masks(const std::vector<LabeledPoints>& objects, const CameraSpec& camera,
                            double splat_radius);

struct PartPolygon {
  int label = 1;
  Eigen::Matrix2Xd points;  // pixel coordinates
};

/// Convex hull, counterclockwise in (x, y) with collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull(const Eigen::Matrix2Xd& points);

/// Rasterizes each part's convex hull (pixel centers inside or on the hull); later parts
/// overwrite earlier ones.
LabelGrid polygon_target_mask(const std::vector<PartPolygon>& parts, int width, int height);

enum class ConditionMode { FullMotion, TargetPose, Empty };

std::string_view to_string(ConditionMode m);
ConditionMode condition_mode_from_string(std::string_view s);

/// Confidence for full motion, target pose and empty conditioning.
using ConfidenceTriple = std::array<double, 3>;
constexpr ConfidenceTriple kDefaultTriple{1.0, 0.5, 0.0};

void check_triple(const ConfidenceTriple& t);

struct ConditionChannels {
  ConditionMode mode = ConditionMode::Empty;
  ConfidenceTriple triple = kDefaultTriple;
  std::vector<LabelGrid> part_mask;      // one per frame
  std::vector<Grid<double>> confidence;  // one per frame

  int frames() const { return static_cast<int>(part_mask.size()); }
};

/// Mode-specific input: `motion` (frames x objects, camera-frame points) for FullMotion,
/// `target` (final-frame part polygons) for TargetPose, neither for Empty.
struct ConditionPayload {
  int frames = 1;
  int width = 128;
  int height = 72;
  std::vector<std::vector<LabeledPoints>> motion;
  CameraSpec camera;
  double splat_radius = 3.0;
  std::vector<PartPolygon> target;
};

ConditionChannels build_condition(ConditionMode mode, const ConditionPayload& payload,
                                  const ConfidenceTriple& triple = kDefaultTriple);

}  // namespace revision
