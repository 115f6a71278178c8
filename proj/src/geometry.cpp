#include "revision/geometry.hpp"

#include "revision/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace revision {

CameraSpec CameraSpec::scaled(double s) const {
  CameraSpec c = *this;
  c.focal = focal * s;
  c.principal = principal * s;
  c.width = std::max(1, static_cast<int>(std::lround(width * s)));
  c.height = std::max(1, static_cast<int>(std::lround(height * s)));
  return c;
}

void check_camera(const CameraSpec& c) {
  if (!(c.focal > 0.0)) fail(ErrorCode::InvalidConfig, "camera focal length must be positive");
  if (c.width < 1 || c.height < 1) fail(ErrorCode::InvalidConfig, "camera image size must be positive");
  if (!(c.principal.x() >= 0.0 && c.principal.x() <= c.width && c.principal.y() >= 0.0 &&
        c.principal.y() <= c.height))
    fail(ErrorCode::InvalidConfig, "principal point must lie inside the image");
}

BBox mask_bbox(const BinaryMask& mask) {
  BBox b{mask.width, mask.height, 0, 0};
  bool any = false;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask(x, y)) {
        any = true;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
  if (!any) fail(ErrorCode::EmptyMask, "mask has no set pixels");
  return b;
}

namespace {

// Clockwise on screen (y down), starting west.
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int direction_of(int dx, int dy) {
  for (int k = 0; k < 8; ++k)
    if (kDx[k] == dx && kDy[k] == dy) return k;
  return 0;
}

// Largest 8-connected component as a mask; ties go to the component found first in raster order.
BinaryMask largest_component(const BinaryMask& mask) {
  Grid<int> comp(mask.width, mask.height, -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y) || comp(x, y) >= 0) continue;
      const int id = next++;
      std::size_t size = 0;
      comp(x, y) = id;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        ++size;
        for (int k = 0; k < 8; ++k) {
          const int nx = cx + kDx[k];
          const int ny = cy + kDy[k];
          if (mask.contains(nx, ny) && mask(nx, ny) && comp(nx, ny) < 0) {
            comp(nx, ny) = id;
            queue.emplace_back(nx, ny);
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best = id;
      }
    }
  if (best < 0) fail(ErrorCode::EmptyMask, "mask has no set pixels");
  BinaryMask out(mask.width, mask.height, 0);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = comp.data[i] == best ? 1 : 0;
  return out;
}

}  // namespace

std::vector<Eigen::Vector2i> extract_contour(const BinaryMask& input) {
  const BinaryMask mask = largest_component(input);
  auto set = [&](int x, int y) { return mask.contains(x, y) && mask(x, y) != 0; };
  Eigen::Vector2i start(-1, -1);
  for (int y = 0; y < mask.height && start.x() < 0; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (set(x, y)) {
        start = {x, y};
        break;
      }

  // Moore neighbour tracing; the pixel west of the start is background by construction.
  auto step = [&](const Eigen::Vector2i& c, int from) -> std::pair<Eigen::Vector2i, int> {
    for (int i = 1; i <= 8; ++i) {
      const int k = (from + i) % 8;
      const Eigen::Vector2i n(c.x() + kDx[k], c.y() + kDy[k]);
      if (set(n.x(), n.y())) {
        // Backtrack: the neighbour examined just before n, expressed relative to n.
        const int pk = (from + i - 1) % 8;
        const Eigen::Vector2i b(c.x() + kDx[pk], c.y() + kDy[pk]);
        return {n, direction_of(b.x() - n.x(), b.y() - n.y())};
      }
    }
    return {c, -1};
  };

  std::vector<Eigen::Vector2i> cw{start};
  auto [first, first_back] = step(start, 0);
  if (first_back < 0) return cw;
  Eigen::Vector2i cur = first;
  int back = first_back;
  const std::size_t limit = 4 * mask.size() + 8;
  while (cw.size() < limit) {
    if (cur == start) {
      auto [n, b] = step(cur, back);
      if (n == first) break;  // Jacob's criterion: re-entering the first edge
      cw.push_back(cur);
      cur = n;
      back = b;
      continue;
    }
    cw.push_back(cur);
    auto [n, b] = step(cur, back);
    cur = n;
    back = b;
  }
  std::vector<Eigen::Vector2i> ccw{cw.front()};
  for (std::size_t i = cw.size() - 1; i >= 1; --i) ccw.push_back(cw[i]);
  return ccw;
}

std::vector<Eigen::Vector2d> pixel_centers(const std::vector<Eigen::Vector2i>& contour) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(contour.size());
  for (const auto& p : contour) out.emplace_back(p.x() + 0.5, p.y() + 0.5);
  return out;
}

std::vector<Eigen::Vector2d> outer_boundary(const std::vector<Eigen::Vector2i>& contour) {
  const std::vector<Eigen::Vector2d> c = pixel_centers(contour);
  const std::size_t n = c.size();
  if (n == 1) {
    const Eigen::Vector2d p = c[0];
    return {p + Eigen::Vector2d(-0.5, -0.5), p + Eigen::Vector2d(-0.5, 0.5), p + Eigen::Vector2d(0.5, 0.5),
            p + Eigen::Vector2d(0.5, -0.5)};
  }
  std::vector<Eigen::Vector2d> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& prev = c[(i + n - 1) % n];
    const Eigen::Vector2d& next = c[(i + 1) % n];
    Eigen::Vector2d normal;
    if (prev == next) {
      normal = c[i] - prev;  // tip of a one-pixel spur
    } else {
      const Eigen::Vector2d t = next - prev;
      normal = Eigen::Vector2d(-t.y(), t.x());
    }
    const double m = normal.cwiseAbs().sum();
    out.push_back(m > 0.0 ? Eigen::Vector2d(c[i] + 0.5 * normal / m) : c[i]);
  }
  return out;
}

std::vector<Eigen::Vector2d> simplify_contour(const std::vector<Eigen::Vector2d>& contour, int n) {
  const int m = static_cast<int>(contour.size());
  if (m < 1) fail(ErrorCode::EmptyMask, "cannot simplify an empty contour");
  if (n < 1) fail(ErrorCode::InvalidConfig, "vertex count must be positive");
  std::vector<Eigen::Vector2d> out;
  out.reserve(n);
  if (m <= n) {
    for (int k = 0; k < n; ++k) out.push_back(contour[static_cast<std::size_t>(k) * m / n]);
    return out;
  }
  std::vector<double> cum(m + 1, 0.0);
  for (int i = 0; i < m; ++i) cum[i + 1] = cum[i] + (contour[(i + 1) % m] - contour[i]).norm();
  const double total = cum[m];
  if (total == 0.0) return std::vector<Eigen::Vector2d>(n, contour.front());
  int seg = 0;
  for (int k = 0; k < n; ++k) {
    const double s = total * k / n;
    while (seg < m - 1 && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    out.push_back((1.0 - t) * contour[seg] + t * contour[(seg + 1) % m]);
  }
  return out;
}

Eigen::Vector3d lift(const Eigen::Vector2d& uv, double z, const CameraSpec& camera) {
  return {(uv.x() - camera.principal.x()) * z / camera.focal, (uv.y() - camera.principal.y()) * z / camera.focal, z};
}

Object25D object_points_2d(const BinaryMask& mask, const BBox& bbox, const DepthMap& depth) {
  if (bbox.x0 < 0 || bbox.y0 < 0 || bbox.x1 > mask.width || bbox.y1 > mask.height || bbox.x0 >= bbox.x1 ||
      bbox.y0 >= bbox.y1)
    fail(ErrorCode::BoxOutOfBounds, "bounding box outside the image or empty");
  if (!depth.values.same_size(mask)) fail(ErrorCode::DimensionMismatch, "depth map and mask sizes differ");
  const auto contour = simplify_contour(outer_boundary(extract_contour(mask)));

  std::vector<double> on_object;
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    if (mask.data[i]) on_object.push_back(depth.values.data[i]);
  auto mid = on_object.begin() + static_cast<std::ptrdiff_t>(on_object.size() / 2);
  std::nth_element(on_object.begin(), mid, on_object.end());
  double median = *mid;
  if (on_object.size() % 2 == 0) {
    const double lower = *std::max_element(on_object.begin(), mid);
    median = 0.5 * (median + lower);
  }
  auto sample = [&](const Eigen::Vector2d& uv) {
    const int x = std::clamp(static_cast<int>(std::floor(uv.x())), 0, mask.width - 1);
    const int y = std::clamp(static_cast<int>(std::floor(uv.y())), 0, mask.height - 1);
    return mask(x, y) ? depth.values(x, y) : median;
  };

  const Eigen::Vector2d center(0.5 * (bbox.x0 + bbox.x1), 0.5 * (bbox.y0 + bbox.y1));
  auto inward = [&](const Eigen::Vector2d& uv) {  // the pixel just inside an edge point
    return Eigen::Vector2d(uv + 0.5 * (center - uv).cwiseSign());
  };

  Object25D o;
  for (int i = 0; i < kContourVertices; ++i)
    o.points.row(i) << contour[i].x(), contour[i].y(), sample(inward(contour[i]));
  const Eigen::Vector2d corners[4] = {{bbox.x0, bbox.y0}, {bbox.x1, bbox.y0}, {bbox.x1, bbox.y1}, {bbox.x0, bbox.y1}};
  for (int i = 0; i < 4; ++i) o.points.row(kContourVertices + i) << corners[i].x(), corners[i].y(), median;
  o.points.row(kObjectPoints - 1) << center.x(), center.y(), sample(center);
  return o;
}

Object25D object25d_from_mask(const BinaryMask& mask, const BBox& bbox, const DepthMap& depth,
                              const CameraSpec& camera) {
  Object25D o = object_points_2d(mask, bbox, depth);
  for (int i = 0; i < kObjectPoints; ++i) {
    const double z = o.points(i, 2);
    if (!(z > 0.0)) fail(ErrorCode::NonPositiveDepth, "depth must be positive to lift");
    o.points.row(i) = lift(o.points.row(i).head<2>().transpose(), z, camera).transpose();
  }
  return o;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraSpec& camera) {
  if (!(p.z() > 0.0)) fail(ErrorCode::NonPositiveDepth, "cannot project a point with z <= 0");
  return {camera.focal * p.x() / p.z() + camera.principal.x(), camera.focal * p.y() / p.z() + camera.principal.y()};
}

std::vector<ProjectedPoint> project(const LabeledPoints& points, const CameraSpec& camera) {
  std::vector<ProjectedPoint> out;
  out.reserve(points.size());
  for (int i = 0; i < points.size(); ++i) {
    const Eigen::Vector2d uv = project_point(points.positions.col(i), camera);
    out.push_back({uv.x(), uv.y(), points.positions(2, i), points.labels[i]});
  }
  return out;
}

SplatBuffer splat(const std::vector<LabeledPoints>& objects, const CameraSpec& camera, double splat_radius) {
  SplatBuffer b{Grid<int>(camera.width, camera.height, -1), Grid<int>(camera.width, camera.height, 0),
                Grid<double>(camera.width, camera.height, 0.0)};
  const double r2 = splat_radius * splat_radius;
  // Objects and points are visited in ascending order, so a strict depth test keeps the
  // lowest (object, point) among equal depths.
  for (int o = 0; o < static_cast<int>(objects.size()); ++o) {
    const auto pts = project(objects[o], camera);
    for (const ProjectedPoint& p : pts) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(p.u - splat_radius - 0.5)));
      const int x1 = std::min(camera.width - 1, static_cast<int>(std::floor(p.u + splat_radius - 0.5)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(p.v - splat_radius - 0.5)));
      const int y1 = std::min(camera.height - 1, static_cast<int>(std::floor(p.v + splat_radius - 0.5)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dx = x + 0.5 - p.u;
          const double dy = y + 0.5 - p.v;
          if (dx * dx + dy * dy > r2) continue;
          if (b.object(x, y) >= 0 && !(p.z < b.depth(x, y))) continue;
          b.object(x, y) = o;
          b.label(x, y) = p.label;
          b.depth(x, y) = p.z;
        }
    }
  }
  return b;
}

LabelGrid render_part_masks(const std::vector<LabeledPoints>& objects, const CameraSpec& camera,
                            double splat_radius) {
  const SplatBuffer b = splat(objects, camera, splat_radius);
  LabelGrid out(camera.width, camera.height, 0);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(std::clamp(b.label.data[i], 0, 255));
  return out;
}

std::vector<Eigen::Vector2d> convex_hull(const Eigen::Matrix2Xd& points) {
  std::vector<Eigen::Vector2d> p;
  for (Eigen::Index i = 0; i < points.cols(); ++i) p.emplace_back(points.col(i));
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

LabelGrid polygon_target_mask(const std::vector<PartPolygon>& parts, int width, int height) {
  LabelGrid out(width, height, 0);
  for (const PartPolygon& part : parts) {
    if (part.points.cols() < 3) fail(ErrorCode::DegeneratePart, "part needs at least 3 points");
    const auto hull = convex_hull(part.points);
    if (hull.size() < 3) fail(ErrorCode::DegeneratePart, "part points are collinear");
    double xmin = hull[0].x(), xmax = xmin, ymin = hull[0].y(), ymax = ymin;
    for (const auto& v : hull) {
      xmin = std::min(xmin, v.x());
      xmax = std::max(xmax, v.x());
      ymin = std::min(ymin, v.y());
      ymax = std::max(ymax, v.y());
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(xmin - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xmax - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(ymax - 0.5)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d c(x + 0.5, y + 0.5);
        bool inside = true;
        for (std::size_t i = 0; i < hull.size() && inside; ++i) {
          const Eigen::Vector2d& a = hull[i];
          const Eigen::Vector2d& b = hull[(i + 1) % hull.size()];
          inside = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()) >= 0.0;
        }
        if (inside) out(x, y) = static_cast<std::uint8_t>(part.label);
      }
  }
  return out;
}

}  // namespace revision
