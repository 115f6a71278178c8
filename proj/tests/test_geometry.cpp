#include "revision/error.hpp"
#include "revision/geometry.hpp"
#include "revision/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace revision;

namespace {

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  return m;
}

BinaryMask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry, double angle) {
  BinaryMask m(w, h, 0);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
      m(x, y) = u * u + v * v <= 1.0 ? 1 : 0;
    }
  return m;
}

DepthMap constant_depth(int w, int h, double z) { return DepthMap{Grid<double>(w, h, z), 1e-3}; }

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

double iou(const LabelGrid& a, const BinaryMask& b) {
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] && b.data[i];
    uni += a.data[i] || b.data[i];
  }
  return static_cast<double>(inter) / uni;
}

}  // namespace

TEST_CASE("camera") {
  const CameraSpec c;
  const CameraSpec q = c.scaled(0.25);
  CHECK(q.width == 32);
  CHECK(q.height == 18);
  CHECK(q.focal == doctest::Approx(22.5));
  CHECK(q.principal == Eigen::Vector2d(16, 9));
  CameraSpec bad;
  bad.focal = 0;
  CHECK_THROWS_AS(check_camera(bad), Error);
  bad = c;
  bad.principal = {200, 10};
  CHECK_THROWS_AS(check_camera(bad), Error);
}

TEST_CASE("bbox and contour") {
  const BinaryMask m = rect_mask(10, 8, 2, 3, 5, 6);
  CHECK(mask_bbox(m) == BBox{2, 3, 5, 6});
  CHECK_THROWS_AS(mask_bbox(BinaryMask(4, 4, 0)), Error);

  const auto c = extract_contour(m);
  REQUIRE(c.size() == 8);
  CHECK(c.front() == Eigen::Vector2i(2, 3));
  for (const auto& p : c) CHECK((p.x() == 2 || p.x() == 4 || p.y() == 3 || p.y() == 5));
  // Counterclockwise on screen: leaving the top-left corner downward.
  CHECK(c[1] == Eigen::Vector2i(2, 4));
  const auto outer = outer_boundary(c);
  CHECK(outer[0] == Eigen::Vector2d(2.25, 3.25));
  CHECK(outer[1] == Eigen::Vector2d(2, 4.5));
  const std::vector<Eigen::Vector2d> corners{{2.25, 3.25}, {2.25, 5.75}, {4.75, 5.75}, {4.75, 3.25}};
  for (const auto& p : outer)
    CHECK((p.x() == 2 || p.x() == 5 || p.y() == 3 || p.y() == 6 || std::count(corners.begin(), corners.end(), p) == 1));

  BinaryMask single(5, 5, 0);
  single(3, 1) = 1;
  CHECK(extract_contour(single) == std::vector<Eigen::Vector2i>{{3, 1}});
  CHECK(outer_boundary(extract_contour(single)) == std::vector<Eigen::Vector2d>{{3, 1}, {3, 2}, {4, 2}, {4, 1}});

  BinaryMask two = rect_mask(12, 6, 0, 0, 2, 2);
  for (int y = 2; y < 6; ++y)
    for (int x = 6; x < 10; ++x) two(x, y) = 1;
  CHECK(extract_contour(two).front() == Eigen::Vector2i(6, 2));
  CHECK_THROWS_AS(extract_contour(BinaryMask(3, 3, 0)), Error);
}

TEST_CASE("simplify contour") {
  const std::vector<Eigen::Vector2d> square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  const auto s = simplify_contour(square, 8);
  REQUIRE(s.size() == 8);
  for (int k = 0; k < 8; ++k) CHECK(s[k] == square[k / 2]);

  std::vector<Eigen::Vector2d> dense;
  for (int i = 0; i < 4; ++i) dense.emplace_back(i, 0);
  for (int i = 0; i < 4; ++i) dense.emplace_back(4, i);
  for (int i = 4; i > 0; --i) dense.emplace_back(i, 4);
  for (int i = 4; i > 0; --i) dense.emplace_back(0, i);
  const auto u = simplify_contour(dense, 16);
  REQUIRE(u.size() == 16);
  CHECK(u.front() == dense.front());
  for (int k = 0; k < 16; ++k) CHECK((u[(k + 1) % 16] - u[k]).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(simplify_contour({}, 4), Error);
}

TEST_CASE("lift and project") {
  const CameraSpec cam;
  const Eigen::Vector2d uv(17.25, 60.5);
  const Eigen::Vector3d p = lift(uv, 2.5, cam);
  CHECK(p.z() == 2.5);
  CHECK((project_point(p, cam) - uv).norm() < 1e-12);
  CHECK(project_point({0, 0, 3}, cam) == cam.principal);
  CHECK_THROWS_AS(project_point({0, 0, 0}, cam), Error);
}

TEST_CASE("object points") {
  const BinaryMask m = rect_mask(40, 30, 5, 4, 25, 20);
  DepthMap d = constant_depth(40, 30, 9.0);
  for (int y = 4; y < 20; ++y)
    for (int x = 5; x < 25; ++x) d.values(x, y) = x < 15 ? 2.0 : 3.0;
  const Object25D o = object_points_2d(m, mask_bbox(m), d);
  CHECK(o.points.row(16) == Eigen::RowVector3d(5, 4, 2.5));
  CHECK(o.points.row(17) == Eigen::RowVector3d(25, 4, 2.5));
  CHECK(o.points.row(18) == Eigen::RowVector3d(25, 20, 2.5));
  CHECK(o.points.row(19) == Eigen::RowVector3d(5, 20, 2.5));
  CHECK(o.points.row(20) == Eigen::RowVector3d(15, 12, 3.0));
  CHECK(o.points.row(0) == Eigen::RowVector3d(5.25, 4.25, 2.0));
  CHECK(o.points.col(2).minCoeff() == 2.0);

  const CameraSpec cam;
  const Object25D lifted = object25d_from_mask(m, mask_bbox(m), d, cam);
  for (int i = 0; i < kObjectPoints; ++i)
    CHECK((project_point(lifted.points.row(i).transpose(), cam) - o.points.row(i).head<2>().transpose()).norm() <
          1e-9);

  CHECK_THROWS_AS(object_points_2d(m, BBox{0, 0, 41, 10}, d), Error);
  CHECK_THROWS_AS(object_points_2d(m, mask_bbox(m), constant_depth(10, 10, 1.0)), Error);
  CHECK_THROWS_AS(object25d_from_mask(m, mask_bbox(m), constant_depth(40, 30, 0.0), cam), Error);
}

TEST_CASE("21 points cover convex masks") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double rx = 8 + 12 * u(rng), ry = 8 + 12 * u(rng);
    const BinaryMask m = ellipse_mask(64, 64, 32 + 4 * u(rng), 32 + 4 * u(rng), rx, ry, 3 * u(rng));
    const Object25D o = object_points_2d(m, mask_bbox(m), constant_depth(64, 64, 2.0));
    CHECK(o.points.rows() == kObjectPoints);
    CHECK(o.points.allFinite());
    PartPolygon poly{1, o.points.topRows(kContourVertices).leftCols(2).transpose()};
    CHECK(iou(polygon_target_mask({poly}, 64, 64), m) >= 0.9);
  }
}

TEST_CASE("render_part_masks matches brute force") {
  const CameraSpec cam = CameraSpec{}.scaled(0.5);
  Rng rng(77);
  std::uniform_real_distribution<double> xy(-1.2, 1.2), z(1.5, 4.0);
  for (int scene = 0; scene < 20; ++scene) {
    std::vector<LabeledPoints> objects(3);
    for (auto& obj : objects) {
      const int n = 30;
      obj.positions.resize(3, n);
      obj.labels.resize(n);
      const Eigen::Vector3d c(xy(rng), 0.6 * xy(rng), z(rng));
      for (int i = 0; i < n; ++i) {
        obj.positions.col(i) = c + 0.25 * Eigen::Vector3d(xy(rng), xy(rng), 0.5 * xy(rng));
        obj.labels[i] = 1 + i % 5;
      }
    }
    objects[1].positions.col(0) = objects[0].positions.col(0);
    objects[1].labels[0] = 9;
    CHECK(render_part_masks(objects, cam, 2.0) == brute_force_masks(objects, cam, 2.0));
  }
}

TEST_CASE("convex hull and polygon masks") {
  Eigen::Matrix2Xd pts(2, 6);
  pts << 0, 2, 4, 4, 0, 2, 0, 0, 0, 4, 4, 2;
  const auto h = convex_hull(pts);
  REQUIRE(h.size() == 4);
  double area = 0;
  for (std::size_t i = 0; i < h.size(); ++i) area += h[i].x() * h[(i + 1) % 4].y() - h[(i + 1) % 4].x() * h[i].y();
  CHECK(area > 0);

  Eigen::Matrix2Xd square(2, 4);
  square << 1, 5, 5, 1, 1, 1, 5, 5;
  const LabelGrid g = polygon_target_mask({{3, square}}, 8, 8);
  int count = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (g(x, y)) {
        ++count;
        CHECK(g(x, y) == 3);
        CHECK((x >= 1 && x <= 4 && y >= 1 && y <= 4));
      }
  CHECK(count == 16);
  Eigen::Matrix2Xd line(2, 3);
  line << 0, 1, 2, 0, 1, 2;
  CHECK_THROWS_AS(polygon_target_mask({{1, line}}, 8, 8), Error);
  CHECK_THROWS_AS(polygon_target_mask({{1, Eigen::Matrix2Xd(2, 2)}}, 8, 8), Error);
}

TEST_CASE("build_condition") {
  const CameraSpec cam = CameraSpec{}.scaled(0.25);
  ConditionPayload p;
  p.frames = 3;
  p.width = cam.width;
  p.height = cam.height;
  p.camera = cam;
  p.splat_radius = 1.5;

  SUBCASE("empty") {
    const auto c = build_condition(ConditionMode::Empty, p, {0.8, 0.5, 0.2});
    CHECK(c.frames() == 3);
    for (const auto& conf : c.confidence)
      for (double v : conf.data) CHECK(v == 0.2);
  }
  SUBCASE("full motion") {
    LabeledPoints obj;
    obj.positions = Eigen::Matrix3Xd::Zero(3, 1);
    obj.positions(2, 0) = 3.0;
    obj.labels = {4};
    p.motion.assign(3, {obj});
    const auto c = build_condition(ConditionMode::FullMotion, p);
    for (int f = 0; f < 3; ++f) {
      CHECK(c.part_mask[f] == render_part_masks(p.motion[f], cam, 1.5));
      for (std::size_t i = 0; i < c.part_mask[f].data.size(); ++i)
        CHECK(c.confidence[f].data[i] == (c.part_mask[f].data[i] ? 1.0 : 0.0));
    }
    p.motion.pop_back();
    CHECK_THROWS_AS(build_condition(ConditionMode::FullMotion, p), Error);
  }
  SUBCASE("target pose") {
    Eigen::Matrix2Xd tri(2, 3);
    tri << 2, 20, 10, 2, 2, 15;
    p.target = {{2, tri}};
    const auto c = build_condition(ConditionMode::TargetPose, p, {3, 2, 1});
    CHECK(c.part_mask[0] == LabelGrid(cam.width, cam.height, 0));
    CHECK(c.part_mask[2] == polygon_target_mask(p.target, cam.width, cam.height));
    for (std::size_t i = 0; i < c.part_mask[2].data.size(); ++i)
      CHECK(c.confidence[2].data[i] == (c.part_mask[2].data[i] ? 2.0 : 1.0));
    CHECK_THROWS_AS(build_condition(ConditionMode::Empty, p), Error);
  }
  CHECK_THROWS_AS(build_condition(ConditionMode::Empty, p, {0.5, 0.5, 0.0}), Error);
  ConditionPayload no_target = p;
  no_target.target.clear();
  CHECK_THROWS_AS(build_condition(ConditionMode::TargetPose, no_target), Error);
}
