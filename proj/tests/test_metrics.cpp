#include "revision/error.hpp"
#include "revision/metrics.hpp"
#include "revision/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace revision;

TEST_CASE("psnr") {
  GrayImage a(16, 12, 100), b(16, 12, 110);
  CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(255.0 * 255.0 / 100.0)).epsilon(1e-12));
  CHECK(std::abs(psnr(a, b) - 28.13) < 0.01);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK_THROWS_AS(psnr(a, GrayImage(4, 4, 0)), Error);
}

TEST_CASE("ssim") {
  Rng rng(3);
  GrayImage a(32, 24, 0);
  for (auto& v : a.data) v = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  CHECK(ssim(a, a) == 1.0);
  GrayImage b = a;
  for (auto& v : b.data) v = static_cast<std::uint8_t>(255 - v);
  CHECK(ssim(a, b) < 0.0);
  GrayImage c = a;
  for (auto& v : c.data) v = static_cast<std::uint8_t>(std::min(255, v + 3));
  CHECK(ssim(a, c) > 0.9);
  CHECK(ssim(a, c) < 1.0);
}

TEST_CASE("mask iou counting oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    LabelGrid a(20, 15, 0), b(20, 15, 0);
    int inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      a.data[i] = static_cast<std::uint8_t>(uniform01(rng) < 0.4 ? uniform_int(rng, 1, 5) : 0);
      b.data[i] = static_cast<std::uint8_t>(uniform01(rng) < 0.4 ? uniform_int(rng, 1, 5) : 0);
      inter += a.data[i] && b.data[i];
      uni += a.data[i] || b.data[i];
    }
    CHECK(mask_iou(a, b) == static_cast<double>(inter) / uni);
  }
  CHECK(mask_iou(LabelGrid(3, 3, 0), LabelGrid(3, 3, 0)) == 1.0);
  std::vector<LabelGrid> x{LabelGrid(2, 2, 1), LabelGrid(2, 2, 0)}, y{LabelGrid(2, 2, 1), LabelGrid(2, 2, 1)};
  CHECK(mean_iou(x, y) == 0.5);
  CHECK_THROWS_AS(mean_iou(x, {}), Error);
}

TEST_CASE("trajectory error") {
  ParametricModelSpec spec;
  spec.pose_dim = 2;
  const auto model = std::make_shared<const ParametricModelSpec>(spec);
  MotionSequence a{model, 30.0, Eigen::MatrixXd::Zero(3, 2)}, b{model, 30.0, Eigen::MatrixXd::Constant(3, 2, 2.0)};
  CHECK(traj_mse({a}, {b}) == 4.0);
  CHECK(traj_mse({a, a}, {b, a}) == 2.0);
  CHECK_THROWS_AS(traj_mse({a}, {}), Error);
}
