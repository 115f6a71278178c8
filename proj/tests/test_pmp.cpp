#include "revision/corpus.hpp"
#include "revision/error.hpp"
#include "revision/pmp.hpp"
#include "revision/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace revision;

namespace {

PmpConfig small_config(int layers = 1) {
  PmpConfig c;
  c.layers = layers;
  c.model_dim = 16;
  c.heads = 2;
  c.ffn_dim = 24;
  c.max_frames = 40;
  return c;
}

MotionSequence random_motion(ModelRef model, int frames, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  MotionSequence s{model, 30.0, Eigen::MatrixXd(frames, model->pose_dim)};
  for (Eigen::Index i = 0; i < s.frames.size(); ++i) s.frames.data()[i] = n(rng);
  return s;
}

}  // namespace

TEST_CASE("config and init") {
  PmpConfig c;
  CHECK(c.head_dim() == 32);
  CHECK(c.max_pose_dim >= human_model()->pose_dim);
  PmpConfig bad = c;
  bad.heads = 3;
  CHECK_THROWS_AS(pmp_init(bad, 1), Error);
  bad = c;
  bad.max_pose_dim = 10;
  CHECK_THROWS_AS(pmp_init(bad, 1), Error);

  const PmpConfig s = small_config(2);
  const PmpModel a = pmp_init(s, 3), b = pmp_init(s, 3), d = pmp_init(s, 4);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.parameters() != d.parameters());
  CHECK(a.parameters().size() == make_layout(s).parameter_count);
  const Eigen::MatrixXd out = pmp_forward(a, Eigen::MatrixXd::Zero(12, 66), Conditioning{});
  CHECK(out.rows() == 12);
  CHECK(out.cols() == s.max_pose_dim);
  CHECK(out.allFinite());
}

TEST_CASE("refine contract") {
  const PmpConfig c = small_config(2);
  const PmpModel m = pmp_init(c, 9);
  for (const auto& model : {human_model(), animal_model(), object_model()}) {
    const auto seq = random_motion(model, 20, 2);
    const auto cond = make_conditioning(c, {"walk", "left", "fast"}, 0.2, model->category);
    const auto r = pmp_refine(m, seq, cond);
    CHECK(r.length() == seq.length());
    CHECK(r.pose_dim() == seq.pose_dim());
    Conditioning perm = cond;
    std::reverse(perm.tokens.begin(), perm.tokens.end());
    CHECK((pmp_refine(m, seq, perm).frames - r.frames).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(make_conditioning(c, {"walk", "nonsense"}, 0.1, Category::Human).tokens.size() == 1);
  CHECK_THROWS_AS(pmp_refine(m, random_motion(human_model(), 41, 1), Conditioning{}), Error);
  ParametricModelSpec wide;
  wide.pose_dim = 200;
  CHECK_THROWS_AS(pmp_refine(m, random_motion(std::make_shared<const ParametricModelSpec>(wide), 4, 1), Conditioning{}),
                  Error);
  Conditioning bad_token;
  bad_token.tokens = {1000};
  CHECK_THROWS_AS(pmp_refine(m, random_motion(human_model(), 4, 1), bad_token), Error);
}

TEST_CASE("loss and gradient") {
  const PmpConfig c = small_config(2);
  const PmpModel m = pmp_init(c, 21);
  const auto batch = example_batch(c, 3, 12, 4);

  SUBCASE("zero at the model output") {
    std::vector<TrainingExample> fixed = batch;
    for (auto& e : fixed)
      e.target = pmp_forward(m, e.input, e.cond).leftCols(e.input.cols());
    const auto lg = pmp_loss(m, fixed);
    CHECK(lg.loss == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(lg.gradient.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("duplicated batch keeps the loss") {
    std::vector<TrainingExample> twice = batch;
    twice.insert(twice.end(), batch.begin(), batch.end());
    CHECK(pmp_loss_value(m, twice) == doctest::Approx(pmp_loss_value(m, batch)).epsilon(1e-12));
  }
  SUBCASE("central difference on single parameters") {
    const auto lg = pmp_loss(m, batch);
    PmpModel probe = m;
    const int idx[] = {m.layout().output_b, m.layout().layers[1].ffn_w2, m.layout().input_w,
                       m.layout().layers[0].cross.wv};
    for (int t : idx) {
      const TensorInfo& info = m.tensors()[t];
      Eigen::Index best = info.offset;
      for (Eigen::Index i = info.offset; i < info.offset + info.size(); ++i)
        if (std::abs(lg.gradient[i]) > std::abs(lg.gradient[best])) best = i;
      const double h = 1e-5, w = probe.parameters()[best];
      probe.parameters()[best] = w + h;
      const double plus = pmp_loss_value(probe, batch);
      probe.parameters()[best] = w - h;
      const double minus = pmp_loss_value(probe, batch);
      probe.parameters()[best] = w;
      const double numeric = (plus - minus) / (2 * h);
      CHECK(std::abs(numeric - lg.gradient[best]) / std::abs(lg.gradient[best]) < 1e-4);
    }
  }
  SUBCASE("grad check") {
    for (int layers : {1, 2}) {
      const PmpModel ml = pmp_init(small_config(layers), 5);
      const auto r = grad_check(ml, example_batch(ml.config(), 2, 10, 8), 1e-4, 200, 3);
      CHECK(r.checked == 200);
      CHECK(r.max_relative_error < 1e-4);
      const auto half = grad_check(ml, example_batch(ml.config(), 2, 10, 8), 5e-5, 200, 3);
      CHECK(half.max_relative_error <= 10 * std::max(r.max_relative_error, 1e-12));
    }
    TrainingExample zero{Eigen::MatrixXd::Zero(6, 66), Eigen::MatrixXd::Zero(6, 66), Conditioning{}};
    const auto z = grad_check(m, std::span<const TrainingExample>(&zero, 1), 1e-4, 50, 1);
    CHECK(std::isfinite(z.max_relative_error));
  }
  CHECK_THROWS_AS(pmp_loss(m, std::span<const TrainingExample>()), Error);
}

TEST_CASE("training") {
  const PmpConfig c = small_config(1);
  const PmpModel init = pmp_init(c, 1);
  const auto corpus = training_motions(64, 17);
  TrainConfig tc;
  tc.steps = 0;
  CHECK(pmp_train(init, corpus, tc, 42).model.parameters() == init.parameters());
  tc.steps = 5;
  tc.batch_size = 2;
  const auto a = pmp_train(init, corpus, tc, 42), b = pmp_train(init, corpus, tc, 42);
  CHECK(a.model.parameters() == b.model.parameters());
  CHECK(a.loss == b.loss);
  CHECK(a.loss.size() == 5);
  CHECK_THROWS_AS(pmp_train(init, std::span<const TrainingMotion>(), tc, 1), Error);

  tc.steps = 2000;
  tc.batch_size = 4;
  tc.crop_min = 12;
  tc.crop_max = 16;
  const auto r = pmp_train(init, corpus, tc, 42);
  CHECK(smoothed_loss(r.loss, 2000) < smoothed_loss(r.loss, 50));
}

TEST_CASE("checkpoint round trip") {
  const PmpModel m = pmp_init(small_config(2), 8);
  const auto path = std::filesystem::temp_directory_path() / "revision_test_pmp.ckpt";
  save_checkpoint(m, path);
  const PmpModel back = load_checkpoint(path);
  CHECK(back.parameters() == m.parameters());
  CHECK(back.config().layers == 2);
  CHECK(back.config().vocab == m.config().vocab);
  {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.put('x');
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
