#include "revision/longvideo.hpp"

#include "revision/error.hpp"
#include "revision/rng.hpp"

#include <algorithm>
#include <cmath>

namespace revision {

WindowPlan plan_windows(int total_len, int window, int stride) {
  if (window < 1 || stride < 1 || stride > window)
    fail(ErrorCode::InvalidConfig, "window and stride must satisfy 1 <= stride <= window");
  if (total_len < window)
    fail(ErrorCode::TotalTooShort,
         "total length " + std::to_string(total_len) + " is shorter than the window " + std::to_string(window));
  WindowPlan plan;
  plan.window = window;
  plan.stride = stride;
  const int steps = (total_len - window + stride - 1) / stride;
  plan.total = window + steps * stride;
  plan.padding = plan.total - total_len;
  for (int k = 0; k <= steps; ++k) plan.windows.emplace_back(k * stride, k * stride + window);
  return plan;
}

Json plan_to_json(const WindowPlan& plan) {
  Json w = Json::array();
  for (const auto& [a, b] : plan.windows) w.push_back({a, b});
  return {{"window", plan.window},
          {"stride", plan.stride},
          {"overlap", plan.overlap()},
          {"total", plan.total},
          {"padding", plan.padding},
          {"windows", w}};
}

WindowPlan plan_from_json(const Json& j) {
  WindowPlan p;
  try {
    p = plan_windows(j.at("total").get<int>() - j.value("padding", 0), j.value("window", kDefaultWindow),
                     j.value("stride", kDefaultStride));
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("window plan: ") + e.what());
  }
  if (p.total != j.at("total").get<int>()) fail(ErrorCode::PlanMismatch, "window plan total is inconsistent");
  return p;
}

MotionSequence extend_motion(const MotionSequence& seq, int target_len, const PmpModel& pmp, const Conditioning& cond) {
  const int f = seq.length();
  if (f < 2) fail(ErrorCode::SequenceTooShort, "extension needs at least 2 frames");
  if (target_len < f)
    fail(ErrorCode::InvalidConfig, "target length " + std::to_string(target_len) + " is below the input length");
  const int mid = std::min(2 * f, target_len);
  MotionSequence m = mid == f ? seq : resample(seq, mid);
  if (mid < target_len) m = extrapolate(m, target_len - mid);
  return pmp_refine(pmp, m, cond);
}

namespace {

void check_plan(const WindowPlan& plan, std::size_t count) {
  if (plan.windows.empty() || count != plan.windows.size())
    fail(ErrorCode::PlanMismatch,
         std::to_string(count) + " windows given, plan has " + std::to_string(plan.windows.size()));
  if (plan.windows.back().second != plan.total) fail(ErrorCode::PlanMismatch, "plan windows do not cover its total");
}

// Applies the ramped reduction over windows; `blend(t, k, w)` mixes window k into output
// frame t with weight w (w = 1 copies).
template <typename Blend>
void reduce_windows(const WindowPlan& plan, Blend&& blend) {
  const int overlap = plan.overlap();
  for (std::size_t k = 0; k < plan.windows.size(); ++k) {
    const auto [start, end] = plan.windows[k];
    for (int t = start; t < end; ++t) {
      const int j = t - start + 1;
      const bool ramp = k > 0 && j <= overlap;
      blend(t, k, ramp ? blend_weight(j, overlap) : 1.0);
    }
  }
}

}  // namespace

VideoClip stitch(const std::vector<VideoClip>& clips, const WindowPlan& plan) {
  check_plan(plan, clips.size());
  const int w = clips.front().width;
  const int h = clips.front().height;
  for (const auto& c : clips) {
    if (c.length() != plan.window)
      fail(ErrorCode::PlanMismatch, "clip of length " + std::to_string(c.length()) + " for a window of " +
                                        std::to_string(plan.window));
    if (c.width != w || c.height != h) fail(ErrorCode::PlanMismatch, "clips differ in resolution");
  }
  std::vector<Eigen::ArrayXd> acc(plan.total, Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(w) * h));
  reduce_windows(plan, [&](int t, std::size_t k, double wt) {
    const auto& px = clips[k].frames[t - plan.windows[k].first].data;
    const Eigen::ArrayXd v =
        Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>>(px.data(), static_cast<Eigen::Index>(px.size()))
            .cast<double>();
    acc[t] = wt == 1.0 ? v : ((1.0 - wt) * acc[t] + wt * v).eval();
  });
  VideoClip out;
  out.fps = clips.front().fps;
  out.width = w;
  out.height = h;
  for (const auto& a : acc) {
    GrayImage img(w, h, 0);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      img.data[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(a[i]), 0.0, 255.0));
    out.frames.push_back(std::move(img));
  }
  return out;
}

MotionSequence stitch_motion(const std::vector<MotionSequence>& windows, const WindowPlan& plan) {
  check_plan(plan, windows.size());
  const int pd = windows.front().pose_dim();
  for (const auto& m : windows)
    if (m.length() != plan.window || m.pose_dim() != pd)
      fail(ErrorCode::PlanMismatch, "window motion shape does not match the plan");
  MotionSequence out{windows.front().model, windows.front().fps, Eigen::MatrixXd::Zero(plan.total, pd)};
  reduce_windows(plan, [&](int t, std::size_t k, double wt) {
    const auto v = windows[k].frames.row(t - plan.windows[k].first);
    out.frames.row(t) = wt == 1.0 ? Eigen::RowVectorXd(v) : Eigen::RowVectorXd((1.0 - wt) * out.frames.row(t) + wt * v);
  });
  return out;
}

std::vector<int> seam_transitions(const WindowPlan& plan) {
  std::vector<int> out;
  for (std::size_t k = 1; k < plan.windows.size(); ++k) {
    const int start = plan.windows[k].first;
    for (int t = std::max(0, start - 1); t < start + plan.overlap() && t + 1 < plan.total; ++t)
      if (out.empty() || out.back() < t) out.push_back(t);
  }
  return out;
}

LongVideo generate_long_video(const SceneSpec& scene, const std::vector<MotionSequence>& motions,
                              const WindowPlan& plan, const GeneratorConfig& config, const ConfidenceTriple& triple,
                              const VideoGenerator& generator, std::uint64_t seed) {
  if (motions.size() != scene.objects.size()) fail(ErrorCode::PayloadMismatch, "one motion per scene object is required");
  for (const auto& m : motions)
    if (m.length() < plan.total)
      fail(ErrorCode::PlanMismatch, "motion of " + std::to_string(m.length()) + " frames cannot fill a plan of " +
                                        std::to_string(plan.total));
  if (config.frame_count(plan.window) != plan.window)
    fail(ErrorCode::PlanMismatch, "long-video windows are generated at full frame rate");
  LongVideo out;
  out.plan = plan;
  SceneSpec window_scene = scene;
  window_scene.duration = plan.window;
  for (std::size_t k = 0; k < plan.windows.size(); ++k) {
    const int start = plan.windows[k].first;
    std::vector<MotionSequence> slice;
    for (const auto& m : motions) slice.push_back({m.model, m.fps, m.frames.middleRows(start, plan.window)});
    const ConditionChannels ch = full_motion_channels(window_scene, slice, config, triple);
    Generation g = generator.generate(window_scene, VideoCondition{ch, slice}, config, derive_seed(seed, k));
    out.clips.push_back(std::move(g.clip));
    out.realized.push_back(std::move(g.realized));
  }
  out.stitched = stitch(out.clips, plan);
  for (std::size_t o = 0; o < motions.size(); ++o) {
    std::vector<MotionSequence> per_window;
    for (const auto& r : out.realized) per_window.push_back(r[o]);
    out.stitched_motion.push_back(stitch_motion(per_window, plan));
  }
  return out;
}

}  // namespace revision
