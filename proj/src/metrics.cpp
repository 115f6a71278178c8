#include "revision/metrics.hpp"

#include "revision/error.hpp"

#include <cmath>

namespace revision {

namespace {

void require_same(const GrayImage& a, const GrayImage& b) {
  if (!a.same_size(b) || a.data.empty()) fail(ErrorCode::ShapeMismatch, "images differ in size or are empty");
}

// Window origins covering one axis; a short axis gets a single window over its full extent.
std::vector<int> origins(int extent) {
  std::vector<int> o;
  if (extent < kSsimWindow) return {0};
  for (int p = 0; p + kSsimWindow <= extent; p += kSsimStride) o.push_back(p);
  return o;
}

}  // namespace

double psnr(const GrayImage& a, const GrayImage& b) {
  require_same(a, b);
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    se += d * d;
  }
  if (se == 0.0) return kPsnrCap;
  const double mse = se / static_cast<double>(a.data.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const GrayImage& a, const GrayImage& b) {
  require_same(a, b);
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const int ww = std::min(kSsimWindow, a.width);
  const int wh = std::min(kSsimWindow, a.height);
  const double n = static_cast<double>(ww) * wh;
  double total = 0.0;
  int windows = 0;
  for (int oy : origins(a.height))
    for (int ox : origins(a.width)) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int y = oy; y < oy + wh; ++y)
        for (int x = ox; x < ox + ww; ++x) {
          const double va = a(x, y);
          const double vb = b(x, y);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double ma = sa / n;
      const double mb = sb / n;
      const double va = saa / n - ma * ma;
      const double vb = sbb / n - mb * mb;
      const double cov = sab / n - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return total / windows;
}

double mask_iou(const LabelGrid& a, const LabelGrid& b) {
  if (!a.same_size(b)) fail(ErrorCode::ShapeMismatch, "masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool fa = a.data[i] != 0;
    const bool fb = b.data[i] != 0;
    inter += fa && fb;
    uni += fa || fb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou(const std::vector<LabelGrid>& a, const std::vector<LabelGrid>& b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorCode::ShapeMismatch, "mask sequences differ in length or are empty");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += mask_iou(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

double motion_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0)
    fail(ErrorCode::ShapeMismatch, "motions differ in shape or are empty");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double traj_mse(const std::vector<MotionSequence>& pred, const std::vector<MotionSequence>& gt) {
  if (pred.size() != gt.size() || pred.empty()) fail(ErrorCode::ShapeMismatch, "motion sets differ in size or are empty");
  double se = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].frames.rows() != gt[i].frames.rows() || pred[i].frames.cols() != gt[i].frames.cols())
      fail(ErrorCode::ShapeMismatch, "motion " + std::to_string(i) + " differs in shape");
    se += (pred[i].frames - gt[i].frames).squaredNorm();
    count += static_cast<double>(gt[i].frames.size());
  }
  return se / count;
}

std::vector<LabelGrid> foreground_masks(const VideoClip& clip) {
  std::vector<LabelGrid> out;
  for (const auto& f : clip.frames) {
    LabelGrid m(f.width, f.height, 0);
    for (std::size_t i = 0; i < f.data.size(); ++i) m.data[i] = f.data[i] != 0;
    out.push_back(std::move(m));
  }
  return out;
}

EvalReport eval_metrics(const VideoClip& pred, const VideoClip& ref, const std::vector<MotionSequence>& pred_motions,
                        const std::vector<MotionSequence>& gt_motions, const std::vector<LabelGrid>& pred_masks,
                        const std::vector<LabelGrid>& gt_masks) {
  if (pred.length() != ref.length() || pred.length() == 0) fail(ErrorCode::ShapeMismatch, "clips differ in length");
  EvalReport r;
  double p = 0.0, s = 0.0;
  for (int i = 0; i < pred.length(); ++i) {
    p += psnr(pred.frames[i], ref.frames[i]);
    s += ssim(pred.frames[i], ref.frames[i]);
  }
  r.psnr = p / pred.length();
  r.ssim = s / pred.length();
  r.mask_miou = mean_iou(pred_masks, gt_masks);
  if (!pred_motions.empty() || !gt_motions.empty()) r.traj_mse = traj_mse(pred_motions, gt_motions);
  return r;
}

}  // namespace revision
