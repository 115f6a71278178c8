#pragma once

#include "revision/image.hpp"
#include "revision/motion.hpp"
#include "revision/simgen.hpp"

#include <vector>

namespace revision {

constexpr double kPsnrCap = 99.0;
constexpr int kSsimWindow = 8;
constexpr int kSsimStride = 4;

/// PSNR of one 8-bit frame pair, capped at 99 dB.
double psnr(const GrayImage& a, const GrayImage& b);

/// Mean SSIM over 8x8 windows placed every 4 pixels.
double ssim(const GrayImage& a, const GrayImage& b);

/// Foreground (non-zero label) intersection over union; 1 when both are empty.
double mask_iou(const LabelGrid& a, const LabelGrid& b);

double mean_iou(const std::vector<LabelGrid>& a, const std::vector<LabelGrid>& b);

/// Mean squared parameter error pooled over every object, frame and channel.
double traj_mse(const std::vector<MotionSequence>& pred, const std::vector<MotionSequence>& gt);

double motion_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct EvalReport {
  double traj_mse = 0.0;
  double mask_miou = 1.0;
  double psnr = kPsnrCap;
  double ssim = 1.0;
  // Stage errors against ground truth; negative when not measured.
  double coarse_traj_mse = -1.0;
  double raw_traj_mse = -1.0;
  double refined_traj_mse = -1.0;
};

/// Clip metrics are per-frame averages. Foreground masks are taken from non-zero pixels.
EvalReport eval_metrics(const VideoClip& pred, const VideoClip& ref, const std::vector<MotionSequence>& pred_motions,
                        const std::vector<MotionSequence>& gt_motions, const std::vector<LabelGrid>& pred_masks,
                        const std::vector<LabelGrid>& gt_masks);

std::vector<LabelGrid> foreground_masks(const VideoClip& clip);

}  // namespace revision
