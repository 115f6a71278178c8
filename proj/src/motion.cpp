#include "revision/motion.hpp"

#include "revision/error.hpp"

#include <cmath>

namespace revision {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Human: return "Human";
    case Category::Animal: return "Animal";
    case Category::GenericObject: return "GenericObject";
  }
  return "GenericObject";
}

Category category_from_string(std::string_view s) {
  if (s == "Human") return Category::Human;
  if (s == "Animal") return Category::Animal;
  if (s == "GenericObject") return Category::GenericObject;
  fail(ErrorCode::ParseError, "unknown category '" + std::string(s) + "'");
}

std::vector<std::string> check_spec(const ParametricModelSpec& spec) {
  std::vector<std::string> out;
  if (spec.pose_dim <= 0) out.push_back("pose_dim must be positive");
  if (spec.shape_dim < 0 || spec.expression_dim < 0) out.push_back("shape/expression dims must be non-negative");
  if (spec.part_count <= 0) out.push_back("part_count must be positive");
  if (spec.skeleton.empty()) return out;

  const int n = spec.joint_count();
  if (spec.pose_dim != 3 * n) out.push_back("pose_dim must equal 3 x joint_count");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Joint& j = spec.skeleton[i];
    if (j.id != i) out.push_back("joint ids must equal their index");
    if (j.parent < 0) ++roots;
    else if (j.parent >= i) out.push_back("joint " + std::to_string(i) + " must be listed after its parent");
    if (j.part_label < 1 || j.part_label > spec.part_count)
      out.push_back("joint " + std::to_string(i) + " part label outside [1, part_count]");
  }
  if (roots != 1) out.push_back("skeleton must have exactly one root");
  // Walking up from every joint must reach the root within n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur >= 0 && cur < n && spec.skeleton[cur].parent >= 0 && steps <= n) {
      cur = spec.skeleton[cur].parent;
      ++steps;
    }
    if (steps > n) {
      out.push_back("skeleton contains a cycle");
      break;
    }
  }
  return out;
}

ModelRef preset_model(Category c) {
  switch (c) {
    case Category::Human: return human_model();
    case Category::Animal: return animal_model();
    case Category::GenericObject: return object_model();
  }
  return object_model();
}

MotionStrength motion_strength(const MotionSequence& seq) {
  const int f = seq.length();
  if (f < 2) fail(ErrorCode::SequenceTooShort, "motion_strength needs at least 2 frames");
  MotionStrength s;
  const double norm = std::sqrt(static_cast<double>(seq.pose_dim()));
  s.per_transition.resize(f - 1);
  for (int i = 0; i + 1 < f; ++i)
    s.per_transition[i] = (seq.frames.row(i + 1) - seq.frames.row(i)).norm() / norm;
  s.mean = s.per_transition.mean();
  return s;
}

MotionSequence resample(const MotionSequence& seq, int new_len) {
  const int f = seq.length();
  if (f < 2) fail(ErrorCode::SequenceTooShort, "resample needs at least 2 frames");
  if (new_len < 1) fail(ErrorCode::InvalidConfig, "resample length must be positive");
  MotionSequence out{seq.model, seq.fps, Eigen::MatrixXd(new_len, seq.pose_dim())};
  if (new_len == f) {
    out.frames = seq.frames;
    return out;
  }
  if (new_len == 1) {
    out.frames = seq.frames.topRows(1);
    return out;
  }
  for (int i = 0; i < new_len; ++i) {
    // Integer arithmetic first so shared grid points land exactly.
    const long num = static_cast<long>(i) * (f - 1);
    const int lo = static_cast<int>(num / (new_len - 1));
    const long rem = num % (new_len - 1);
    if (rem == 0 || lo >= f - 1) {
      out.frames.row(i) = seq.frames.row(std::min(lo, f - 1));
      continue;
    }
    const double w = static_cast<double>(rem) / static_cast<double>(new_len - 1);
    out.frames.row(i) = (1.0 - w) * seq.frames.row(lo) + w * seq.frames.row(lo + 1);
  }
  return out;
}

MotionSequence extrapolate(const MotionSequence& seq, int extra) {
  const int f = seq.length();
  if (f < 2) fail(ErrorCode::SequenceTooShort, "extrapolate needs at least 2 frames");
  if (extra < 1) fail(ErrorCode::InvalidConfig, "extrapolate needs a positive frame count");
  const int w = std::min(kExtrapolationWindow, f - 1);
  Eigen::RowVectorXd velocity = (seq.frames.row(f - 1) - seq.frames.row(f - 1 - w)) / static_cast<double>(w);

  MotionSequence out{seq.model, seq.fps, Eigen::MatrixXd(f + extra, seq.pose_dim())};
  out.frames.topRows(f) = seq.frames;
  Eigen::RowVectorXd cur = seq.frames.row(f - 1);
  for (int k = 0; k < extra; ++k) {
    velocity *= kExtrapolationDecay;
    cur += velocity;
    out.frames.row(f + k) = cur;
  }
  return out;
}

Eigen::Matrix3d euler_xyz(double a, double b, double c) {
  return (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(c, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

namespace {

void check_pose(const ParametricModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& pose) {
  if (!spec.articulated()) fail(ErrorCode::DimensionMismatch, "forward kinematics needs an articulated model");
  if (pose.size() != spec.pose_dim)
    fail(ErrorCode::DimensionMismatch,
         "pose has " + std::to_string(pose.size()) + " entries, model expects " + std::to_string(spec.pose_dim));
  if (!pose.allFinite()) fail(ErrorCode::NonFiniteEntry, "pose contains non-finite angles");
}

}  // namespace

Eigen::Matrix3Xd joint_positions(const ParametricModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& pose,
                                 double shape_scale, const Eigen::Vector3d& root_position) {
  check_pose(spec, pose);
  const int n = spec.joint_count();
  std::vector<Eigen::Matrix3d> rot(n);
  Eigen::Matrix3Xd pos(3, n);
  // Presets list parents before children.
  for (int i = 0; i < n; ++i) {
    const Joint& j = spec.skeleton[i];
    const Eigen::Matrix3d local = euler_xyz(pose[3 * i], pose[3 * i + 1], pose[3 * i + 2]);
    if (j.parent < 0) {
      rot[i] = local;
      pos.col(i) = root_position + shape_scale * j.rest_offset;
    } else {
      rot[i] = rot[j.parent] * local;
      pos.col(i) = pos.col(j.parent) + rot[j.parent] * (shape_scale * j.rest_offset);
    }
  }
  return pos;
}

LabeledPoints forward_kinematics(const ParametricModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& pose,
                                 double shape_scale, const Eigen::Vector3d& root_position) {
  const Eigen::Matrix3Xd joints = joint_positions(spec, pose, shape_scale, root_position);
  const int n = spec.joint_count();
  const int bones = n - 1;
  LabeledPoints out;
  out.positions.resize(3, n + bones * kBoneSamples);
  out.labels.reserve(out.positions.cols());
  int k = 0;
  for (int i = 0; i < n; ++i) {
    out.positions.col(k++) = joints.col(i);
    out.labels.push_back(spec.skeleton[i].part_label);
  }
  for (int i = 0; i < n; ++i) {
    const Joint& j = spec.skeleton[i];
    if (j.parent < 0) continue;
    for (int s = 1; s <= kBoneSamples; ++s) {
      const double t = static_cast<double>(s) / (kBoneSamples + 1);
      out.positions.col(k++) = (1.0 - t) * joints.col(j.parent) + t * joints.col(i);
      out.labels.push_back(j.part_label);
    }
  }
  return out;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::EmptySequence: return "EmptySequence";
    case ViolationKind::NonPositiveFps: return "NonPositiveFps";
    case ViolationKind::MissingModel: return "MissingModel";
    case ViolationKind::DimensionMismatch: return "DimensionMismatch";
    case ViolationKind::NonFiniteEntry: return "NonFiniteEntry";
  }
  return "Unknown";
}

std::vector<Violation> validate(const MotionSequence& seq) {
  std::vector<Violation> out;
  if (!seq.model) {
    out.push_back({ViolationKind::MissingModel, -1, -1, "sequence has no parametric model"});
  } else if (seq.pose_dim() != seq.model->pose_dim) {
    out.push_back({ViolationKind::DimensionMismatch, -1, -1,
                   "rows have " + std::to_string(seq.pose_dim()) + " entries, model expects " +
                       std::to_string(seq.model->pose_dim)});
  }
  if (seq.length() < 1) out.push_back({ViolationKind::EmptySequence, -1, -1, "sequence has no frames"});
  if (!(seq.fps > 0.0) || !std::isfinite(seq.fps))
    out.push_back({ViolationKind::NonPositiveFps, -1, -1, "fps must be positive"});
  for (int f = 0; f < seq.length(); ++f)
    for (int c = 0; c < seq.pose_dim(); ++c)
      if (!std::isfinite(seq.frames(f, c)))
        out.push_back({ViolationKind::NonFiniteEntry, f, c, "non-finite entry"});
  return out;
}

std::vector<Violation> validate_rows(int pose_dim, double fps, const std::vector<std::vector<double>>& rows) {
  std::vector<Violation> out;
  if (rows.empty()) out.push_back({ViolationKind::EmptySequence, -1, -1, "sequence has no frames"});
  if (!(fps > 0.0) || !std::isfinite(fps)) out.push_back({ViolationKind::NonPositiveFps, -1, -1, "fps must be positive"});
  for (int f = 0; f < static_cast<int>(rows.size()); ++f) {
    if (static_cast<int>(rows[f].size()) != pose_dim) {
      out.push_back({ViolationKind::DimensionMismatch, f, -1,
                     "row has " + std::to_string(rows[f].size()) + " entries, expected " + std::to_string(pose_dim)});
      continue;
    }
    for (int c = 0; c < pose_dim; ++c)
      if (!std::isfinite(rows[f][c])) out.push_back({ViolationKind::NonFiniteEntry, f, c, "non-finite entry"});
  }
  return out;
}

void require_valid(const MotionSequence& seq) {
  const auto v = validate(seq);
  if (v.empty()) return;
  const Violation& first = v.front();
  switch (first.kind) {
    case ViolationKind::NonFiniteEntry:
      fail(ErrorCode::NonFiniteEntry,
           "frame " + std::to_string(first.frame) + " channel " + std::to_string(first.channel));
    case ViolationKind::EmptySequence: fail(ErrorCode::SequenceTooShort, first.detail);
    default: fail(ErrorCode::DimensionMismatch, first.detail);
  }
}

}  // namespace revision
