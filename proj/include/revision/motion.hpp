#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revision {

enum class Category { Human, Animal, GenericObject };

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);
constexpr int kCategoryCount = 3;
inline int category_index(Category c) { return static_cast<int>(c); }

struct Joint {
  int id = 0;
  int parent = -1;  // -1 for the root
  Eigen::Vector3d rest_offset = Eigen::Vector3d::Zero();
  int part_label = 1;
};

/// Parameter layout of one tracked object. Articulated categories carry a joint tree and
/// use three XYZ Euler angles per joint; GenericObject stores 21 lifted points.
///
/// `reference_pose_dim` records the dimensionality of the full parametric model the
/// stand-in replaces (165 for the body model, 105 for the quadruped, 63 for objects).
struct ParametricModelSpec {
  Category category = Category::GenericObject;
  std::string name;
  int pose_dim = 0;
  int shape_dim = 0;
  int expression_dim = 0;
  int part_count = 1;
  int reference_pose_dim = 0;
  std::vector<Joint> skeleton;

  bool articulated() const { return !skeleton.empty(); }
  int joint_count() const { return static_cast<int>(skeleton.size()); }
};

using ModelRef = std::shared_ptr<const ParametricModelSpec>;

/// Invariant violations of a spec (empty when valid).
std::vector<std::string> check_spec(const ParametricModelSpec& spec);

ModelRef human_model();
ModelRef animal_model();
ModelRef object_model();
ModelRef preset_model(Category c);

struct MotionSequence {
  ModelRef model;
  double fps = 30.0;
  Eigen::MatrixXd frames;  // F x pose_dim

  int length() const { return static_cast<int>(frames.rows()); }
  int pose_dim() const { return static_cast<int>(frames.cols()); }
};

struct MotionStrength {
  Eigen::VectorXd per_transition;
  double mean = 0.0;
};

MotionStrength motion_strength(const MotionSequence& seq);

MotionSequence resample(const MotionSequence& seq, int new_len);

/// Continues the sequence with the mean velocity of the last four transitions, decayed by
/// 0.9 per appended frame.
MotionSequence extrapolate(const MotionSequence& seq, int extra);

constexpr int kExtrapolationWindow = 4;
constexpr double kExtrapolationDecay = 0.9;

/// One point per joint plus bone samples, in camera-frame world units.
struct LabeledPoints {
  Eigen::Matrix3Xd positions;
  std::vector<int> labels;

  int size() const { return static_cast<int>(positions.cols()); }
};

constexpr int kBoneSamples = 8;

/// Rotation for one joint's three Euler parameters, R = Rx(a) * Ry(b) * Rz(c).
Eigen::Matrix3d euler_xyz(double a, double b, double c);

/// World positions of every joint (3 x joint_count).
Eigen::Matrix3Xd joint_positions(const ParametricModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& pose,
                                 double shape_scale,
                                 const Eigen::Vector3d& root_position = Eigen::Vector3d::Zero());

LabeledPoints forward_kinematics(const ParametricModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& pose,
                                 double shape_scale,
                                 const Eigen::Vector3d& root_position = Eigen::Vector3d::Zero());

enum class ViolationKind { EmptySequence, NonPositiveFps, MissingModel, DimensionMismatch, NonFiniteEntry };

struct Violation {
  ViolationKind kind;
  int frame = -1;
  int channel = -1;
  std::string detail;
};

std::string_view to_string(ViolationKind k);

std::vector<Violation> validate(const MotionSequence& seq);

/// Row-wise check for data that has not yet been packed into a matrix (file input).
std::vector<Violation> validate_rows(int pose_dim, double fps, const std::vector<std::vector<double>>& rows);

/// Throws the matching Error for the first violation.
void require_valid(const MotionSequence& seq);

}  // namespace revision
