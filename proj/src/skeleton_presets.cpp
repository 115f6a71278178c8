#include "revision/motion.hpp"

namespace revision {

namespace {

// Camera frame: +x right, +y down, +z away from the camera. One part label per joint.
ParametricModelSpec make_articulated(Category category, std::string name, int reference_pose_dim, int shape_dim,
                                     int expression_dim,
                                     const std::vector<std::pair<int, Eigen::Vector3d>>& joints) {
  ParametricModelSpec spec;
  spec.category = category;
  spec.name = std::move(name);
  spec.reference_pose_dim = reference_pose_dim;
  spec.shape_dim = shape_dim;
  spec.expression_dim = expression_dim;
  spec.part_count = static_cast<int>(joints.size());
  spec.pose_dim = 3 * spec.part_count;
  for (int i = 0; i < static_cast<int>(joints.size()); ++i)
    spec.skeleton.push_back(Joint{i, joints[i].first, joints[i].second, i + 1});
  return spec;
}

}  // namespace

ModelRef human_model() {
  // Body joints in the order of the common 22-joint body layout, facing the camera in a T-pose.
  static const ModelRef model = std::make_shared<const ParametricModelSpec>(make_articulated(
      Category::Human, "human-22", 165, 10, 10,
      {
          {-1, {0.0, 0.0, 0.0}},       // 0 pelvis
          {0, {0.09, 0.08, 0.0}},      // 1 left hip
          {0, {-0.09, 0.08, 0.0}},     // 2 right hip
          {0, {0.0, -0.12, 0.0}},      // 3 spine1
          {1, {0.0, 0.40, 0.0}},       // 4 left knee
          {2, {0.0, 0.40, 0.0}},       // 5 right knee
          {3, {0.0, -0.14, 0.0}},      // 6 spine2
          {4, {0.0, 0.40, 0.0}},       // 7 left ankle
          {5, {0.0, 0.40, 0.0}},       // 8 right ankle
          {6, {0.0, -0.06, 0.0}},      // 9 spine3
          {7, {0.03, 0.06, -0.10}},    // 10 left foot
          {8, {-0.03, 0.06, -0.10}},   // 11 right foot
          {9, {0.0, -0.20, 0.0}},      // 12 neck
          {9, {0.08, -0.14, 0.0}},     // 13 left collar
          {9, {-0.08, -0.14, 0.0}},    // 14 right collar
          {12, {0.0, -0.14, 0.0}},     // 15 head
          {13, {0.10, 0.02, 0.0}},     // 16 left shoulder
          {14, {-0.10, 0.02, 0.0}},    // 17 right shoulder
          {16, {0.26, 0.0, 0.0}},      // 18 left elbow
          {17, {-0.26, 0.0, 0.0}},     // 19 right elbow
          {18, {0.25, 0.0, 0.0}},      // 20 left wrist
          {19, {-0.25, 0.0, 0.0}},     // 21 right wrist
      }));
  return model;
}

ModelRef animal_model() {
  // Quadruped seen from the side, head towards +x.
  static const ModelRef model = std::make_shared<const ParametricModelSpec>(make_articulated(
      Category::Animal, "quadruped-16", 105, 41, 0,
      {
          {-1, {0.0, 0.0, 0.0}},       // 0 hips
          {0, {0.25, 0.0, 0.0}},       // 1 spine
          {1, {0.20, 0.0, 0.0}},       // 2 chest
          {2, {0.12, -0.15, 0.0}},     // 3 neck
          {3, {0.12, -0.05, 0.0}},     // 4 head
          {4, {0.10, 0.06, 0.0}},      // 5 snout
          {0, {-0.15, -0.05, 0.0}},    // 6 tail base
          {6, {-0.15, 0.03, 0.0}},     // 7 tail tip
          {2, {0.02, 0.22, -0.06}},    // 8 front-left elbow
          {8, {0.0, 0.20, 0.0}},       // 9 front-left paw
          {2, {-0.02, 0.22, 0.06}},    // 10 front-right elbow
          {10, {0.0, 0.20, 0.0}},      // 11 front-right paw
          {0, {0.02, 0.22, -0.06}},    // 12 back-left knee
          {12, {0.0, 0.20, 0.0}},      // 13 back-left paw
          {0, {-0.02, 0.22, 0.06}},    // 14 back-right knee
          {14, {0.0, 0.20, 0.0}},      // 15 back-right paw
      }));
  return model;
}

ModelRef object_model() {
  static const ModelRef model = [] {
    ParametricModelSpec spec;
    spec.category = Category::GenericObject;
    spec.name = "object-21pt";
    spec.pose_dim = 63;
    spec.reference_pose_dim = 63;
    spec.part_count = 1;
    return std::make_shared<const ParametricModelSpec>(std::move(spec));
  }();
  return model;
}

}  // namespace revision
