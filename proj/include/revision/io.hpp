#pragma once

#include "revision/motion.hpp"
#include "revision/perturb.hpp"
#include "revision/pmp.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace revision {

struct SceneSpec;
struct VideoClip;
struct GeneratorConfig;
struct RevisionConfig;
struct EvalReport;
struct CameraSpec;
struct ConditionChannels;
struct UserCondition;

using Json = nlohmann::json;

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// {"category","name","pose_dim","shape_dim","expression_dim","part_count","reference_pose_dim",
/// "skeleton":[{"id","parent","rest_offset","part_label"}]}; invalid specs are rejected.
Json model_spec_to_json(const ParametricModelSpec& spec);
ParametricModelSpec model_spec_from_json(const Json& j);

/// {"version":"1","category","pose_dim","shape_dim","expression_dim","fps","frames"}
Json motion_to_json(const MotionSequence& seq);
/// Uses the category preset when pose_dim matches; otherwise a skeleton-free model of the
/// file's dimensionality (full-size annotations can be refined but not rendered).
MotionSequence motion_from_json(const Json& j);

void save_motion(const MotionSequence& seq, const std::filesystem::path& path);
MotionSequence load_motion(const std::filesystem::path& path);

/// {"objects":[motion, ...]}
void save_motions(const std::vector<MotionSequence>& seqs, const std::filesystem::path& path);
std::vector<MotionSequence> load_motions(const std::filesystem::path& path);

Json record_to_json(const PerturbationRecord& r);
PerturbationRecord record_from_json(const Json& j);

Json camera_to_json(const CameraSpec& c);
CameraSpec camera_from_json(const Json& j);

Json scene_to_json(const SceneSpec& scene);
/// Missing initial poses default to the rest pose (articulated) or the disc template (generic).
SceneSpec scene_from_json(const Json& j);

Json pmp_config_to_json(const PmpConfig& c);
PmpConfig pmp_config_from_json(const Json& j);  // missing keys keep their defaults

Json generator_config_to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const Json& j, const GeneratorConfig& defaults);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

Json revision_config_to_json(const RevisionConfig& c);
RevisionConfig revision_config_from_json(const Json& j);

Json user_condition_to_json(const UserCondition& u);
UserCondition user_condition_from_json(const Json& j);

Json report_to_json(const EvalReport& r);
EvalReport report_from_json(const Json& j);

/// Directory of frame_%04d.pgm plus clip.json {"fps","resolution":[w,h],"frames"}.
void save_clip(const VideoClip& clip, const std::filesystem::path& dir);
VideoClip load_clip(const std::filesystem::path& dir);

/// part_%04d.pgm and confidence_%04d.pgm (with triple sidecars) plus channels.json.
void save_channels(const ConditionChannels& channels, const std::filesystem::path& dir);

}  // namespace revision
