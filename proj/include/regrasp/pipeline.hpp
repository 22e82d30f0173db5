#ifndef REGRASP_PIPELINE_HPP
#define REGRASP_PIPELINE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regrasp/grasp_sampler.hpp"
#include "regrasp/handover_planner.hpp"
#include "regrasp/observation_pose.hpp"
#include "regrasp/rigid_icp.hpp"
#include "regrasp/scene.hpp"
#include "regrasp/shape_space.hpp"

namespace regrasp
{

inline constexpr int kReportVersion = 1;

struct PipelineParams
{
  IcpParams icp;
  InferParams infer;
  WarpParams warp;
  GripperParams gripper;
  SamplerParams sampler;
  SelectionParams selection;
  PlannerParams planner;
  ViewSamplerParams view{.rotation_bound = 40.0 * M_PI / 180.0};
  /// Supportive-arm IK for view poses, seeded from the handover state.
  IkParams view_ik;
  double view_d_min = 0.5;   ///< m
  double view_offset = 0.1;  ///< m
  InHandParams inhand;
  double grid_resolution = 0.02;  ///< m, environment distance field
  double clearance_margin = 0.005;  ///< m
  /// When false the in-hand stages are skipped and the planned grasp is used as is.
  bool refine = true;
};

struct StageRecord
{
  std::string name;
  double seconds = 0.0;
  bool success = true;
  std::string message;
};

struct PipelineReport
{
  std::string scene;
  std::string category;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;  ///< execution order
  std::vector<std::string> warnings;
  bool completed = false;
  std::string failure_stage;  ///< empty unless aborted
  std::string failure_code;
  std::string failure_reason;

  /// Planned functional grasp against the truth at the handover.
  std::optional<PoseError> unrefined_error;
  /// Final functional grasp against the truth at the handover.
  std::optional<PoseError> final_error;
  bool refinement_applied = false;
  bool success = false;
  bool final_grasp_reachable = false;

  double registration_fitness = 0.0;  ///< m
  std::size_t grasp_candidates = 0;   ///< after doubling
  std::size_t feasible_grasps = 0;
  std::optional<PlannerReport> planner;
  double handover_cost = 0.0;
  bool view_pose_canonical = false;
  RigidTransform disturbance;
  std::optional<RigidTransform> final_grasp;
  std::optional<RigidTransform> true_grasp;

  double total_seconds() const;
};

/// `include_times` false drops every wall-clock value, which makes the output
/// a pure function of the inputs.
Json to_json(const PipelineReport& report, bool include_times = true);

/// Success: final translation error < thresholds.translation and rotation < thresholds.rotation.
bool grasp_success(const PoseError& error, const SuccessThresholds& thresholds);

/// Runs perception refinement, shape registration, supportive grasp
/// sampling, handover planning, view pose, simulated disturbance, in-hand
/// observation and refinement, then checks the final grasp. Stage errors are
/// caught and recorded; the report is always returned.
PipelineReport run_pipeline(const Scene& scene, const ShapeSpaceModel& model, const DualArmModel& robot,
                            const PipelineParams& params = {});

/// Environment distance field holding the table.
CollisionWorld make_table_world(const TableConfig& table, const DualArmModel& robot, double resolution,
                                double clearance_margin);

/// Stores `pose` (canonical frame) as the model's functional grasp.
void annotate_functional_grasp(ShapeSpaceModel& model, const RigidTransform& pose);
/// Same, loading and saving the model at `path` (the sidecar JSON carries the annotation).
void annotate_functional_grasp(const std::filesystem::path& path, const RigidTransform& pose);

struct CategoryTrainingParams
{
  std::size_t instances = 12;
  std::uint64_t seed = 1;
  TrainParams train = default_train_params();

  static TrainParams default_train_params();
};

/// Trains the shape space of a synthetic category on generated instances
/// and annotates the category's functional grasp.
ShapeSpaceModel train_synthetic_category(const std::string& name, const CategoryTrainingParams& params = {});

struct BatchEntry
{
  std::string name;
  PipelineReport report;
};

/// Scene files (*.json) of a directory in lexicographic order.
std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir);

/// Per-scene outcomes and aggregates, without wall-clock values.
Json batch_summary(const std::vector<BatchEntry>& entries);

}  // namespace regrasp

#endif  // REGRASP_PIPELINE_HPP
