#ifndef REGRASP_HANDOVER_PLANNER_HPP
#define REGRASP_HANDOVER_PLANNER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regrasp/collision_edt.hpp"
#include "regrasp/grasp_sampler.hpp"
#include "regrasp/json_io.hpp"
#include "regrasp/kinematics.hpp"

namespace regrasp
{

enum class Arm
{
  Left,
  Right,
};

/// Rigid motion applied to a grasp pair. `rotation` holds angles (rad) about
/// the world x, y and z axes, applied in that order.
struct TransformSample
{
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();
};

Mat3 sample_rotation(const TransformSample& t);

struct TransformSamplerParams
{
  std::size_t n = 256;
  Vec3 translation_lower = Vec3::Constant(-0.25);
  Vec3 translation_upper = Vec3::Constant(0.25);
  Vec3 rotation_lower = Vec3::Constant(-M_PI / 4.0);
  Vec3 rotation_upper = Vec3::Constant(M_PI / 4.0);
  std::uint64_t seed = 0;
};

/// Sample 0 is the identity, the rest follow a 6D Halton sequence scaled to
/// the bounds. Bounds must satisfy lower <= 0 <= upper, else InvalidArgument.
std::vector<TransformSample> sample_transforms(const TransformSamplerParams& params);

/// Translates both poses by t.translation and rotates them about the midpoint
/// of their positions using world axes. inverse(q) * f is preserved.
std::pair<RigidTransform, RigidTransform> apply_handover_transform(const RigidTransform& q, const RigidTransform& f,
                                                                   const TransformSample& t);

/// Collision spheres of one arm tagged "<prefix>_link<k>" (k counts joints
/// from 1) and "<prefix>_tip"; consecutive sphere-carrying links are excluded
/// from each other.
SphereSet arm_spheres(const KinematicChain& chain, const JointState& state, const std::string& prefix);

/// Collision spheres of both arms with prefixes "left" and "right".
SphereSet robot_spheres(const DualArmModel& model, const JointState& left, const JointState& right);

/// Adds the held object as a sphere tagged "object". The object is not
/// checked against the hands of either arm (links from the wrist on).
void attach_object(SphereSet& set, const DualArmModel& model, const Sphere& object);

/// World-frame static robot bodies tagged "torso".
SphereSet static_robot_spheres(const DualArmModel& model);

struct FeasibleGrasp
{
  std::size_t index = 0;  ///< position in the candidate list
  RigidTransform pose;
  JointState joints;
  JointState pregrasp_joints;
};

/// Extra cost term added with a weight to the joint-limit proximity cost.
struct CostTerm
{
  double weight = 1.0;
  std::function<double(const DualArmModel&, const JointState& left, const JointState& right)> evaluate;
};

struct PlannerParams
{
  TransformSamplerParams sampler;
  double proximity_epsilon = 0.35;  ///< rad
  double initial_cost = 1.0;        ///< c_min before the search
  double stop_cost = 0.1;           ///< early stop once c_min drops below this
  bool early_stop = true;
  /// Applied on the right of a grasp to obtain its pregrasp.
  RigidTransform pregrasp_offset = RigidTransform::from_translation(Vec3(0.0, 0.0, -0.10));
  IkParams ik{1e-3, 0.5 * M_PI / 180.0, 150, 2, 0};
  Arm supportive_arm = Arm::Left;
  std::vector<CostTerm> extra_costs;
};

/// Keeps the candidates for which the supportive arm reaches both the grasp
/// and its pregrasp without collisions (other arm at home).
std::vector<FeasibleGrasp> filter_grasps(const std::vector<RigidTransform>& candidates, const DualArmModel& model,
                                         const CollisionWorld& world, const PlannerParams& params = {});
std::vector<FeasibleGrasp> filter_grasps(const GraspCandidateSet& candidates, const DualArmModel& model,
                                         const CollisionWorld& world, const PlannerParams& params = {});

struct HandoverConfiguration
{
  RigidTransform supportive;  ///< q
  RigidTransform functional;  ///< f
  JointState left;
  JointState right;
  double cost = 1.0;
};

struct PlannerReport
{
  std::size_t evaluated = 0;
  std::size_t feasible = 0;
  std::size_t ik_rejected = 0;
  std::size_t collision_rejected = 0;
  double best_cost = 1.0;
  bool early_stopped = false;
  double wall_time = 0.0;  ///< s
};

struct HandoverPlan
{
  HandoverConfiguration config;
  std::size_t grasp_index = 0;   ///< position in the feasible list
  std::size_t sample_index = 0;  ///< position in the transform samples
  TransformSample transform;
  PlannerReport report;
};

/// Cost of a dual-arm state: proximity cost over both arms plus the weighted extra terms.
double handover_cost(const DualArmModel& model, const JointState& left, const JointState& right,
                     const PlannerParams& params);

/// Searches grasps x transform samples for the feasible pair of least cost.
/// Candidates are visited grasp by grasp and only a strictly lower cost
/// replaces the incumbent, so ties go to the lowest grasp index and then the
/// lowest sample index. With early stop enabled the whole search ends as
/// soon as the best cost drops below params.stop_cost. `object` (world frame,
/// at the initial object pose) moves with the supportive hand. Throws
/// NoHandoverFound when no candidate is feasible.
HandoverPlan plan_handover(const std::vector<FeasibleGrasp>& feasible, const RigidTransform& functional,
                           const DualArmModel& model, const CollisionWorld& world, const PlannerParams& params = {},
                           const std::optional<Sphere>& object = std::nullopt);

Json to_json(const PlannerReport& report);
Json to_json(const HandoverConfiguration& config);

}  // namespace regrasp

#endif  // REGRASP_HANDOVER_PLANNER_HPP
