#ifndef REGRASP_OBSERVATION_POSE_HPP
#define REGRASP_OBSERVATION_POSE_HPP

#include <cstdint>
#include <functional>
#include <optional>

#include "regrasp/collision_edt.hpp"
#include "regrasp/kinematics.hpp"

namespace regrasp
{

struct ViewPoseRequest
{
  RigidTransform functional_grasp;  ///< f*, world frame
  Vec3 grasp_approach = Vec3::UnitZ();  ///< unit, pregrasp to grasp, world frame
  /// Pose of the hand that holds the object while f* is planned (q*). The
  /// object, and with it f*, moves rigidly with this hand.
  RigidTransform supportive_grasp;
  RigidTransform camera_pose;  ///< camera to world, z along the optical axis
  double d_min = 0.5;     ///< m, closest distance with good sensor readings
  double offset_D = 0.1;  ///< m, added to d_min

  /// Throws InvalidArgument unless d_min > 0, offset_D >= 0 and the approach is nonzero.
  void validate() const;
};

struct ViewSamplerParams
{
  std::size_t n = 128;
  double translation_bound = 0.10;               ///< m, per world axis
  double rotation_bound = 20.0 * M_PI / 180.0;  ///< rad, per world axis
  std::uint64_t seed = 0;
  double rotation_weight = 0.2;  ///< m per rad in the pose distance
};

struct ViewPoseResult
{
  RigidTransform view_pose;        ///< f_o, where the functional grasp frame is shown to the camera
  RigidTransform supportive_pose;  ///< hand target that realizes view_pose
  JointState joints;
  bool canonical = true;
  double distance_to_canonical = 0.0;  ///< translation + rotation_weight * angle
  std::size_t evaluated = 0;
};

/// f_o on the optical axis at d_min + offset_D, turned so the grasp approach
/// points along the camera z axis. Of the rotations that achieve this, the
/// one closest to the current orientation of f* is used (shortest arc).
RigidTransform canonical_view_pose(const ViewPoseRequest& req);

/// Supportive-hand pose placing the functional grasp frame at `view_pose`.
RigidTransform supportive_for_view(const ViewPoseRequest& req, const RigidTransform& view_pose);

/// Candidate view poses around `canonical`, sorted by their distance to it
/// (stable, so ties keep sampling order). Element 0 is the canonical pose.
std::vector<RigidTransform> view_pose_candidates(const RigidTransform& canonical, const ViewSamplerParams& params);

/// Returns joints for a supportive-hand target when it is reachable and collision free.
using ViewFeasibility = std::function<std::optional<JointState>(const RigidTransform& supportive_pose)>;

/// Tries the canonical pose, then the candidates in order of distance, and
/// returns the first feasible one. Throws NoViewPoseFound.
ViewPoseResult generate_view_pose(const ViewPoseRequest& req, const ViewFeasibility& feasible,
                                  const ViewSamplerParams& params = {});

/// Feasibility from IK on `chain` (seeded with `seed`) and a collision check
/// of that chain's spheres against `world`.
ViewPoseResult generate_view_pose(const ViewPoseRequest& req, const KinematicChain& chain, const JointState& seed,
                                  const CollisionWorld& world, const ViewSamplerParams& params = {},
                                  const IkParams& ik_params = {});

}  // namespace regrasp

#endif  // REGRASP_OBSERVATION_POSE_HPP
