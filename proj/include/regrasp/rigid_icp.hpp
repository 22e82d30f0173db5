#ifndef REGRASP_RIGID_ICP_HPP
#define REGRASP_RIGID_ICP_HPP

#include "regrasp/closest_point.hpp"
#include "regrasp/geometry.hpp"

namespace regrasp
{

enum class IcpMetric
{
  PointToPlane,
  PointToPoint,
};

struct IcpParams
{
  int max_iterations = 60;
  /// Stop when the RMS residual changes by less than this between iterations (m).
  double convergence_eps = 1e-6;
  /// Observed points farther than this from the surface are ignored (m).
  double max_correspondence_dist = 0.05;
  IcpMetric metric = IcpMetric::PointToPlane;
};

/// `correction` is a world-frame motion that moves the observed cloud onto
/// the reference mesh placed at the initial pose. The refined object pose is
/// therefore `correction.inverse() * init` (see refined_pose()).
struct IcpResult
{
  RigidTransform correction;
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Point-to-surface ICP of `observed` (world frame) against `reference`
/// (object frame) posed at `init`. Throws EmptyCloud for empty inputs and
/// NoCorrespondences when no point lies within the correspondence distance.
IcpResult icp_register(const PointCloud& observed, const MeshBvh& reference, const RigidTransform& init,
                       const IcpParams& params = {});
IcpResult icp_register(const PointCloud& observed, const TriangleMesh& reference, const RigidTransform& init,
                       const IcpParams& params = {});

RigidTransform refined_pose(const RigidTransform& init, const IcpResult& result);

/// Oriented box; `half_extents` strictly positive.
class Cuboid
{
public:
  Cuboid(const RigidTransform& pose, const Vec3& half_extents);

  const RigidTransform& pose() const { return pose_; }
  const Vec3& half_extents() const { return half_extents_; }
  bool contains(const Vec3& p) const;

private:
  RigidTransform pose_;
  RigidTransform inverse_;
  Vec3 half_extents_;
};

/// Keeps exactly the points outside the cuboid (normals follow their points).
PointCloud cuboid_filter(const PointCloud& cloud, const Cuboid& cuboid);

struct InHandParams
{
  IcpParams icp;
  /// Refinements with a larger residual are rejected (m).
  double residual_gate = 0.008;
};

struct InHandRefinement
{
  /// Object displacement expressed in the functional-grasp frame, so that
  /// refined_grasp = functional_grasp * t_view.
  RigidTransform t_view;
  RigidTransform refined_grasp;
  IcpResult icp;
  std::size_t points_used = 0;
};

/// Measures the in-hand object displacement and corrects the functional grasp.
///
/// `observed` is the sensor cloud (world frame) captured while the object is
/// held; points inside `hand_cuboid` are discarded before registering
/// `deformed_mesh` posed at `expected_object_pose`. The world displacement D
/// (actual = D * expected) is mapped into the grasp frame,
/// t_view = f^-1 * D * f, so the grasp keeps its pose relative to the object.
/// Throws NoCorrespondences when nothing survives the filter and
/// RefinementRejected when the ICP residual exceeds the gate.
InHandRefinement inhand_refine(const RigidTransform& expected_object_pose, const PointCloud& observed,
                               const TriangleMesh& deformed_mesh, const Cuboid& hand_cuboid,
                               const RigidTransform& functional_grasp, const InHandParams& params = {});

}  // namespace regrasp

#endif  // REGRASP_RIGID_ICP_HPP
