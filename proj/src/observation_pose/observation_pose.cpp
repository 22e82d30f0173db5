#include "regrasp/observation_pose.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Geometry>

#include "regrasp/error.hpp"
#include "regrasp/handover_planner.hpp"
#include "regrasp/sampling.hpp"

namespace regrasp
{

void ViewPoseRequest::validate() const
{
  if (!(d_min > 0.0))
    throw Error(ErrorCode::InvalidArgument, "d_min must be positive");
  if (!(offset_D >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "offset_D must be non-negative");
  if (!(grasp_approach.norm() > 1e-12))
    throw Error(ErrorCode::InvalidArgument, "grasp approach must be nonzero");
}

RigidTransform canonical_view_pose(const ViewPoseRequest& req)
{
  req.validate();
  const Vec3 cam_z = req.camera_pose.rotate(Vec3::UnitZ());
  const Mat3 align = shortest_arc(req.grasp_approach.normalized(), cam_z);
  const Vec3 position = req.camera_pose * Vec3(0.0, 0.0, req.d_min + req.offset_D);
  return RigidTransform(Mat3(align * req.functional_grasp.rotation_matrix()), position);
}

RigidTransform supportive_for_view(const ViewPoseRequest& req, const RigidTransform& view_pose)
{
  return view_pose * req.functional_grasp.inverse() * req.supportive_grasp;
}

std::vector<RigidTransform> view_pose_candidates(const RigidTransform& canonical, const ViewSamplerParams& params)
{
  std::vector<RigidTransform> poses{canonical};
  std::vector<double> dist{0.0};
  for (const Eigen::VectorXd& p : halton_points(params.n, 6, params.seed))
  {
    const Vec3 dt = params.translation_bound * (2.0 * p.head<3>().array() - 1.0).matrix();
    const Vec3 dr = params.rotation_bound * (2.0 * p.tail<3>().array() - 1.0).matrix();
    const Mat3 r = (Eigen::AngleAxisd(dr.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(dr.y(), Vec3::UnitY()) *
                    Eigen::AngleAxisd(dr.x(), Vec3::UnitX()))
                       .toRotationMatrix();
    const RigidTransform pose(Mat3(r * canonical.rotation_matrix()), canonical.translation() + dt);
    const PoseError e = pose_error(pose, canonical);
    poses.push_back(pose);
    dist.push_back(e.translation + params.rotation_weight * e.rotation);
  }
  std::vector<std::size_t> order(poses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  std::vector<RigidTransform> out;
  out.reserve(poses.size());
  for (std::size_t i : order)
    out.push_back(poses[i]);
  return out;
}

ViewPoseResult generate_view_pose(const ViewPoseRequest& req, const ViewFeasibility& feasible,
                                  const ViewSamplerParams& params)
{
  const RigidTransform canonical = canonical_view_pose(req);
  ViewPoseResult result;
  for (const RigidTransform& pose : view_pose_candidates(canonical, params))
  {
    ++result.evaluated;
    const RigidTransform hand = supportive_for_view(req, pose);
    if (auto joints = feasible(hand))
    {
      const PoseError e = pose_error(pose, canonical);
      result.view_pose = pose;
      result.supportive_pose = hand;
      result.joints = *joints;
      result.distance_to_canonical = e.translation + params.rotation_weight * e.rotation;
      result.canonical = result.evaluated == 1;
      return result;
    }
  }
  throw Error(ErrorCode::NoViewPoseFound,
              "none of " + std::to_string(result.evaluated) + " view poses is reachable and collision free");
}

ViewPoseResult generate_view_pose(const ViewPoseRequest& req, const KinematicChain& chain, const JointState& seed,
                                  const CollisionWorld& world, const ViewSamplerParams& params,
                                  const IkParams& ik_params)
{
  return generate_view_pose(
      req,
      [&](const RigidTransform& target) -> std::optional<JointState> {
        auto s = ik(chain, target, seed, ik_params);
        if (!s || !check_free(world, arm_spheres(chain, *s, chain.name())).free)
          return std::nullopt;
        return s;
      },
      params);
}

}  // namespace regrasp
