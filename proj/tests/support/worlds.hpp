#ifndef REGRASP_TEST_WORLDS_HPP
#define REGRASP_TEST_WORLDS_HPP

#include <vector>

#include "regrasp/collision_edt.hpp"
#include "regrasp/handover_planner.hpp"
#include "regrasp/kinematics.hpp"

namespace testworld
{

using namespace regrasp;

struct BoxObstacle
{
  RigidTransform pose;
  Vec3 half_extents;
};

/// Grid around the robot workspace with the given boxes voxelized.
inline CollisionWorld make_world(const DualArmModel& model, const std::vector<BoxObstacle>& boxes,
                                 double resolution = 0.02)
{
  const Vec3 origin(-0.2, -0.8, -0.3);
  const GridDims dims{60, 80, 75};
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  for (const BoxObstacle& b : boxes)
    voxelize_box(occ, origin, resolution, dims, b.pose, b.half_extents);
  CollisionWorld w;
  w.field = build_edt(occ, origin, resolution, dims);
  w.robot_static = static_robot_spheres(model);
  w.clearance_margin = 0.005;
  return w;
}

/// Table whose top is the plane z = 0, in front of the robot.
inline BoxObstacle table()
{
  return {RigidTransform::from_translation(Vec3(0.6, 0.0, -0.2)), Vec3(0.3, 0.6, 0.2)};
}

/// Top-down grasp (approach -z) at `p`, closing axis rotated by `yaw` about z.
inline RigidTransform top_down(const Vec3& p, double yaw = 0.0)
{
  Mat3 r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return RigidTransform(Mat3(Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix() * r), p);
}

}  // namespace testworld

#endif  // REGRASP_TEST_WORLDS_HPP
