#ifndef REGRASP_KINEMATICS_HPP
#define REGRASP_KINEMATICS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "regrasp/geometry.hpp"

namespace regrasp
{

/// Joint positions in radians, one per joint of a chain.
using JointState = Eigen::VectorXd;

struct LinkSphere
{
  Vec3 center = Vec3::Zero();  ///< in the link frame
  double radius = 0.0;
};

/// Revolute joint. `origin` places the joint frame in its parent frame; the
/// joint then rotates about `axis` (expressed in the joint frame).
struct Joint
{
  std::string name;
  RigidTransform origin;
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;
  /// Collision spheres of the link driven by this joint.
  std::vector<LinkSphere> spheres;
};

class KinematicChain
{
public:
  KinematicChain() = default;
  KinematicChain(std::string name, const RigidTransform& base_pose, std::vector<Joint> joints,
                 const RigidTransform& tip_offset, std::vector<LinkSphere> tip_spheres = {});

  const std::string& name() const { return name_; }
  std::size_t dof() const { return joints_.size(); }
  const std::vector<Joint>& joints() const { return joints_; }
  const RigidTransform& base_pose() const { return base_pose_; }
  const RigidTransform& tip_offset() const { return tip_offset_; }
  const std::vector<LinkSphere>& tip_spheres() const { return tip_spheres_; }

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  bool within_limits(const JointState& state, double tolerance = 0.0) const;
  /// Sum of joint-origin and tip offsets; an upper bound on the distance
  /// from the first joint to the tip.
  double reach() const { return reach_; }

private:
  std::string name_;
  RigidTransform base_pose_;
  std::vector<Joint> joints_;
  RigidTransform tip_offset_;
  std::vector<LinkSphere> tip_spheres_;
  double reach_ = 0.0;
};

/// base_pose * prod_i(origin_i * rot(axis_i, theta_i)) * tip_offset.
/// Throws DimensionMismatch.
RigidTransform fk(const KinematicChain& chain, const JointState& state);

/// World frame of every link (after its joint rotation), followed by the tip.
std::vector<RigidTransform> link_frames(const KinematicChain& chain, const JointState& state);

/// World-frame collision spheres of the chain at `state`, tip spheres last.
std::vector<Sphere> chain_spheres(const KinematicChain& chain, const JointState& state);

/// 6 x dof geometric Jacobian of the tip (linear rows first).
Eigen::MatrixXd jacobian(const KinematicChain& chain, const JointState& state);

struct IkParams
{
  double pos_tol = 1e-3;            ///< m
  double rot_tol = 0.5 * M_PI / 180.0;  ///< rad
  int max_iter = 200;
  int restarts = 5;
  std::uint64_t seed = 0;
};

/// Damped least squares on the 6D pose error with joint-limit clamping. The
/// seed is tried first, then `restarts` random limit-respecting seeds drawn
/// from `params.seed`. Returns nullopt when no attempt converges.
std::optional<JointState> ik(const KinematicChain& chain, const RigidTransform& target, const JointState& seed,
                             const IkParams& params = {});

/// delta_i = min(|upper_i - theta_i|, |theta_i - lower_i|).
Eigen::VectorXd joint_proximity(const JointState& state, const KinematicChain& chain);

/// Joint-limit proximity cost mean_i (min(delta_i, eps)/eps - 1)^2, i.e. the
/// expanded quadratic 1/eps^2 d^2 - 2/eps d + 1 with d clamped at eps so the
/// value stays in [0, 1].
double proximity_cost(const Eigen::VectorXd& deltas, double epsilon);
double proximity_cost(const JointState& state, const KinematicChain& chain, double epsilon);
double proximity_cost(const JointState& left, const KinematicChain& left_chain, const JointState& right,
                      const KinematicChain& right_chain, double epsilon);

struct DualArmModel
{
  std::string name;
  KinematicChain left;
  KinematicChain right;
  JointState left_home;
  JointState right_home;
  /// Non-moving robot bodies (torso, head) in the common base frame.
  std::vector<Sphere> static_spheres;
  /// Hand region removed before in-hand registration, in the tip frame.
  RigidTransform hand_cuboid_offset;
  Vec3 hand_cuboid_half_extents = Vec3(0.05, 0.05, 0.08);
};

/// Loads the JSON robot description (see README for the schema).
DualArmModel load_robot_description(const std::filesystem::path& path);
DualArmModel parse_robot_description(const std::string& json_text);

/// Location of the reference robot shipped with the sources; honours
/// $REGRASP_ROBOT when set.
std::filesystem::path default_robot_path();

}  // namespace regrasp

#endif  // REGRASP_KINEMATICS_HPP
