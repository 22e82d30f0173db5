#include "regrasp/rigid_icp.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "regrasp/error.hpp"

namespace regrasp
{

namespace
{

struct Correspondences
{
  std::vector<Vec3> source;
  std::vector<Vec3> target;
  std::vector<Vec3> normal;
  double rms = 0.0;
};

Correspondences find_correspondences(const PointCloud& observed, const RigidTransform& to_reference,
                                     const MeshBvh& reference, double max_dist)
{
  Correspondences c;
  c.source.reserve(observed.size());
  double sum = 0.0;
  for (const Vec3& p : observed.points)
  {
    const Vec3 q = to_reference * p;
    const SurfaceHit hit = reference.closest(q, max_dist);
    if (!hit.valid())
      continue;
    c.source.push_back(q);
    c.target.push_back(hit.point);
    c.normal.push_back(reference.mesh().face_normal(static_cast<std::size_t>(hit.face)));
    sum += hit.squared_distance;
  }
  if (!c.source.empty())
    c.rms = std::sqrt(sum / static_cast<double>(c.source.size()));
  return c;
}

RigidTransform solve_point_to_plane(const Correspondences& c)
{
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  Vec6 b = Vec6::Zero();
  for (std::size_t i = 0; i < c.source.size(); ++i)
  {
    const Vec3& p = c.source[i];
    const Vec3& n = c.normal[i];
    Vec6 j;
    j << p.cross(n), n;
    const double r = (p - c.target[i]).dot(n);
    a.noalias() += j * j.transpose();
    b.noalias() -= j * r;
  }
  // Symmetric shapes leave directions unconstrained; a tiny ridge keeps them still.
  a.diagonal().array() += 1e-12 * std::max(1.0, a.trace());
  const Vec6 x = a.ldlt().solve(b);
  return RigidTransform::from_axis_angle(x.head<3>(), x.tail<3>());
}

RigidTransform solve_point_to_point(const Correspondences& c)
{
  const double n = static_cast<double>(c.source.size());
  Vec3 mean_s = Vec3::Zero();
  Vec3 mean_t = Vec3::Zero();
  for (std::size_t i = 0; i < c.source.size(); ++i)
  {
    mean_s += c.source[i];
    mean_t += c.target[i];
  }
  mean_s /= n;
  mean_t /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < c.source.size(); ++i)
    h += (c.target[i] - mean_t) * (c.source[i] - mean_s).transpose();
  const Mat3 r = nearest_rotation(h);
  return RigidTransform(r, mean_t - r * mean_s);
}

}  // namespace

IcpResult icp_register(const PointCloud& observed, const MeshBvh& reference, const RigidTransform& init,
                       const IcpParams& params)
{
  if (observed.empty())
    throw Error(ErrorCode::EmptyCloud, "ICP on an empty observed cloud");

  RigidTransform to_reference = init.inverse();
  IcpResult result;
  double previous = std::numeric_limits<double>::infinity();
  bool pending_evaluation = true;
  for (int iter = 0; iter < params.max_iterations; ++iter)
  {
    const Correspondences c =
      find_correspondences(observed, to_reference, reference, params.max_correspondence_dist);
    if (c.source.empty())
      throw Error(ErrorCode::NoCorrespondences, "no observed point within the correspondence distance");
    result.iterations = iter + 1;
    result.residual_rms = c.rms;
    if (std::abs(previous - c.rms) < params.convergence_eps)
    {
      result.converged = true;
      pending_evaluation = false;
      break;
    }
    previous = c.rms;
    const RigidTransform step =
      params.metric == IcpMetric::PointToPlane ? solve_point_to_plane(c) : solve_point_to_point(c);
    to_reference = step * to_reference;
  }
  if (pending_evaluation)
  {
    const Correspondences c =
      find_correspondences(observed, to_reference, reference, params.max_correspondence_dist);
    if (c.source.empty())
      throw Error(ErrorCode::NoCorrespondences, "ICP diverged beyond the correspondence distance");
    result.residual_rms = c.rms;
  }
  if (!std::isfinite(result.residual_rms))
    throw Error(ErrorCode::NonFinite, "ICP produced a non-finite residual");
  result.correction = init * to_reference;
  return result;
}

IcpResult icp_register(const PointCloud& observed, const TriangleMesh& reference, const RigidTransform& init,
                       const IcpParams& params)
{
  if (observed.empty() || reference.empty())
    throw Error(ErrorCode::EmptyCloud, "ICP needs a non-empty cloud and reference mesh");
  return icp_register(observed, MeshBvh(reference), init, params);
}

RigidTransform refined_pose(const RigidTransform& init, const IcpResult& result)
{
  return result.correction.inverse() * init;
}

Cuboid::Cuboid(const RigidTransform& pose, const Vec3& half_extents)
  : pose_(pose), inverse_(pose.inverse()), half_extents_(half_extents)
{
  if (!(half_extents.array() > 0.0).all())
    throw Error(ErrorCode::InvalidArgument, "cuboid half extents must be positive");
}

bool Cuboid::contains(const Vec3& p) const
{
  const Vec3 local = inverse_ * p;
  return (local.array().abs() <= half_extents_.array()).all();
}

PointCloud cuboid_filter(const PointCloud& cloud, const Cuboid& cuboid)
{
  PointCloud out;
  const bool normals = cloud.has_normals();
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    if (cuboid.contains(cloud.points[i]))
      continue;
    out.points.push_back(cloud.points[i]);
    if (normals)
      out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

InHandRefinement inhand_refine(const RigidTransform& expected_object_pose, const PointCloud& observed,
                               const TriangleMesh& deformed_mesh, const Cuboid& hand_cuboid,
                               const RigidTransform& functional_grasp, const InHandParams& params)
{
  const PointCloud filtered = cuboid_filter(observed, hand_cuboid);
  if (filtered.empty())
    throw Error(ErrorCode::NoCorrespondences, "every observed point lies inside the hand cuboid");

  InHandRefinement out;
  out.points_used = filtered.size();
  out.icp = icp_register(filtered, deformed_mesh, expected_object_pose, params.icp);
  if (out.icp.residual_rms > params.residual_gate)
    throw Error(ErrorCode::RefinementRejected,
                "in-hand ICP residual " + std::to_string(out.icp.residual_rms) + " m exceeds gate");

  const RigidTransform displacement = out.icp.correction.inverse();
  out.t_view = functional_grasp.inverse() * displacement * functional_grasp;
  out.refined_grasp = functional_grasp * out.t_view;
  return out;
}

}  // namespace regrasp
