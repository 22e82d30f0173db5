#include "regrasp/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "regrasp/error.hpp"

namespace regrasp
{

KinematicChain::KinematicChain(std::string name, const RigidTransform& base_pose, std::vector<Joint> joints,
                               const RigidTransform& tip_offset, std::vector<LinkSphere> tip_spheres)
  : name_(std::move(name)),
    base_pose_(base_pose),
    joints_(std::move(joints)),
    tip_offset_(tip_offset),
    tip_spheres_(std::move(tip_spheres))
{
  for (Joint& j : joints_)
  {
    if (!(j.lower < j.upper))
      throw Error(ErrorCode::InvalidArgument, "joint '" + j.name + "' needs lower < upper");
    if (j.axis.norm() < 1e-12)
      throw Error(ErrorCode::InvalidArgument, "joint '" + j.name + "' has a zero axis");
    j.axis.normalize();
  }
  // The first origin only places the shoulder; it does not add reach.
  for (std::size_t i = 1; i < joints_.size(); ++i)
    reach_ += joints_[i].origin.translation().norm();
  reach_ += tip_offset_.translation().norm();
}

Eigen::VectorXd KinematicChain::lower_limits() const
{
  Eigen::VectorXd v(dof());
  for (std::size_t i = 0; i < dof(); ++i)
    v[i] = joints_[i].lower;
  return v;
}

Eigen::VectorXd KinematicChain::upper_limits() const
{
  Eigen::VectorXd v(dof());
  for (std::size_t i = 0; i < dof(); ++i)
    v[i] = joints_[i].upper;
  return v;
}

bool KinematicChain::within_limits(const JointState& state, double tolerance) const
{
  if (static_cast<std::size_t>(state.size()) != dof())
    return false;
  for (std::size_t i = 0; i < dof(); ++i)
    if (state[i] < joints_[i].lower - tolerance || state[i] > joints_[i].upper + tolerance)
      return false;
  return true;
}

namespace
{

void check_dimension(const KinematicChain& chain, const JointState& state)
{
  if (static_cast<std::size_t>(state.size()) != chain.dof())
    throw Error(ErrorCode::DimensionMismatch, "joint state has " + std::to_string(state.size()) +
                                                " entries, chain '" + chain.name() + "' has " +
                                                std::to_string(chain.dof()) + " joints");
}

RigidTransform joint_rotation(const Joint& j, double theta)
{
  return RigidTransform(Eigen::Quaterniond(Eigen::AngleAxisd(theta, j.axis)), Vec3::Zero());
}

}  // namespace

RigidTransform fk(const KinematicChain& chain, const JointState& state)
{
  check_dimension(chain, state);
  RigidTransform t = chain.base_pose();
  for (std::size_t i = 0; i < chain.dof(); ++i)
    t = t * chain.joints()[i].origin * joint_rotation(chain.joints()[i], state[i]);
  return t * chain.tip_offset();
}

std::vector<RigidTransform> link_frames(const KinematicChain& chain, const JointState& state)
{
  check_dimension(chain, state);
  std::vector<RigidTransform> frames;
  frames.reserve(chain.dof() + 1);
  RigidTransform t = chain.base_pose();
  for (std::size_t i = 0; i < chain.dof(); ++i)
  {
    t = t * chain.joints()[i].origin * joint_rotation(chain.joints()[i], state[i]);
    frames.push_back(t);
  }
  frames.push_back(t * chain.tip_offset());
  return frames;
}

std::vector<Sphere> chain_spheres(const KinematicChain& chain, const JointState& state)
{
  const auto frames = link_frames(chain, state);
  std::vector<Sphere> out;
  for (std::size_t i = 0; i < chain.dof(); ++i)
    for (const LinkSphere& s : chain.joints()[i].spheres)
      out.push_back({frames[i] * s.center, s.radius});
  for (const LinkSphere& s : chain.tip_spheres())
    out.push_back({frames.back() * s.center, s.radius});
  return out;
}

Eigen::MatrixXd jacobian(const KinematicChain& chain, const JointState& state)
{
  const auto frames = link_frames(chain, state);
  const Vec3 tip = frames.back().translation();
  Eigen::MatrixXd j(6, chain.dof());
  for (std::size_t i = 0; i < chain.dof(); ++i)
  {
    const Vec3 z = frames[i].rotate(chain.joints()[i].axis);
    j.block<3, 1>(0, i) = z.cross(tip - frames[i].translation());
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

namespace
{

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Rotation rows are scaled by this length so both error parts are in meters.
constexpr double kRotationWeight = 0.1;

Vec6 pose_residual(const RigidTransform& current, const RigidTransform& target)
{
  Vec6 e;
  e.head<3>() = target.translation() - current.translation();
  const Eigen::AngleAxisd aa(target.rotation() * current.rotation().conjugate());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI)
  {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  e.tail<3>() = axis * angle;
  return e;
}

std::optional<JointState> solve_from(const KinematicChain& chain, const RigidTransform& target, JointState theta,
                                     const IkParams& params, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
  theta = theta.cwiseMax(lo).cwiseMin(hi);
  auto weighted = [](Vec6 e) {
    e.tail<3>() *= kRotationWeight;
    return e;
  };
  Vec6 err = pose_residual(fk(chain, theta), target);
  double cost = weighted(err).squaredNorm();
  double lambda = 1e-2;
  for (int it = 0; it < params.max_iter; ++it)
  {
    if (err.head<3>().norm() < params.pos_tol && err.tail<3>().norm() < params.rot_tol)
      return theta;
    Eigen::MatrixXd j = jacobian(chain, theta);
    j.bottomRows<3>() *= kRotationWeight;
    const Vec6 e = weighted(err);
    Eigen::Matrix<double, 6, 6> jjt = j * j.transpose();
    jjt.diagonal().array() += lambda * lambda;
    Eigen::VectorXd step = j.transpose() * jjt.ldlt().solve(e);
    const double largest = step.cwiseAbs().maxCoeff();
    if (largest > 0.4)
      step *= 0.4 / largest;
    const JointState candidate = (theta + step).cwiseMax(lo).cwiseMin(hi);
    const Vec6 cand_err = pose_residual(fk(chain, candidate), target);
    const double cand_cost = weighted(cand_err).squaredNorm();
    if (cand_cost < cost)
    {
      theta = candidate;
      err = cand_err;
      cost = cand_cost;
      lambda = std::max(lambda * 0.5, 1e-6);
    }
    else
    {
      lambda *= 4.0;
      if (lambda > 10.0)
        break;
    }
  }
  if (err.head<3>().norm() < params.pos_tol && err.tail<3>().norm() < params.rot_tol)
    return theta;
  return std::nullopt;
}

}  // namespace

std::optional<JointState> ik(const KinematicChain& chain, const RigidTransform& target, const JointState& seed,
                             const IkParams& params)
{
  check_dimension(chain, seed);
  if (chain.dof() == 0)
    return std::nullopt;

  const Vec3 shoulder = (chain.base_pose() * chain.joints().front().origin).translation();
  if ((target.translation() - shoulder).norm() > chain.reach() + params.pos_tol)
    return std::nullopt;

  const Eigen::VectorXd lo = chain.lower_limits();
  const Eigen::VectorXd hi = chain.upper_limits();
  if (auto sol = solve_from(chain, target, seed, params, lo, hi))
    return sol;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int r = 0; r < params.restarts; ++r)
  {
    JointState s(chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i)
      s[i] = lo[i] + (hi[i] - lo[i]) * (0.1 + 0.8 * uni(rng));
    if (auto sol = solve_from(chain, target, s, params, lo, hi))
      return sol;
  }
  return std::nullopt;
}

Eigen::VectorXd joint_proximity(const JointState& state, const KinematicChain& chain)
{
  check_dimension(chain, state);
  Eigen::VectorXd d(chain.dof());
  for (std::size_t i = 0; i < chain.dof(); ++i)
  {
    const Joint& j = chain.joints()[i];
    d[i] = std::min(std::abs(j.upper - state[i]), std::abs(state[i] - j.lower));
  }
  return d;
}

double proximity_cost(const Eigen::VectorXd& deltas, double epsilon)
{
  if (!(epsilon > 0.0))
    throw Error(ErrorCode::InvalidArgument, "proximity epsilon must be positive");
  if (deltas.size() == 0)
    return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < deltas.size(); ++i)
  {
    const double d = std::min(deltas[i], epsilon);
    sum += d * d / (epsilon * epsilon) - 2.0 * d / epsilon + 1.0;
  }
  // Rounding in the expanded form can dip a hair below zero.
  return std::clamp(sum / static_cast<double>(deltas.size()), 0.0, 1.0);
}

double proximity_cost(const JointState& state, const KinematicChain& chain, double epsilon)
{
  return proximity_cost(joint_proximity(state, chain), epsilon);
}

double proximity_cost(const JointState& left, const KinematicChain& left_chain, const JointState& right,
                      const KinematicChain& right_chain, double epsilon)
{
  const Eigen::VectorXd dl = joint_proximity(left, left_chain);
  const Eigen::VectorXd dr = joint_proximity(right, right_chain);
  Eigen::VectorXd all(dl.size() + dr.size());
  all << dl, dr;
  return proximity_cost(all, epsilon);
}

}  // namespace regrasp
