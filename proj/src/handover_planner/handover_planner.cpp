#include "regrasp/handover_planner.hpp"

#include <chrono>
#include <string>

#include <Eigen/Geometry>

#include "regrasp/error.hpp"
#include "regrasp/sampling.hpp"

namespace regrasp
{

Mat3 sample_rotation(const TransformSample& t)
{
  return (Eigen::AngleAxisd(t.rotation.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(t.rotation.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(t.rotation.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

std::vector<TransformSample> sample_transforms(const TransformSamplerParams& params)
{
  for (int a = 0; a < 3; ++a)
  {
    if (!(params.translation_lower[a] <= 0.0 && params.translation_upper[a] >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "translation bounds must contain zero");
    if (!(params.rotation_lower[a] <= 0.0 && params.rotation_upper[a] >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "rotation bounds must contain zero");
  }
  std::vector<TransformSample> out;
  if (params.n == 0)
    return out;
  out.reserve(params.n);
  out.push_back({});
  const auto points = halton_points(params.n - 1, 6, params.seed);
  for (const Eigen::VectorXd& p : points)
  {
    TransformSample s;
    for (int a = 0; a < 3; ++a)
    {
      s.translation[a] = params.translation_lower[a] + p[a] * (params.translation_upper[a] - params.translation_lower[a]);
      s.rotation[a] = params.rotation_lower[a] + p[a + 3] * (params.rotation_upper[a] - params.rotation_lower[a]);
    }
    out.push_back(s);
  }
  return out;
}

std::pair<RigidTransform, RigidTransform> apply_handover_transform(const RigidTransform& q, const RigidTransform& f,
                                                                   const TransformSample& t)
{
  const Vec3 mid = 0.5 * (q.translation() + f.translation());
  const Mat3 r = sample_rotation(t);
  // x -> r (x - mid) + mid + translation
  const RigidTransform motion(Eigen::Quaterniond(r), mid + t.translation - r * mid);
  return {motion * q, motion * f};
}

SphereSet arm_spheres(const KinematicChain& chain, const JointState& state, const std::string& prefix)
{
  SphereSet set;
  const auto frames = link_frames(chain, state);
  std::string previous;
  for (std::size_t i = 0; i < chain.dof(); ++i)
  {
    const auto& spheres = chain.joints()[i].spheres;
    if (spheres.empty())
      continue;
    const std::string link = prefix + "_link" + std::to_string(i + 1);
    for (const LinkSphere& s : spheres)
      set.add(frames[i] * s.center, s.radius, link);
    if (!previous.empty())
      set.exclusions.emplace_back(previous, link);
    previous = link;
  }
  if (!chain.tip_spheres().empty())
  {
    const std::string link = prefix + "_tip";
    for (const LinkSphere& s : chain.tip_spheres())
      set.add(frames.back() * s.center, s.radius, link);
    if (!previous.empty())
      set.exclusions.emplace_back(previous, link);
  }
  return set;
}

namespace
{

// Links from the wrist on: the ones carried by the last two joints and the tip.
std::vector<std::string> hand_links(const KinematicChain& chain, const std::string& prefix)
{
  std::vector<std::string> out{prefix + "_tip"};
  const std::size_t n = chain.dof();
  for (std::size_t i = n >= 2 ? n - 2 : 0; i < n; ++i)
    out.push_back(prefix + "_link" + std::to_string(i + 1));
  return out;
}

const KinematicChain& chain_of(const DualArmModel& model, Arm arm)
{
  return arm == Arm::Left ? model.left : model.right;
}


bool collision_free(const DualArmModel& model, const CollisionWorld& world, const JointState& left,
                    const JointState& right, const std::optional<Sphere>& object)
{
  SphereSet set = robot_spheres(model, left, right);
  if (object)
    attach_object(set, model, *object);
  return check_free(world, set).free;
}

}  // namespace

SphereSet robot_spheres(const DualArmModel& model, const JointState& left, const JointState& right)
{
  SphereSet set = arm_spheres(model.left, left, "left");
  set.append(arm_spheres(model.right, right, "right"));
  return set;
}

void attach_object(SphereSet& set, const DualArmModel& model, const Sphere& object)
{
  set.add(object.center, object.radius, "object");
  for (const std::string& l : hand_links(model.left, "left"))
    set.exclusions.emplace_back("object", l);
  for (const std::string& l : hand_links(model.right, "right"))
    set.exclusions.emplace_back("object", l);
}

SphereSet static_robot_spheres(const DualArmModel& model)
{
  SphereSet set;
  for (const Sphere& s : model.static_spheres)
    set.add(s.center, s.radius, "torso");
  return set;
}

std::vector<FeasibleGrasp> filter_grasps(const std::vector<RigidTransform>& candidates, const DualArmModel& model,
                                         const CollisionWorld& world, const PlannerParams& params)
{
  const Arm arm = params.supportive_arm;
  const KinematicChain& chain = chain_of(model, arm);
  const JointState& home = arm == Arm::Left ? model.left_home : model.right_home;
  const JointState& other_home = arm == Arm::Left ? model.right_home : model.left_home;
  auto free = [&](const JointState& s) {
    return arm == Arm::Left ? collision_free(model, world, s, other_home, std::nullopt)
                            : collision_free(model, world, other_home, s, std::nullopt);
  };

  std::vector<FeasibleGrasp> out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
  {
    const auto grasp = ik(chain, candidates[i], home, params.ik);
    if (!grasp || !free(*grasp))
      continue;
    const auto pre = ik(chain, candidates[i] * params.pregrasp_offset, *grasp, params.ik);
    if (!pre || !free(*pre))
      continue;
    out.push_back({i, candidates[i], *grasp, *pre});
  }
  return out;
}

std::vector<FeasibleGrasp> filter_grasps(const GraspCandidateSet& candidates, const DualArmModel& model,
                                         const CollisionWorld& world, const PlannerParams& params)
{
  std::vector<RigidTransform> poses;
  poses.reserve(candidates.grasps.size());
  for (const GraspHypothesis& g : candidates.grasps)
    poses.push_back(grasp_pose(g));
  return filter_grasps(poses, model, world, params);
}

double handover_cost(const DualArmModel& model, const JointState& left, const JointState& right,
                     const PlannerParams& params)
{
  double c = proximity_cost(left, model.left, right, model.right, params.proximity_epsilon);
  for (const CostTerm& term : params.extra_costs)
    if (term.evaluate)
      c += term.weight * term.evaluate(model, left, right);
  return c;
}

HandoverPlan plan_handover(const std::vector<FeasibleGrasp>& feasible, const RigidTransform& functional,
                           const DualArmModel& model, const CollisionWorld& world, const PlannerParams& params,
                           const std::optional<Sphere>& object)
{
  const auto start = std::chrono::steady_clock::now();
  const Arm sup = params.supportive_arm;
  const KinematicChain& sup_chain = chain_of(model, sup);
  const KinematicChain& fun_chain = chain_of(model, sup == Arm::Left ? Arm::Right : Arm::Left);
  const JointState& fun_home = sup == Arm::Left ? model.right_home : model.left_home;
  const auto samples = sample_transforms(params.sampler);

  HandoverPlan best;
  bool found = false;
  double c_min = params.initial_cost;
  PlannerReport& report = best.report;

  for (std::size_t gi = 0; gi < feasible.size() && !report.early_stopped; ++gi)
  {
    const FeasibleGrasp& g = feasible[gi];
    std::optional<Sphere> held;
    const Vec3 object_in_hand = object ? g.pose.inverse() * object->center : Vec3::Zero();
    for (std::size_t si = 0; si < samples.size(); ++si)
    {
      ++report.evaluated;
      const auto [q, f] = apply_handover_transform(g.pose, functional, samples[si]);
      const auto sup_state = ik(sup_chain, q, g.joints, params.ik);
      if (!sup_state)
      {
        ++report.ik_rejected;
        continue;
      }
      const auto fun_state = ik(fun_chain, f, fun_home, params.ik);
      if (!fun_state)
      {
        ++report.ik_rejected;
        continue;
      }
      const JointState& left = sup == Arm::Left ? *sup_state : *fun_state;
      const JointState& right = sup == Arm::Left ? *fun_state : *sup_state;
      if (object)
        held = Sphere{q * object_in_hand, object->radius};
      if (!collision_free(model, world, left, right, held))
      {
        ++report.collision_rejected;
        continue;
      }
      ++report.feasible;
      const double c = handover_cost(model, left, right, params);
      if (c < c_min || !found)
      {
        found = true;
        c_min = c;
        best.config = {q, f, left, right, c};
        best.grasp_index = gi;
        best.sample_index = si;
        best.transform = samples[si];
      }
      if (params.early_stop && c_min < params.stop_cost)
      {
        report.early_stopped = true;
        break;
      }
    }
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!found)
    throw Error(ErrorCode::NoHandoverFound, "no kinematically feasible, collision-free handover among " +
                                                std::to_string(report.evaluated) + " candidates");
  report.best_cost = c_min;
  return best;
}

Json to_json(const PlannerReport& report)
{
  return Json{{"evaluated", report.evaluated},
              {"feasible", report.feasible},
              {"ik_rejected", report.ik_rejected},
              {"collision_rejected", report.collision_rejected},
              {"best_cost", report.best_cost},
              {"early_stopped", report.early_stopped},
              {"wall_time_s", report.wall_time}};
}

Json to_json(const HandoverConfiguration& config)
{
  auto vec = [](const JointState& s) { return std::vector<double>(s.data(), s.data() + s.size()); };
  return Json{{"supportive", to_json(config.supportive)},
              {"functional", to_json(config.functional)},
              {"joint_states", {{"left", vec(config.left)}, {"right", vec(config.right)}}},
              {"cost", config.cost}};
}

}  // namespace regrasp
