#include <cstdlib>

#include "regrasp/error.hpp"
#include "regrasp/json_io.hpp"
#include "regrasp/kinematics.hpp"

#ifndef REGRASP_DATA_DIR
#define REGRASP_DATA_DIR "data"
#endif

namespace regrasp
{

namespace
{

std::vector<LinkSphere> parse_spheres(const Json& j)
{
  std::vector<LinkSphere> out;
  if (!j.is_array())
    return out;
  for (const Json& s : j)
  {
    LinkSphere ls{vec3_from_json(s.at("center")), s.at("radius").get<double>()};
    if (!(ls.radius > 0.0))
      throw Error(ErrorCode::Config, "sphere radius must be positive");
    out.push_back(ls);
  }
  return out;
}

KinematicChain parse_chain(const std::string& name, const Json& j)
{
  std::vector<Joint> joints;
  for (const Json& jj : j.at("joints"))
  {
    Joint joint;
    joint.name = jj.value("name", name + "_joint" + std::to_string(joints.size() + 1));
    if (jj.value("type", std::string("revolute")) != "revolute")
      throw Error(ErrorCode::Config, "only revolute joints are supported");
    joint.origin = pose_from_json(jj.at("origin"));
    joint.axis = vec3_from_json(jj.at("axis"));
    joint.lower = jj.at("lower").get<double>();
    joint.upper = jj.at("upper").get<double>();
    joint.spheres = parse_spheres(jj.value("spheres", Json::array()));
    joints.push_back(joint);
  }
  return KinematicChain(name, pose_from_json(j.at("base")), std::move(joints),
                        pose_from_json(j.value("tip", Json::object())),
                        parse_spheres(j.value("tip_spheres", Json::array())));
}

JointState parse_home(const KinematicChain& chain, const Json& j)
{
  JointState home = JointState::Zero(static_cast<Eigen::Index>(chain.dof()));
  if (j.contains("home"))
  {
    const auto values = j.at("home").get<std::vector<double>>();
    if (values.size() != chain.dof())
      throw Error(ErrorCode::Config, "home state of '" + chain.name() + "' has the wrong length");
    for (std::size_t i = 0; i < values.size(); ++i)
      home[static_cast<Eigen::Index>(i)] = values[i];
  }
  else
    home = 0.5 * (chain.lower_limits() + chain.upper_limits());
  if (!chain.within_limits(home))
    throw Error(ErrorCode::Config, "home state of '" + chain.name() + "' violates joint limits");
  return home;
}

}  // namespace

DualArmModel parse_robot_description(const std::string& json_text)
{
  Json j;
  try
  {
    j = Json::parse(json_text);
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::Config, std::string("robot description: ") + e.what());
  }
  try
  {
    DualArmModel model;
    model.name = j.value("name", std::string("robot"));
    const Json& arms = j.at("arms");
    model.left = parse_chain("left", arms.at("left"));
    model.right = parse_chain("right", arms.at("right"));
    model.left_home = parse_home(model.left, arms.at("left"));
    model.right_home = parse_home(model.right, arms.at("right"));
    for (const Json& s : j.value("static_spheres", Json::array()))
    {
      const double r = s.at("radius").get<double>();
      if (!(r > 0.0))
        throw Error(ErrorCode::Config, "sphere radius must be positive");
      model.static_spheres.push_back({vec3_from_json(s.at("center")), r});
    }
    if (j.contains("hand_cuboid"))
    {
      model.hand_cuboid_offset = pose_from_json(j["hand_cuboid"].value("offset", Json::object()));
      model.hand_cuboid_half_extents = vec3_from_json(j["hand_cuboid"].at("half_extents"));
    }
    return model;
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::Config, std::string("robot description: ") + e.what());
  }
}

DualArmModel load_robot_description(const std::filesystem::path& path)
{
  return parse_robot_description(read_json_file(path).dump());
}

std::filesystem::path default_robot_path()
{
  if (const char* env = std::getenv("REGRASP_ROBOT"); env && *env)
    return env;
  return std::filesystem::path(REGRASP_DATA_DIR) / "robot" / "dual_arm.json";
}

}  // namespace regrasp
