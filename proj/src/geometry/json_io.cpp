#include "regrasp/json_io.hpp"

#include <fstream>

#include "regrasp/error.hpp"

namespace regrasp
{

Json to_json(const Vec3& v)
{
  return Json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const Json& j)
{
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::Config, "expected a 3-element array, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const RigidTransform& t)
{
  const auto& q = t.rotation();
  return Json{{"translation", to_json(t.translation())}, {"quaternion", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

RigidTransform pose_from_json(const Json& j)
{
  if (!j.is_object())
    throw Error(ErrorCode::Config, "expected a pose object, got " + j.dump());
  const Vec3 t = j.contains("translation") ? vec3_from_json(j.at("translation")) : Vec3::Zero();
  if (j.contains("quaternion"))
  {
    const Json& q = j.at("quaternion");
    if (!q.is_array() || q.size() != 4)
      throw Error(ErrorCode::Config, "quaternion must be [w, x, y, z]");
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    if (quat.norm() < 1e-12)
      throw Error(ErrorCode::Config, "zero quaternion");
    return RigidTransform(quat, t);
  }
  if (j.contains("axis_angle"))
    return RigidTransform::from_axis_angle(vec3_from_json(j.at("axis_angle")), t);
  return RigidTransform::from_translation(t);
}

Json read_json_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  try
  {
    return Json::parse(in);
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j)
{
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace regrasp
