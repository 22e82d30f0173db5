#ifndef REGRASP_JSON_IO_HPP
#define REGRASP_JSON_IO_HPP

#include <filesystem>

#include <json.hpp>

#include "regrasp/geometry.hpp"

namespace regrasp
{

using Json = nlohmann::json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// {"translation": [x, y, z], "quaternion": [w, x, y, z]}. Reading also
/// accepts "axis_angle": [rx, ry, rz] (radians) in place of "quaternion".
Json to_json(const RigidTransform& t);
RigidTransform pose_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace regrasp

#endif  // REGRASP_JSON_IO_HPP
