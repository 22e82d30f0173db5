#include "regrasp/synthetic_category.hpp"

#include <random>

#include <Eigen/Geometry>

#include "regrasp/error.hpp"
#include "regrasp/primitives.hpp"

namespace regrasp
{

namespace
{

TriangleMesh placed(const TriangleMesh& mesh, const RigidTransform& pose, int subdivisions)
{
  return subdivide_mesh(transform_mesh(mesh, pose), subdivisions);
}

TriangleMesh scaled(const TriangleMesh& mesh, const Vec3& s)
{
  std::vector<Vec3> v;
  v.reserve(mesh.vertex_count());
  for (const Vec3& p : mesh.vertices())
    v.push_back(p.cwiseProduct(s));
  return TriangleMesh(std::move(v), mesh.faces());
}

RigidTransform at(const Vec3& t)
{
  return RigidTransform::from_translation(t);
}

// Grasp frame from its closing axis (x) and approach (z).
RigidTransform grasp_frame(const Vec3& center, const Vec3& axis, const Vec3& approach)
{
  Mat3 r;
  r.col(0) = axis;
  r.col(2) = approach;
  r.col(1) = approach.cross(axis);
  return RigidTransform(r, center);
}

SyntheticCategory spray_bottle()
{
  SyntheticCategory c;
  c.name = "spray_bottle";
  c.height = 0.21;
  c.canonical = merge_meshes({
      // Flattened body: shallow along the nozzle, wide across it.
      placed(scaled(make_cylinder(0.03, 0.15, 24), Vec3(0.75, 1.25, 1.0)), at(Vec3(0, 0, 0.075)), 2),
      placed(make_cylinder(0.013, 0.03, 16), at(Vec3(0, 0, 0.165)), 1),
      placed(make_box(Vec3(0.035, 0.015, 0.015)), at(Vec3(0.015, 0, 0.195)), 2),
      placed(make_box(Vec3(0.005, 0.01, 0.02)), at(Vec3(0.04, 0, 0.16)), 1),
  });
  // Around the neck from behind, fingers closing sideways.
  c.functional_grasp = grasp_frame(Vec3(0, 0, 0.17), Vec3::UnitY(), Vec3::UnitX());
  return c;
}

SyntheticCategory watering_can()
{
  SyntheticCategory c;
  c.name = "watering_can";
  c.height = 0.11;
  const Vec3 spout_dir(std::sin(M_PI / 4), 0.0, std::cos(M_PI / 4));
  c.canonical = merge_meshes({
      placed(make_cylinder(0.035, 0.11, 24), at(Vec3(0, 0, 0.055)), 2),
      placed(make_torus(0.03, 0.007, 24, 8), at(Vec3(-0.035, 0, 0.07)), 0),
      placed(make_cylinder(0.007, 0.10, 12),
             RigidTransform::from_axis_angle(Vec3(0, M_PI / 4, 0), Vec3(0.035, 0, 0.03) + 0.05 * spout_dir), 1),
  });
  // Rear bar of the handle, approached from behind.
  c.functional_grasp = grasp_frame(Vec3(-0.065, 0, 0.07), Vec3::UnitY(), Vec3::UnitX());
  return c;
}

struct Scales
{
  double radial;
  double height;
  double taper;
};

Scales scales(const ShapeParams& p)
{
  return {1.0 + 0.15 * p.radial, 1.0 + 0.15 * p.height, 0.25 * p.taper};
}

}  // namespace

const std::vector<std::string>& synthetic_category_names()
{
  static const std::vector<std::string> names{"spray_bottle", "watering_can"};
  return names;
}

SyntheticCategory make_category(const std::string& name)
{
  if (name == "spray_bottle")
    return spray_bottle();
  if (name == "watering_can")
    return watering_can();
  throw Error(ErrorCode::Config, "unknown synthetic category '" + name + "'");
}

Vec3 deform_point(const SyntheticCategory& category, const ShapeParams& params, const Vec3& p)
{
  const Scales s = scales(params);
  const double g = s.radial * (1.0 + s.taper * (p.z() / category.height - 0.5));
  return {g * p.x(), g * p.y(), s.height * p.z()};
}

Mat3 deform_jacobian(const SyntheticCategory& category, const ShapeParams& params, const Vec3& p)
{
  const Scales s = scales(params);
  const double g = s.radial * (1.0 + s.taper * (p.z() / category.height - 0.5));
  const double dg = s.radial * s.taper / category.height;
  Mat3 j;
  j << g, 0.0, dg * p.x(), 0.0, g, dg * p.y(), 0.0, 0.0, s.height;
  return j;
}

TriangleMesh make_instance(const SyntheticCategory& category, const ShapeParams& params)
{
  std::vector<Vec3> v;
  v.reserve(category.canonical.vertex_count());
  for (const Vec3& p : category.canonical.vertices())
    v.push_back(deform_point(category, params, p));
  return TriangleMesh(std::move(v), category.canonical.faces());
}

RigidTransform instance_functional_grasp(const SyntheticCategory& category, const ShapeParams& params)
{
  const Vec3 p = category.functional_grasp.translation();
  const Mat3 r = nearest_rotation(deform_jacobian(category, params, p)) * category.functional_grasp.rotation_matrix();
  return RigidTransform(r, deform_point(category, params, p));
}

std::vector<ShapeParams> sample_shape_params(std::size_t count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ShapeParams> out(count);
  for (ShapeParams& p : out)
  {
    p.radial = u(rng);
    p.height = u(rng);
    p.taper = u(rng);
  }
  return out;
}

}  // namespace regrasp
