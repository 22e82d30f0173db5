#ifndef REGRASP_SYNTHETIC_CATEGORY_HPP
#define REGRASP_SYNTHETIC_CATEGORY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "regrasp/geometry.hpp"

namespace regrasp
{

/// Procedural object category: a canonical mesh assembled from primitives
/// (object frame: base center on z = 0, z up, functional side facing -x)
/// and a functional grasp annotated on it.
struct SyntheticCategory
{
  std::string name;
  TriangleMesh canonical;
  RigidTransform functional_grasp;
  double height = 0.0;  ///< m, canonical
};

/// Instance shape coordinates, each in [-1, 1].
struct ShapeParams
{
  double radial = 0.0;  ///< horizontal scale, +-15 %
  double height = 0.0;  ///< vertical scale, +-15 %
  double taper = 0.0;   ///< linear change of the horizontal scale with height, +-12.5 % at the ends
};

/// "spray_bottle" and "watering_can".
const std::vector<std::string>& synthetic_category_names();
/// Throws Config for an unknown name.
SyntheticCategory make_category(const std::string& name);

/// The smooth map taking canonical points to the instance.
Vec3 deform_point(const SyntheticCategory& category, const ShapeParams& params, const Vec3& p);
Mat3 deform_jacobian(const SyntheticCategory& category, const ShapeParams& params, const Vec3& p);

/// Canonical mesh with every vertex deformed (same faces).
TriangleMesh make_instance(const SyntheticCategory& category, const ShapeParams& params);
/// The annotated grasp carried by the deformation: its origin is mapped and
/// its axes follow the rotation part (polar factor) of the Jacobian.
RigidTransform instance_functional_grasp(const SyntheticCategory& category, const ShapeParams& params);

/// Uniform draws from [-1, 1]^3.
std::vector<ShapeParams> sample_shape_params(std::size_t count, std::uint64_t seed);

}  // namespace regrasp

#endif  // REGRASP_SYNTHETIC_CATEGORY_HPP
