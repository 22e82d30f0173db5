#ifndef REGRASP_PRIMITIVES_HPP
#define REGRASP_PRIMITIVES_HPP

#include "regrasp/geometry.hpp"

namespace regrasp
{

/// Closed, outward-oriented meshes centered at the origin.
TriangleMesh make_box(const Vec3& half_extents);
/// Axis along z, from z = -height/2 to +height/2, with caps.
TriangleMesh make_cylinder(double radius, double height, int segments = 24);
/// Icosphere.
TriangleMesh make_sphere(double radius, int subdivisions = 2);
/// Ring in the x-z plane around the origin (major radius R, tube radius r).
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments = 24, int minor_segments = 10);

/// Concatenates meshes into one (no vertex welding).
TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes);

}  // namespace regrasp

#endif  // REGRASP_PRIMITIVES_HPP
