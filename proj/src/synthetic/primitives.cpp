#include "regrasp/primitives.hpp"

#include <cmath>
#include <map>

#include "regrasp/error.hpp"

namespace regrasp
{

TriangleMesh make_box(const Vec3& h)
{
  if (!(h.array() > 0.0).all())
    throw Error(ErrorCode::InvalidArgument, "box half extents must be positive");
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i)
    v.emplace_back((i & 1 ? 1 : -1) * h.x(), (i & 2 ? 1 : -1) * h.y(), (i & 4 ? 1 : -1) * h.z());
  // Two triangles per face, counter-clockwise seen from outside.
  std::vector<Face> f{{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                      {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_cylinder(double radius, double height, int segments)
{
  if (!(radius > 0.0 && height > 0.0) || segments < 3)
    throw Error(ErrorCode::InvalidArgument, "invalid cylinder parameters");
  std::vector<Vec3> v;
  const double hz = 0.5 * height;
  for (int i = 0; i < segments; ++i)
  {
    const double a = 2.0 * M_PI * i / segments;
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), -hz);
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), hz);
  }
  const int bottom = static_cast<int>(v.size());
  v.emplace_back(0.0, 0.0, -hz);
  const int top = static_cast<int>(v.size());
  v.emplace_back(0.0, 0.0, hz);
  std::vector<Face> f;
  for (int i = 0; i < segments; ++i)
  {
    const int j = (i + 1) % segments;
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    f.push_back({b0, b1, t1});
    f.push_back({b0, t1, t0});
    f.push_back({bottom, b1, b0});
    f.push_back({top, t0, t1});
  }
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_sphere(double radius, int subdivisions)
{
  if (!(radius > 0.0) || subdivisions < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid sphere parameters");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  TriangleMesh mesh = subdivide_mesh(TriangleMesh(v, f), subdivisions);
  std::vector<Vec3> out = mesh.vertices();
  for (Vec3& p : out)
    p = radius * p.normalized();
  return mesh.with_vertices(std::move(out));
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments)
{
  if (!(major_radius > minor_radius && minor_radius > 0.0) || major_segments < 3 || minor_segments < 3)
    throw Error(ErrorCode::InvalidArgument, "invalid torus parameters");
  std::vector<Vec3> v;
  for (int i = 0; i < major_segments; ++i)
  {
    const double a = 2.0 * M_PI * i / major_segments;
    const Vec3 radial(std::cos(a), 0.0, std::sin(a));
    for (int j = 0; j < minor_segments; ++j)
    {
      const double b = 2.0 * M_PI * j / minor_segments;
      v.push_back((major_radius + minor_radius * std::cos(b)) * radial + minor_radius * std::sin(b) * Vec3::UnitY());
    }
  }
  std::vector<Face> f;
  for (int i = 0; i < major_segments; ++i)
    for (int j = 0; j < minor_segments; ++j)
    {
      const int i1 = (i + 1) % major_segments;
      const int j1 = (j + 1) % minor_segments;
      const int a = i * minor_segments + j, b = i1 * minor_segments + j, c = i1 * minor_segments + j1,
                d = i * minor_segments + j1;
      f.push_back({a, c, b});
      f.push_back({a, d, c});
    }
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes)
{
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (const TriangleMesh& m : meshes)
  {
    const int base = static_cast<int>(v.size());
    v.insert(v.end(), m.vertices().begin(), m.vertices().end());
    for (const Face& face : m.faces())
      f.push_back({face[0] + base, face[1] + base, face[2] + base});
  }
  return TriangleMesh(std::move(v), std::move(f));
}

}  // namespace regrasp
