// Independent reference implementations used only by the tests.
#ifndef REGRASP_TEST_ORACLES_HPP
#define REGRASP_TEST_ORACLES_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "regrasp/geometry.hpp"

namespace oracle
{

using regrasp::Vec3;

/// Moller-Trumbore ray/triangle intersection; returns the ray parameter.
inline std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c)
{
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-15)
    return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < -1e-12 || u > 1.0 + 1e-12)
    return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < -1e-12 || u + v > 1.0 + 1e-12)
    return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0)
    return std::nullopt;
  return t;
}

/// Nearest hit parameter over all faces of a mesh.
inline std::optional<double> ray_mesh(const Vec3& o, const Vec3& d, const regrasp::TriangleMesh& mesh)
{
  std::optional<double> best;
  for (const auto& f : mesh.faces())
  {
    const auto t = ray_triangle(o, d, mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
    if (t && (!best || *t < *best))
      best = t;
  }
  return best;
}

inline double signed_volume(const regrasp::TriangleMesh& mesh)
{
  double v = 0.0;
  for (const auto& f : mesh.faces())
    v += mesh.vertices()[f[0]].dot(mesh.vertices()[f[1]].cross(mesh.vertices()[f[2]])) / 6.0;
  return v;
}

/// Circumsphere of up to four points, exhaustive minimal enclosing radius.
inline std::optional<regrasp::Sphere> sphere_through(const std::vector<Vec3>& pts)
{
  regrasp::Sphere s;
  if (pts.size() == 1)
    return regrasp::Sphere{pts[0], 0.0};
  if (pts.size() == 2)
    return regrasp::Sphere{0.5 * (pts[0] + pts[1]), 0.5 * (pts[0] - pts[1]).norm()};
  if (pts.size() == 3)
  {
    const Vec3 a = pts[1] - pts[0];
    const Vec3 b = pts[2] - pts[0];
    const Vec3 n = a.cross(b);
    if (n.squaredNorm() < 1e-20)
      return std::nullopt;
    const Vec3 c = (a.squaredNorm() * b.cross(n) + b.squaredNorm() * n.cross(a)) / (2.0 * n.squaredNorm());
    return regrasp::Sphere{pts[0] + c, c.norm()};
  }
  Eigen::Matrix3d m;
  Vec3 rhs;
  for (int i = 0; i < 3; ++i)
  {
    const Vec3 d = pts[i + 1] - pts[0];
    m.row(i) = 2.0 * d.transpose();
    rhs[i] = d.squaredNorm();
  }
  if (std::abs(m.determinant()) < 1e-18)
    return std::nullopt;
  const Vec3 c = m.inverse() * rhs;
  return regrasp::Sphere{pts[0] + c, c.norm()};
}

/// Minimal enclosing sphere by enumerating every support set of up to four points.
inline double minimal_enclosing_radius(const std::vector<Vec3>& p)
{
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = p.size();
  auto consider = [&](const std::vector<Vec3>& support) {
    const auto s = sphere_through(support);
    if (!s || s->radius >= best)
      return;
    for (const Vec3& q : p)
      if ((q - s->center).norm() > s->radius * (1.0 + 1e-9) + 1e-12)
        return;
    best = s->radius;
  };
  for (std::size_t i = 0; i < n; ++i)
  {
    consider({p[i]});
    for (std::size_t j = i + 1; j < n; ++j)
    {
      consider({p[i], p[j]});
      for (std::size_t k = j + 1; k < n; ++k)
      {
        consider({p[i], p[j], p[k]});
        for (std::size_t l = k + 1; l < n; ++l)
          consider({p[i], p[j], p[k], p[l]});
      }
    }
  }
  return best;
}

}  // namespace oracle

#endif  // REGRASP_TEST_ORACLES_HPP
