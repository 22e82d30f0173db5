#include "regrasp/depth_render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "regrasp/error.hpp"

namespace regrasp
{

void PinholeCamera::validate() const
{
  if (!(fx > 0.0 && fy > 0.0))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
}

std::size_t SegmentationMask::count(std::uint8_t value) const
{
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), value));
}

namespace
{

constexpr double kNear = 1e-4;

using Polygon = std::vector<Vec3>;

// Sutherland-Hodgman against the plane z = kNear.
Polygon clip_near(const std::array<Vec3, 3>& tri)
{
  Polygon out;
  for (int i = 0; i < 3; ++i)
  {
    const Vec3& a = tri[i];
    const Vec3& b = tri[(i + 1) % 3];
    const bool ina = a.z() >= kNear;
    const bool inb = b.z() >= kNear;
    if (ina)
      out.push_back(a);
    if (ina != inb)
    {
      const double t = (kNear - a.z()) / (b.z() - a.z());
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

void raster_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const PinholeCamera& cam, std::uint8_t label,
                     RenderOutput& out)
{
  const Eigen::Vector2d pa = cam.project(a);
  const Eigen::Vector2d pb = cam.project(b);
  const Eigen::Vector2d pc = cam.project(c);
  const double area = (pb - pa).x() * (pc - pa).y() - (pb - pa).y() * (pc - pa).x();
  if (std::abs(area) < 1e-14)
    return;

  const double min_u = std::min({pa.x(), pb.x(), pc.x()});
  const double max_u = std::max({pa.x(), pb.x(), pc.x()});
  const double min_v = std::min({pa.y(), pb.y(), pc.y()});
  const double max_v = std::max({pa.y(), pb.y(), pc.y()});
  const int u0 = std::max(0, static_cast<int>(std::ceil(min_u)));
  const int u1 = std::min(cam.width - 1, static_cast<int>(std::floor(max_u)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(min_v)));
  const int v1 = std::min(cam.height - 1, static_cast<int>(std::floor(max_v)));
  if (u0 > u1 || v0 > v1)
    return;

  const double inv_area = 1.0 / area;
  const double iza = 1.0 / a.z();
  const double izb = 1.0 / b.z();
  const double izc = 1.0 / c.z();
  for (int v = v0; v <= v1; ++v)
    for (int u = u0; u <= u1; ++u)
    {
      const Eigen::Vector2d p(u, v);
      const double wa = ((pb - p).x() * (pc - p).y() - (pb - p).y() * (pc - p).x()) * inv_area;
      const double wb = ((pc - p).x() * (pa - p).y() - (pc - p).y() * (pa - p).x()) * inv_area;
      const double wc = 1.0 - wa - wb;
      if (wa < 0.0 || wb < 0.0 || wc < 0.0)
        continue;
      // 1/z is affine in screen space for a planar triangle.
      const double depth = 1.0 / (wa * iza + wb * izb + wc * izc);
      double& cell = out.depth.at(u, v);
      if (cell == 0.0 || depth < cell)
      {
        cell = depth;
        out.mask.at(u, v) = label;
      }
    }
}

}  // namespace

RenderOutput render_scene(const std::vector<LabeledMesh>& meshes, const PinholeCamera& camera,
                          const RigidTransform& camera_pose)
{
  camera.validate();
  RenderOutput out{DepthImage(camera.width, camera.height), SegmentationMask(camera.width, camera.height)};
  const RigidTransform world_to_camera = camera_pose.inverse();
  for (const LabeledMesh& lm : meshes)
  {
    if (!lm.mesh)
      continue;
    const RigidTransform to_cam = world_to_camera * lm.pose;
    std::vector<Vec3> v;
    v.reserve(lm.mesh->vertex_count());
    for (const Vec3& p : lm.mesh->vertices())
      v.push_back(to_cam * p);
    for (const Face& f : lm.mesh->faces())
    {
      const std::array<Vec3, 3> tri{v[f[0]], v[f[1]], v[f[2]]};
      if (tri[0].z() < kNear && tri[1].z() < kNear && tri[2].z() < kNear)
        continue;
      if (tri[0].z() >= kNear && tri[1].z() >= kNear && tri[2].z() >= kNear)
      {
        raster_triangle(tri[0], tri[1], tri[2], camera, lm.label, out);
        continue;
      }
      const Polygon poly = clip_near(tri);
      for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        raster_triangle(poly[0], poly[k], poly[k + 1], camera, lm.label, out);
    }
  }
  return out;
}

RenderOutput render_depth(const TriangleMesh& mesh, const PinholeCamera& camera, const RigidTransform& camera_pose)
{
  return render_scene({LabeledMesh{&mesh, RigidTransform::identity(), SegmentationMask::kObject}}, camera,
                      camera_pose);
}

RigidTransform top_down_camera(const TriangleMesh& mesh, const RigidTransform& object_pose, double standoff)
{
  if (!(standoff > 0.0))
    throw Error(ErrorCode::InvalidArgument, "camera standoff must be positive");
  const Vec3 center = object_pose * bounds(mesh.vertices()).center();
  Mat3 r;
  r.col(0) = Vec3::UnitX();
  r.col(1) = -Vec3::UnitY();
  r.col(2) = -Vec3::UnitZ();
  return RigidTransform(r, center + standoff * Vec3::UnitZ());
}

double default_standoff(const TriangleMesh& mesh)
{
  return 2.0 * bounds(mesh.vertices()).diagonal();
}

PointCloud deproject(const DepthImage& depth, const SegmentationMask& mask, const PinholeCamera& camera,
                     const RigidTransform& camera_pose, std::optional<std::uint8_t> only_label)
{
  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u)
    {
      const double z = depth.at(u, v);
      const std::uint8_t l = mask.at(u, v);
      if (z <= 0.0 || l == SegmentationMask::kBackground || (only_label && l != *only_label))
        continue;
      cloud.points.push_back(camera_pose * camera.deproject(u, v, z));
    }
  return cloud;
}

}  // namespace regrasp
