#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "regrasp/closest_point.hpp"
#include "regrasp/error.hpp"
#include "regrasp/geometry.hpp"
#include "regrasp/mesh_io.hpp"
#include "regrasp/primitives.hpp"

using namespace regrasp;

namespace
{

RigidTransform random_transform(std::mt19937_64& rng, double max_t = 1.0)
{
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_t, max_t);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return RigidTransform(q, Vec3(u(rng), u(rng), u(rng)));
}

TriangleMesh single_triangle()
{
  return TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
}

}  // namespace

TEST_CASE("rigid transform algebra")
{
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i)
  {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const RigidTransform c = random_transform(rng);
    CHECK(std::abs(a.rotation().norm() - 1.0) < 1e-9);
    const PoseError e = pose_error(a * a.inverse(), RigidTransform::identity());
    CHECK(e.translation < 1e-9);
    CHECK(e.rotation < 1e-9);
    const PoseError assoc = pose_error((a * b) * c, a * (b * c));
    CHECK(assoc.translation < 1e-9);
    CHECK(assoc.rotation < 1e-9);
    const Vec3 p(0.3, -0.2, 0.7);
    CHECK(((a * b) * p - a * (b * p)).norm() < 1e-12);
    CHECK((a.matrix() * p.homogeneous() - (a * p).homogeneous()).norm() < 1e-12);
  }
}

TEST_CASE("rotation helpers")
{
  const RigidTransform r = RigidTransform::from_axis_angle(Vec3(0, 0, M_PI / 2));
  CHECK((r * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-12);
  CHECK(std::abs(r.angle() - M_PI / 2) < 1e-12);
  CHECK((r.axis_angle() - Vec3(0, 0, M_PI / 2)).norm() < 1e-12);

  const RigidTransform about = RigidTransform::rotation_about(Vec3::UnitZ(), M_PI, Vec3(1, 0, 0));
  CHECK((about * Vec3(1, 0, 0) - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((about * Vec3(0, 0, 0) - Vec3(2, 0, 0)).norm() < 1e-12);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i)
  {
    const Vec3 a = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 b = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Mat3 s = shortest_arc(a, b);
    CHECK((s * a - b).norm() < 1e-9);
    CHECK(std::abs(s.determinant() - 1.0) < 1e-9);
  }
  const Mat3 flip = shortest_arc(Vec3::UnitX(), -Vec3::UnitX());
  CHECK((flip * Vec3::UnitX() + Vec3::UnitX()).norm() < 1e-9);

  Mat3 noisy = RigidTransform::from_axis_angle(Vec3(0.1, 0.2, 0.3)).rotation_matrix();
  noisy(0, 1) += 1e-3;
  const Mat3 fixed = nearest_rotation(noisy);
  CHECK((fixed * fixed.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(std::abs(fixed.determinant() - 1.0) < 1e-12);
}

TEST_CASE("transform_points")
{
  PointCloud cloud{{{1, 0, 0}}, {{1, 0, 0}}};
  const PointCloud same = transform_points(cloud, RigidTransform::identity());
  CHECK((same.points[0] - cloud.points[0]).norm() == 0.0);

  const PointCloud moved = transform_points(cloud, RigidTransform::from_translation(Vec3(0, 0, 1)));
  CHECK((moved.points[0] - Vec3(1, 0, 1)).norm() < 1e-12);
  CHECK((moved.normals[0] - Vec3(1, 0, 0)).norm() < 1e-12);

  const PointCloud rotated = transform_points(cloud, RigidTransform::from_axis_angle(Vec3(0, 0, M_PI / 2), Vec3(5, 5, 5)));
  CHECK((rotated.points[0] - Vec3(5, 6, 5)).norm() < 1e-9);
  CHECK((rotated.normals[0] - Vec3(0, 1, 0)).norm() < 1e-9);
}

TEST_CASE("mesh validation")
{
  CHECK_THROWS_AS(TriangleMesh({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 2}}), Error);
  CHECK_THROWS_AS(TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), Error);
  std::size_t dropped = 0;
  const TriangleMesh m = TriangleMesh::from_raw({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}},
                                                {{0, 1, 2}, {0, 0, 1}, {0, 1, 3}}, &dropped);
  CHECK(m.face_count() == 1);
  CHECK(dropped == 2);
}

TEST_CASE("subdivide_mesh")
{
  const TriangleMesh tri = single_triangle();
  const TriangleMesh one = subdivide_mesh(tri, 1);
  CHECK(one.face_count() == 4);
  CHECK(one.vertex_count() == 6);
  CHECK(subdivide_mesh(tri, 2).face_count() == 16);
  const TriangleMesh zero = subdivide_mesh(tri, 0);
  CHECK(zero.vertices() == tri.vertices());
  CHECK(zero.faces() == tri.faces());
  CHECK(subdivide_mesh(TriangleMesh(), 2).empty());

  const TriangleMesh box = make_box(Vec3(0.1, 0.2, 0.3));
  for (int levels = 0; levels <= 3; ++levels)
  {
    const TriangleMesh s = subdivide_mesh(box, levels);
    CHECK(s.face_count() == box.face_count() * static_cast<std::size_t>(std::pow(4, levels)));
    CHECK(std::abs(s.surface_area() - box.surface_area()) < 1e-12);
    CHECK(std::abs(oracle::signed_volume(s) - oracle::signed_volume(box)) < 1e-12);
  }
  // New vertices lie on the original surface.
  const MeshBvh bvh(box);
  const TriangleMesh fine = subdivide_mesh(box, 2);
  for (const Vec3& v : fine.vertices())
    CHECK(bvh.closest(v).squared_distance < 1e-24);
}

TEST_CASE("cluster_decimate")
{
  const TriangleMesh box = subdivide_mesh(make_box(Vec3(0.5, 0.5, 0.5)), 2);
  const TriangleMesh collapsed = cluster_decimate(box, 10.0);
  CHECK(collapsed.vertex_count() <= 1);
  CHECK(collapsed.face_count() == 0);

  const TriangleMesh fine = cluster_decimate(box, 1e-3);
  CHECK(fine.vertex_count() == box.vertex_count());
  CHECK(fine.faces() == box.faces());
  for (std::size_t i = 0; i < box.vertex_count(); ++i)
    CHECK((fine.vertices()[i] - box.vertices()[i]).norm() < 1e-12);

  for (bool quadrics : {false, true})
  {
    const TriangleMesh coarse = cluster_decimate(box, 0.5, quadrics);
    CHECK(coarse.vertex_count() < box.vertex_count());
    // Every merged vertex stays within a cell of the original surface and vice versa.
    const MeshBvh original(box);
    for (const Vec3& v : coarse.vertices())
      CHECK(std::sqrt(original.closest(v).squared_distance) < 0.5);
  }
  CHECK(std::abs(default_cluster_cell(box) - 0.01 * std::sqrt(3.0)) < 1e-12);
}

TEST_CASE("bounding_sphere")
{
  CHECK_THROWS_AS(bounding_sphere(std::vector<Vec3>{}), Error);
  const std::vector<Vec3> one{{1, 2, 3}};
  const Sphere s1 = bounding_sphere(one);
  CHECK((s1.center - one[0]).norm() < 1e-12);
  CHECK(s1.radius < 1e-12);
  const std::vector<Vec3> two{{0, 0, 0}, {2, 0, 0}};
  const Sphere s2 = bounding_sphere(two);
  CHECK((s2.center - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(std::abs(s2.radius - 1.0) < 1e-8);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.2);
  for (int trial = 0; trial < 5; ++trial)
  {
    std::vector<Vec3> pts;
    for (int i = 0; i < 100; ++i)
      pts.emplace_back(n(rng), n(rng) * 0.5, n(rng) + 1.0);
    const Sphere s = bounding_sphere(pts);
    for (const Vec3& p : pts)
      CHECK((p - s.center).norm() <= s.radius);
    const double exact = oracle::minimal_enclosing_radius(pts);
    CHECK(s.radius <= 1.01 * exact);
    CHECK(s.radius >= exact * (1.0 - 1e-9));
  }
  // Collinear and coplanar inputs.
  std::vector<Vec3> line;
  for (int i = 0; i < 20; ++i)
    line.emplace_back(0.1 * i, 0.0, 0.0);
  CHECK(std::abs(bounding_sphere(line).radius - 0.95) < 1e-9);
  std::vector<Vec3> square{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}};
  CHECK(std::abs(bounding_sphere(square).radius - std::sqrt(0.5)) < 1e-9);
}

TEST_CASE("surface sampling and closest points")
{
  const TriangleMesh box = make_box(Vec3(0.1, 0.05, 0.02));
  std::mt19937_64 rng(4);
  const PointCloud samples = sample_surface(box, 500, rng);
  CHECK(samples.size() == 500);
  CHECK(samples.has_normals());
  const MeshBvh bvh(box);
  for (std::size_t i = 0; i < samples.size(); ++i)
  {
    CHECK(bvh.closest(samples.points[i]).squared_distance < 1e-24);
    CHECK(std::abs(samples.normals[i].norm() - 1.0) < 1e-6);
  }
  // BVH agrees with an exhaustive scan.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 200; ++i)
  {
    const Vec3 p(u(rng), u(rng), u(rng));
    double best = std::numeric_limits<double>::infinity();
    for (const Face& f : box.faces())
      best = std::min(best, (closest_point_on_triangle(p, box.vertices()[f[0]], box.vertices()[f[1]],
                                                       box.vertices()[f[2]]).point - p).squaredNorm());
    CHECK(std::abs(bvh.closest(p).squared_distance - best) < 1e-15);
  }
}

TEST_CASE("primitives are closed and outward")
{
  CHECK(std::abs(oracle::signed_volume(make_box(Vec3(0.1, 0.2, 0.3))) - 0.048) < 1e-12);
  CHECK(oracle::signed_volume(make_cylinder(0.05, 0.2)) > 0.0);
  CHECK(oracle::signed_volume(make_sphere(0.1)) > 0.0);
  CHECK(oracle::signed_volume(make_torus(0.1, 0.02)) > 0.0);
}

TEST_CASE("mesh file round trips")
{
  const auto dir = std::filesystem::temp_directory_path() / "regrasp_geometry_test";
  std::filesystem::create_directories(dir);
  const TriangleMesh mesh = subdivide_mesh(make_box(Vec3(0.1, 0.2, 0.3)), 1);
  for (const char* name : {"m.obj", "m_ascii.ply", "m_bin.ply"})
  {
    const auto path = dir / name;
    save_mesh(path, mesh, std::string(name) == "m_bin.ply" ? PlyFormat::BinaryLittleEndian : PlyFormat::Ascii);
    const MeshLoadResult loaded = load_mesh(path);
    CHECK(loaded.dropped_faces == 0);
    CHECK(loaded.mesh.faces() == mesh.faces());
    REQUIRE(loaded.mesh.vertex_count() == mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
      CHECK((loaded.mesh.vertices()[i] - mesh.vertices()[i]).norm() < 1e-12);
  }
  {
    std::ofstream obj(dir / "degenerate.obj");
    obj << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\nf 1//1 1//1 2//1\n";
  }
  const MeshLoadResult degenerate = load_mesh(dir / "degenerate.obj");
  CHECK(degenerate.mesh.face_count() == 1);
  CHECK(degenerate.dropped_faces == 2);

  PointCloud cloud{{{1, 2, 3}, {4, 5, 6}}, {{0, 0, 1}, {1, 0, 0}}};
  for (PlyFormat f : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian})
  {
    save_ply_cloud(dir / "c.ply", cloud, f);
    const PointCloud back = load_ply_cloud(dir / "c.ply");
    REQUIRE(back.size() == 2);
    CHECK((back.points[1] - cloud.points[1]).norm() < 1e-12);
    CHECK(back.has_normals());
  }
  CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), Error);
  std::filesystem::remove_all(dir);
}
