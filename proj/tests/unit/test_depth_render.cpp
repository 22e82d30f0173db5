#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "regrasp/depth_render.hpp"
#include "regrasp/error.hpp"
#include "regrasp/primitives.hpp"

using namespace regrasp;

TEST_CASE("camera validation")
{
  PinholeCamera cam;
  CHECK_NOTHROW(cam.validate());
  cam.fx = 0.0;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam = PinholeCamera{};
  cam.cx = 640.0;
  CHECK_THROWS_AS(cam.validate(), Error);
}

TEST_CASE("planar triangle depth")
{
  const PinholeCamera cam;
  const TriangleMesh tri({{-0.3, -0.3, 1.0}, {0.3, -0.3, 1.0}, {0.0, 0.3, 1.0}}, {{0, 1, 2}});
  const RenderOutput out = render_depth(tri, cam, RigidTransform::identity());
  CHECK(out.mask.at(320, 240) == SegmentationMask::kObject);
  std::size_t hits = 0;
  for (double d : out.depth.depth)
    if (d > 0.0)
    {
      CHECK(std::abs(d - 1.0) < 1e-6);
      ++hits;
    }
  CHECK(hits > 1000);
  CHECK(hits == out.mask.count(SegmentationMask::kObject));

  const RenderOutput behind = render_depth(tri, cam, RigidTransform::from_translation(Vec3(0, 0, 2)));
  CHECK(behind.mask.count(SegmentationMask::kObject) == 0);
}

TEST_CASE("box seen from above matches ray casting")
{
  const PinholeCamera cam;
  const TriangleMesh box = make_box(Vec3(0.5, 0.5, 0.5));
  // Top face at 1 m below the camera.
  const RigidTransform object_pose = RigidTransform::from_translation(Vec3(0.1, -0.05, 0.0));
  // Shifted sideways so that one side face is visible as well.
  const RigidTransform cam_pose =
      RigidTransform::from_translation(Vec3(0.8, 0.0, 0.0)) * top_down_camera(box, object_pose, 1.5);
  const TriangleMesh world = transform_mesh(box, object_pose);
  const RenderOutput out = render_depth(world, cam, cam_pose);

  int top = 0, side = 0;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> u(0, cam.width - 1), v(0, cam.height - 1);
  for (int i = 0; i < 3000; ++i)
  {
    const int pu = u(rng), pv = v(rng);
    const Vec3 dir_cam(((pu - cam.cx) / cam.fx), ((pv - cam.cy) / cam.fy), 1.0);
    const Vec3 origin = cam_pose.translation();
    const Vec3 dir = cam_pose.rotate(dir_cam);
    const auto t = oracle::ray_mesh(origin, dir, world);
    const double d = out.depth.at(pu, pv);
    // Pixels grazing an edge can legitimately differ; skip exact silhouette pixels.
    if (t)
    {
      REQUIRE(d > 0.0);
      CHECK(std::abs(d - *t) < 1e-5);  // ray parameter equals depth because dir_cam.z == 1
      if (std::abs(d - 1.0) < 1e-9)
        ++top;
      else
      {
        CHECK(d > 1.0);
        ++side;
      }
    }
    else
      CHECK(d == 0.0);
    CHECK((d == 0.0) == (out.mask.at(pu, pv) == SegmentationMask::kBackground));
  }
  CHECK(top > 100);
  CHECK(side > 10);
}

TEST_CASE("top-down camera")
{
  const TriangleMesh box = make_box(Vec3(0.1, 0.1, 0.1));
  const RigidTransform cam0 = top_down_camera(box, RigidTransform(), 0.7);
  CHECK((cam0.translation() - Vec3(0, 0, 0.7)).norm() < 1e-12);
  CHECK((cam0.rotate(Vec3::UnitZ()) - Vec3(0, 0, -1)).norm() < 1e-12);
  CHECK((cam0.rotate(Vec3::UnitX()) - Vec3(1, 0, 0)).norm() < 1e-12);
  const RigidTransform cam1 = top_down_camera(box, RigidTransform::from_translation(Vec3(0.5, 0.2, 0.1)), 0.4);
  CHECK((cam1.translation() - Vec3(0.5, 0.2, 0.5)).norm() < 1e-12);
  CHECK_THROWS_AS(top_down_camera(box, RigidTransform(), 0.0), Error);
  CHECK(std::abs(default_standoff(box) - 2.0 * std::sqrt(3.0) * 0.2) < 1e-12);

  // The rendered centroid sits at the principal point.
  const PinholeCamera cam;
  const RigidTransform pose = RigidTransform::from_axis_angle(Vec3(0, 0, 0.4), Vec3(0.3, -0.2, 0.1));
  const RenderOutput out = render_depth(transform_mesh(box, pose), cam, top_down_camera(box, pose, 0.7));
  double su = 0, sv = 0;
  std::size_t n = 0;
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u)
      if (out.mask.at(u, v))
      {
        su += u;
        sv += v;
        ++n;
      }
  REQUIRE(n > 0);
  CHECK(std::abs(su / n - cam.cx) < 2.0);
  CHECK(std::abs(sv / n - cam.cy) < 2.0);
}

TEST_CASE("near-plane clipping and scene labels")
{
  const PinholeCamera cam;
  // Large quad crossing the camera plane.
  const TriangleMesh quad({{-1, -1, -1}, {1, -1, -1}, {1, 1, 3}, {-1, 1, 3}}, {{0, 1, 2}, {0, 2, 3}});
  const RenderOutput out = render_depth(quad, cam, RigidTransform());
  for (int i = 0; i < 500; ++i)
  {
    const int u = (i * 37) % cam.width, v = (i * 53) % cam.height;
    const Vec3 dir((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
    const auto t = oracle::ray_mesh(Vec3::Zero(), dir, quad);
    if (t)
      CHECK(std::abs(out.depth.at(u, v) - *t) < 1e-5);
    else
      CHECK(out.depth.at(u, v) == 0.0);
  }

  const TriangleMesh a = make_box(Vec3(0.1, 0.1, 0.1));
  const std::vector<LabeledMesh> scene{{&a, RigidTransform::from_translation(Vec3(0, 0, 1.0)), 1},
                                       {&a, RigidTransform::from_translation(Vec3(0.05, 0, 0.7)), 2}};
  const RenderOutput both = render_scene(scene, cam, RigidTransform());
  CHECK(both.mask.at(320, 240) == 2);
  CHECK(std::abs(both.depth.at(320, 240) - 0.6) < 1e-9);
  CHECK(both.mask.count(1) > 0);
  const PointCloud only = deproject(both.depth, both.mask, cam, RigidTransform(), std::uint8_t{1});
  CHECK(only.size() == both.mask.count(1));
  for (const Vec3& p : only.points)
    CHECK(p.z() >= 0.9 - 1e-9);
}

TEST_CASE("image files")
{
  const auto dir = std::filesystem::temp_directory_path() / "regrasp_render_test";
  std::filesystem::create_directories(dir);
  DepthImage img(7, 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 7; ++u)
      img.at(u, v) = 0.1 * u + 0.01 * v;
  write_pfm(dir / "d.pfm", img);
  const DepthImage back = read_pfm(dir / "d.pfm");
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 7; ++u)
      CHECK(std::abs(back.at(u, v) - img.at(u, v)) < 1e-6);
  write_depth_png16(dir / "d.png", img);
  SegmentationMask m(7, 5);
  m.at(1, 1) = 1;
  write_mask_png(dir / "m.png", m);
  CHECK(std::filesystem::file_size(dir / "d.png") > 0);
  CHECK(std::filesystem::file_size(dir / "m.png") > 0);
  std::filesystem::remove_all(dir);
}
