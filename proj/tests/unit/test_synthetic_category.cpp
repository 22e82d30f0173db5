#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "regrasp/error.hpp"
#include "regrasp/synthetic_category.hpp"

using namespace regrasp;

TEST_CASE("deformation jacobian matches finite differences")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const std::string& name : synthetic_category_names())
  {
    const SyntheticCategory c = make_category(name);
    for (int trial = 0; trial < 20; ++trial)
    {
      const ShapeParams p{u(rng), u(rng), u(rng)};
      const Vec3 x(0.05 * u(rng), 0.05 * u(rng), c.height * 0.5 * (1.0 + u(rng)));
      const Mat3 j = deform_jacobian(c, p, x);
      constexpr double h = 1e-6;
      for (int k = 0; k < 3; ++k)
      {
        const Vec3 e = h * Vec3::Unit(k);
        const Vec3 fd = (deform_point(c, p, x + e) - deform_point(c, p, x - e)) / (2.0 * h);
        CHECK((fd - j.col(k)).norm() < 1e-8);
      }
    }
  }
}

TEST_CASE("identity shape parameters leave the category unchanged")
{
  for (const std::string& name : synthetic_category_names())
  {
    const SyntheticCategory c = make_category(name);
    const TriangleMesh m = make_instance(c, ShapeParams{});
    REQUIRE(m.vertex_count() == c.canonical.vertex_count());
    for (std::size_t i = 0; i < m.vertex_count(); ++i)
      CHECK((m.vertices()[i] - c.canonical.vertices()[i]).norm() < 1e-15);
    const PoseError e = pose_error(instance_functional_grasp(c, ShapeParams{}), c.functional_grasp);
    CHECK(e.translation < 1e-15);
    CHECK(e.rotation < 1e-9);
  }
}

TEST_CASE("uniform scaling moves the grasp but keeps its orientation")
{
  const SyntheticCategory c = make_category("watering_can");
  // radial and height both at +1 scale every axis by 1.15.
  const ShapeParams p{1.0, 1.0, 0.0};
  const RigidTransform g = instance_functional_grasp(c, p);
  CHECK((g.translation() - 1.15 * c.functional_grasp.translation()).norm() < 1e-12);
  CHECK(pose_error(RigidTransform(g.rotation_matrix(), Vec3::Zero()),
                   RigidTransform(c.functional_grasp.rotation_matrix(), Vec3::Zero()))
            .rotation < 1e-9);
}

TEST_CASE("category meshes")
{
  for (const std::string& name : synthetic_category_names())
  {
    const SyntheticCategory c = make_category(name);
    CHECK(oracle::signed_volume(c.canonical) > 0.0);
    const Aabb b = bounds(c.canonical.vertices());
    CHECK(b.min.z() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.max.z() <= c.height + 1e-12);
    // The grasp frame is a proper rotation with the approach along +x, from behind.
    const Mat3 r = c.functional_grasp.rotation_matrix();
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
    CHECK(r.col(2).dot(Vec3::UnitX()) == doctest::Approx(1.0));
  }

  SUBCASE("spray bottle body is flattened along the nozzle")
  {
    const SyntheticCategory c = make_category("spray_bottle");
    Aabb body;
    for (const Vec3& v : c.canonical.vertices())
      if (v.z() < 0.14)
        body.extend(v);
    CHECK(body.max.x() - body.min.x() == doctest::Approx(0.045).epsilon(1e-9));
    CHECK(body.max.y() - body.min.y() == doctest::Approx(0.075).epsilon(1e-9));
  }

  CHECK_THROWS_AS(make_category("teapot"), Error);
}

TEST_CASE("shape parameter sampling")
{
  const auto a = sample_shape_params(100, 9);
  const auto b = sample_shape_params(100, 9);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    CHECK(a[i].radial == b[i].radial);
    CHECK(a[i].taper == b[i].taper);
    for (double v : {a[i].radial, a[i].height, a[i].taper})
      CHECK(std::abs(v) <= 1.0);
  }
  CHECK(sample_shape_params(1, 10)[0].radial != a[0].radial);
}
