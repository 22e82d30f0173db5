#include <doctest.h>

#include "regrasp/grasp_sampler.hpp"
#include "regrasp/primitives.hpp"

using namespace regrasp;

namespace
{

struct Rendered
{
  PinholeCamera camera;
  RigidTransform camera_pose;
  RenderOutput out;
};

Rendered render_box(const Vec3& half, const RigidTransform& pose, double standoff = 0.5)
{
  Rendered r;
  const TriangleMesh box = make_box(half);
  r.camera_pose = top_down_camera(box, pose, standoff);
  r.out = render_depth(transform_mesh(box, pose), r.camera, r.camera_pose);
  return r;
}

GraspHypothesis hyp(const Vec3& c, double q)
{
  GraspHypothesis g;
  g.center = c;
  g.quality = q;
  g.width = 0.03;
  return g;
}

}  // namespace

TEST_CASE("empty mask gives no grasps")
{
  const PinholeCamera cam;
  const DepthImage d(cam.width, cam.height);
  const SegmentationMask m(cam.width, cam.height);
  CHECK(sample_antipodal(d, m, cam, RigidTransform(), GripperParams{}).empty());
}

TEST_CASE("antipodal grasps across a 4 cm box")
{
  const RigidTransform pose = RigidTransform::from_axis_angle(Vec3(0, 0, 0.3), Vec3(0.4, 0.1, 0.05));
  const Rendered r = render_box(Vec3(0.02, 0.08, 0.05), pose);
  SamplerParams sp;
  sp.seed = 7;
  const auto grasps = sample_antipodal(r.out.depth, r.out.mask, r.camera, r.camera_pose, GripperParams{}, sp);
  REQUIRE(grasps.size() > 20);
  const Vec3 box_x = pose.rotate(Vec3::UnitX());
  const double depth = 0.5;
  const double two_px = 2.0 * depth / r.camera.fx;
  for (const GraspHypothesis& g : grasps)
  {
    CHECK(std::abs(g.axis.dot(g.approach)) < 1e-6);
    CHECK(std::abs(g.axis.norm() - 1.0) < 1e-9);
    CHECK(g.width <= 0.085);
    CHECK(g.width > 0.0);
    CHECK(g.quality >= 0.0);
    CHECK(g.quality <= 1.0);
    // Only the 4 cm span fits the gripper.
    CHECK(std::abs(g.axis.dot(box_x)) > std::cos(std::atan(0.5)));
    CHECK(std::abs(g.width - 0.04) <= two_px);
    CHECK((g.approach - Vec3(0, 0, -1)).norm() < 1e-9);
  }
  // Determinism.
  const auto again = sample_antipodal(r.out.depth, r.out.mask, r.camera, r.camera_pose, GripperParams{}, sp);
  REQUIRE(again.size() == grasps.size());
  for (std::size_t i = 0; i < grasps.size(); ++i)
    CHECK(again[i].center == grasps[i].center);
}

TEST_CASE("width constraint excludes a 12 cm span")
{
  const Rendered r = render_box(Vec3(0.06, 0.06, 0.04), RigidTransform::from_translation(Vec3(0.3, 0.0, 0.04)));
  const auto grasps = sample_antipodal(r.out.depth, r.out.mask, r.camera, r.camera_pose, GripperParams{});
  CHECK(grasps.empty());
}

TEST_CASE("greedy selection")
{
  SUBCASE("all hypotheses within the separation")
  {
    std::vector<GraspHypothesis> h;
    for (int i = 0; i < 181; ++i)
      h.push_back(hyp(Vec3(0.001 * std::cos(i), 0.001 * std::sin(i), 0.0), 0.9 - 0.001 * i));
    const GraspCandidateSet s = select_candidates(h);
    CHECK(s.selected == 1);
    CHECK(s.grasps.size() == 2);
  }
  SUBCASE("well separated, floor below all")
  {
    std::vector<GraspHypothesis> h;
    for (int i = 0; i < 25; ++i)
      h.push_back(hyp(Vec3(0.02 * i, 0.0, 0.0), 0.99 - 0.01 * i));
    SelectionParams p;
    p.quality_floor = 0.1;
    const GraspCandidateSet s = select_candidates(h, p);
    CHECK(s.selected == 25);
    CHECK(s.grasps.size() == 50);
  }
  SUBCASE("floor reached at the twelfth")
  {
    std::vector<GraspHypothesis> h;
    for (int i = 0; i < 30; ++i)
      h.push_back(hyp(Vec3(0.02 * i, 0.0, 0.0), i < 11 ? 0.9 - 0.01 * i : 0.4 - 0.01 * i));
    const GraspCandidateSet s = select_candidates(h);
    CHECK(s.selected == 12);
    CHECK(s.grasps.size() == 24);
  }
  SUBCASE("separation is horizontal and doubling swaps fingers")
  {
    std::vector<GraspHypothesis> h{hyp(Vec3(0, 0, 0), 0.9), hyp(Vec3(0.005, 0, 0.5), 0.8), hyp(Vec3(0, 0.012, 0), 0.7)};
    const GraspCandidateSet s = select_candidates(h);
    REQUIRE(s.selected == 2);
    for (std::size_t i = 0; i < s.grasps.size(); i += 2)
    {
      const GraspHypothesis& a = s.grasps[i];
      const GraspHypothesis& b = s.grasps[i + 1];
      CHECK(a.center == b.center);
      CHECK(a.width == b.width);
      CHECK(a.quality == b.quality);
      CHECK((a.axis + b.axis).norm() < 1e-12);
      CHECK(a.approach == b.approach);
      const RigidTransform rel = grasp_pose(a).inverse() * grasp_pose(b);
      CHECK(std::abs(rel.angle() - M_PI) < 1e-9);
      CHECK(std::abs(std::abs(rel.axis_angle().normalized().z()) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("selected candidates from a rendered object are separated")
{
  const Rendered r = render_box(Vec3(0.025, 0.1, 0.04), RigidTransform::from_translation(Vec3(0.4, 0.0, 0.04)));
  const auto grasps = sample_antipodal(r.out.depth, r.out.mask, r.camera, r.camera_pose, GripperParams{});
  const GraspCandidateSet s = select_candidates(grasps);
  CHECK(s.grasps.size() == 2 * s.selected);
  CHECK(s.selected >= 5);
  for (std::size_t i = 0; i < s.grasps.size(); i += 2)
    for (std::size_t j = i + 2; j < s.grasps.size(); j += 2)
    {
      const Vec3 d = s.grasps[i].center - s.grasps[j].center;
      const Vec3 up = s.grasps[i].approach;
      CHECK((d - d.dot(up) * up).norm() >= 0.01);
    }
  for (std::size_t i = 2; i < s.grasps.size(); i += 2)
    CHECK(s.grasps[i].quality <= s.grasps[i - 2].quality);
  const Json j = to_json(s);
  CHECK(j["grasps"].size() == s.grasps.size());
  const GraspHypothesis back = grasp_from_json(j["grasps"][0]);
  CHECK((back.center - s.grasps[0].center).norm() < 1e-12);
}
