#include <doctest.h>

#include <filesystem>

#include "regrasp/error.hpp"
#include "regrasp/kinematics.hpp"
#include "regrasp/pipeline.hpp"

using namespace regrasp;

namespace
{

constexpr double kDeg = M_PI / 180.0;

const ShapeSpaceModel& model()
{
  static const ShapeSpaceModel m = train_synthetic_category("watering_can");
  return m;
}

const DualArmModel& robot()
{
  static const DualArmModel r = load_robot_description(default_robot_path());
  return r;
}

SceneConfig quiet_scene()
{
  SceneSetParams p;
  p.count = 1;
  SceneConfig c = make_scene_set("watering_can", p).front();
  c.noise = {};
  c.disturbance = {};
  return c;
}

RigidTransform look_at(const Vec3& eye, const Vec3& target)
{
  Mat3 r;
  r.col(2) = (target - eye).normalized();
  r.col(0) = Vec3::UnitZ().cross(r.col(2)).normalized();
  r.col(1) = r.col(2).cross(r.col(0));
  return RigidTransform(r, eye);
}

}  // namespace

TEST_CASE("closed loop without noise")
{
  const PipelineReport r = run_pipeline(generate_scene(quiet_scene()), model(), robot());
  INFO(r.failure_stage, " ", r.failure_reason);
  REQUIRE(r.completed);
  CHECK(r.success);
  CHECK(r.final_error->translation < 0.005);
  CHECK(r.final_error->rotation < 2.0 * kDeg);

  const std::vector<std::string> order{"pose_refinement",  "shape_registration", "grasp_sampling",
                                       "handover_planning", "view_pose",          "grasp_execution",
                                       "inhand_observation", "inhand_refinement", "success_check"};
  REQUIRE(r.stages.size() == order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
  {
    CHECK(r.stages[i].name == order[i]);
    CHECK(r.stages[i].seconds >= 0.0);
  }
  CHECK(r.total_seconds() >= 0.0);
  CHECK(to_json(r, false).dump() == to_json(run_pipeline(generate_scene(quiet_scene()), model(), robot()), false).dump());
}

TEST_CASE("in-hand refinement corrects the grasp disturbance")
{
  SceneConfig c = quiet_scene();
  c.disturbance = {0.02, 10.0 * kDeg, true};
  const Scene s = generate_scene(c);

  const PipelineReport on = run_pipeline(s, model(), robot());
  INFO(on.failure_stage, " ", on.failure_reason);
  REQUIRE(on.completed);
  CHECK(on.refinement_applied);
  CHECK(on.final_error->translation < 0.010);
  CHECK(on.final_error->rotation < 4.0 * kDeg);

  PipelineParams off;
  off.refine = false;
  const PipelineReport open = run_pipeline(s, model(), robot(), off);
  REQUIRE(open.completed);
  CHECK_FALSE(open.refinement_applied);
  // The planned grasp is carried out unchanged, so the error is the disturbance.
  CHECK(open.final_error->rotation >= 0.99 * c.disturbance.rot_sigma);
  CHECK(open.final_error->translation == doctest::Approx(open.unrefined_error->translation));
  CHECK(on.unrefined_error->rotation == doctest::Approx(open.unrefined_error->rotation));
}

TEST_CASE("object out of reach")
{
  SceneConfig c = quiet_scene();
  c.object_pose = RigidTransform::from_translation(Vec3(1.45, 0.1, 0.0));
  c.table.pose = RigidTransform::from_translation(Vec3(1.1, 0.0, -0.2));
  c.table.half_extents = Vec3(0.6, 0.6, 0.2);
  c.sensor.pose = look_at(Vec3(0.9, 0.1, 0.6), Vec3(1.45, 0.1, 0.05));
  const PipelineReport r = run_pipeline(generate_scene(c), model(), robot());
  CHECK_FALSE(r.completed);
  CHECK_FALSE(r.success);
  CHECK(r.failure_stage == "handover_planning");
  CHECK(r.failure_code == "NoHandoverFound");
  CHECK(r.stages.back().name == "handover_planning");
  CHECK_FALSE(r.stages.back().success);
}

TEST_CASE("degenerate input is reported, not thrown")
{
  Scene s = generate_scene(quiet_scene());
  s.observed = PointCloud{};
  const PipelineReport r = run_pipeline(s, model(), robot());
  CHECK_FALSE(r.completed);
  CHECK(r.failure_stage == "pose_refinement");
  CHECK(r.failure_code == "EmptyCloud");

  ShapeSpaceModel bare = model();
  bare.functional_grasp.reset();
  const PipelineReport r2 = run_pipeline(generate_scene(quiet_scene()), bare, robot());
  CHECK(r2.failure_stage == "shape_registration");
}

TEST_CASE("success criterion")
{
  const SuccessThresholds t;
  CHECK(grasp_success({0.0099, 4.9 * kDeg}, t));
  CHECK_FALSE(grasp_success({0.0101, 1.0 * kDeg}, t));
  CHECK_FALSE(grasp_success({0.001, 5.1 * kDeg}, t));
  CHECK_FALSE(grasp_success({0.01, 0.0}, t));
}

TEST_CASE("functional grasp annotation persists")
{
  const std::filesystem::path path = std::filesystem::temp_directory_path() / "regrasp_annotate.bin";
  ShapeSpaceModel m = model();
  m.functional_grasp.reset();
  save_shape_space(path, m);
  const RigidTransform pose = RigidTransform::from_axis_angle(Vec3(0.1, -0.4, 0.7), Vec3(-0.06, 0.01, 0.07));
  annotate_functional_grasp(path, pose);
  const ShapeSpaceModel back = load_shape_space(path);
  REQUIRE(back.functional_grasp.has_value());
  CHECK(back.functional_grasp->matrix().isApprox(pose.matrix(), 1e-15));
  std::filesystem::remove(path);
  std::filesystem::remove(std::filesystem::path(path.string() + ".json"));
}

TEST_CASE("batch summary is deterministic")
{
  SceneSetParams p;
  p.count = 3;
  p.seed = 11;
  auto run = [&] {
    std::vector<BatchEntry> entries;
    for (const SceneConfig& c : make_scene_set("watering_can", p))
      entries.push_back({c.name, run_pipeline(generate_scene(c), model(), robot())});
    return batch_summary(entries);
  };
  const Json a = run();
  CHECK(a.dump() == run().dump());
  CHECK(a.at("aggregate").at("count") == 3);
  CHECK(a.at("scenes").size() == 3);
  CHECK(a.dump().find("seconds") == std::string::npos);
}
