#include "regrasp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "regrasp/error.hpp"
#include "regrasp/primitives.hpp"

namespace regrasp
{

double PipelineReport::total_seconds() const
{
  double t = 0.0;
  for (const StageRecord& s : stages)
    t += s.seconds;
  return t;
}

bool grasp_success(const PoseError& error, const SuccessThresholds& thresholds)
{
  return error.translation < thresholds.translation && error.rotation < thresholds.rotation;
}

namespace
{

Json error_json(const std::optional<PoseError>& e)
{
  if (!e)
    return nullptr;
  return Json{{"translation", e->translation}, {"rotation", e->rotation}};
}

// Times one stage and turns a thrown Error into a recorded failure.
class StageRunner
{
public:
  explicit StageRunner(PipelineReport& report) : report_(report) {}

  bool aborted() const { return !report_.failure_stage.empty(); }

  template <class F>
  bool run(const std::string& name, F&& body)
  {
    if (aborted())
      return false;
    StageRecord rec{name, 0.0, true, {}};
    const auto start = std::chrono::steady_clock::now();
    try
    {
      body(rec);
    }
    catch (const Error& e)
    {
      fail(rec, std::string(to_string(e.code())), e.what());
    }
    catch (const std::exception& e)
    {
      fail(rec, "Internal", e.what());
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report_.stages.push_back(rec);
    return !aborted();
  }

private:
  void fail(StageRecord& rec, const std::string& code, const std::string& what)
  {
    rec.success = false;
    rec.message = what;
    report_.failure_stage = rec.name;
    report_.failure_code = code;
    report_.failure_reason = what;
  }

  PipelineReport& report_;
};

std::string format_error(const PoseError& e)
{
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.2f mm, %.2f deg", e.translation * 1000.0, e.rotation * 180.0 / M_PI);
  return buf;
}

}  // namespace

Json to_json(const PipelineReport& r, bool include_times)
{
  Json stages = Json::array();
  for (const StageRecord& s : r.stages)
  {
    Json j{{"name", s.name}, {"success", s.success}, {"message", s.message}};
    if (include_times)
      j["seconds"] = s.seconds;
    stages.push_back(j);
  }
  Json planner = nullptr;
  if (r.planner)
  {
    planner = to_json(*r.planner);
    if (!include_times)
      planner.erase("wall_time_s");
  }
  Json j{{"version", kReportVersion},
         {"scene", r.scene},
         {"category", r.category},
         {"seed", r.seed},
         {"completed", r.completed},
         {"success", r.success},
         {"failure", r.failure_stage.empty()
                         ? Json(nullptr)
                         : Json{{"stage", r.failure_stage}, {"code", r.failure_code}, {"reason", r.failure_reason}}},
         {"warnings", r.warnings},
         {"stages", stages},
         {"unrefined_error", error_json(r.unrefined_error)},
         {"final_error", error_json(r.final_error)},
         {"refinement_applied", r.refinement_applied},
         {"final_grasp_reachable", r.final_grasp_reachable},
         {"registration_fitness", r.registration_fitness},
         {"grasp_candidates", r.grasp_candidates},
         {"feasible_grasps", r.feasible_grasps},
         {"planner", planner},
         {"handover_cost", r.handover_cost},
         {"view_pose_canonical", r.view_pose_canonical},
         {"disturbance", to_json(r.disturbance)},
         {"final_grasp", r.final_grasp ? to_json(*r.final_grasp) : Json(nullptr)},
         {"true_grasp", r.true_grasp ? to_json(*r.true_grasp) : Json(nullptr)}};
  if (include_times)
    j["total_seconds"] = r.total_seconds();
  return j;
}

CollisionWorld make_table_world(const TableConfig& table, const DualArmModel& robot, double resolution,
                                double clearance_margin)
{
  if (!(resolution > 0.0))
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  const Vec3 lo(-0.3, -0.9, -0.3);
  const Vec3 hi(1.1, 0.9, 1.2);
  GridDims dims;
  for (int a = 0; a < 3; ++a)
    dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / resolution));
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  voxelize_box(occ, lo, resolution, dims, table.pose, table.half_extents);
  CollisionWorld world;
  world.field = build_edt(occ, lo, resolution, dims);
  world.robot_static = static_robot_spheres(robot);
  world.clearance_margin = clearance_margin;
  world.out_of_grid = OutOfGridPolicy::Exhaustive;
  return world;
}

PipelineReport run_pipeline(const Scene& scene, const ShapeSpaceModel& model, const DualArmModel& robot,
                            const PipelineParams& params)
{
  const SceneConfig& cfg = scene.config;
  PipelineReport report;
  report.scene = cfg.name;
  report.category = cfg.category;
  report.seed = cfg.seed;
  StageRunner stages(report);

  RigidTransform estimated_pose;
  RegistrationResult reg;
  RigidTransform planned_grasp;
  TriangleMesh world_mesh;
  GraspCandidateSet candidates;
  CollisionWorld world;
  HandoverPlan plan;
  RigidTransform pick_grasp;
  std::optional<ViewPoseResult> view;
  RigidTransform object_in_hand;
  RigidTransform true_grasp;
  PointCloud inhand_cloud;
  RigidTransform view_tip;
  RigidTransform final_grasp;

  stages.run("pose_refinement", [&](StageRecord& rec) {
    const TriangleMesh mean = decode(model, {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.latent_dim())),
                                             RigidTransform::identity()});
    const IcpResult icp = icp_register(scene.observed, mean, scene.noisy_pose, params.icp);
    estimated_pose = refined_pose(scene.noisy_pose, icp);
    rec.message = "residual " + std::to_string(icp.residual_rms) + " m";
  });

  stages.run("shape_registration", [&](StageRecord& rec) {
    if (!model.functional_grasp)
      throw Error(ErrorCode::Config, "the shape space has no functional grasp annotation");
    reg = infer(model, scene.observed, estimated_pose, params.infer);
    planned_grasp = reg.frame * warp_pose(model, reg, *model.functional_grasp, params.warp);
    world_mesh = transform_mesh(reg.deformed_mesh, reg.frame);
    report.registration_fitness = reg.fitness_rms;
    rec.message = "fitness " + std::to_string(reg.fitness_rms) + " m";
  });

  stages.run("grasp_sampling", [&](StageRecord& rec) {
    const PinholeCamera camera;
    const RigidTransform cam_pose = top_down_camera(world_mesh, RigidTransform::identity(), default_standoff(world_mesh));
    const RenderOutput top = render_depth(world_mesh, camera, cam_pose);
    SamplerParams sp = params.sampler;
    sp.seed = derive_seed(cfg.seed, 3);
    candidates = select_candidates(sample_antipodal(top.depth, top.mask, camera, cam_pose, params.gripper, sp),
                                   params.selection);
    report.grasp_candidates = candidates.grasps.size();
    if (candidates.grasps.empty())
      throw Error(ErrorCode::EmptyInput, "no antipodal grasp candidates on the registered shape");
    rec.message = std::to_string(candidates.selected) + " selected";
  });

  stages.run("handover_planning", [&](StageRecord& rec) {
    world = make_table_world(cfg.table, robot, params.grid_resolution, params.clearance_margin);
    const auto feasible = filter_grasps(candidates, robot, world, params.planner);
    report.feasible_grasps = feasible.size();
    const Sphere object = bounding_sphere(world_mesh.vertices());
    plan = plan_handover(feasible, planned_grasp, robot, world, params.planner, object);
    report.planner = plan.report;
    report.handover_cost = plan.config.cost;
    pick_grasp = feasible[plan.grasp_index].pose;
    rec.message = "cost " + std::to_string(plan.config.cost);
  });

  if (params.refine)
    stages.run("view_pose", [&](StageRecord& rec) {
      ViewPoseRequest req;
      req.functional_grasp = plan.config.functional;
      req.grasp_approach = plan.config.functional.rotate(Vec3::UnitZ());
      req.supportive_grasp = plan.config.supportive;
      req.camera_pose = cfg.sensor.pose;
      req.d_min = params.view_d_min;
      req.offset_D = params.view_offset;
      const Sphere object = bounding_sphere(world_mesh.vertices());
      const Vec3 object_in_tip = pick_grasp.inverse() * object.center;
      const ViewFeasibility feasible = [&](const RigidTransform& target) -> std::optional<JointState> {
        auto s = ik(robot.left, target, plan.config.left, params.view_ik);
        if (!s)
          return std::nullopt;
        SphereSet set = robot_spheres(robot, *s, robot.right_home);
        attach_object(set, robot, {target * object_in_tip, object.radius});
        if (!check_free(world, set).free)
          return std::nullopt;
        return s;
      };
      try
      {
        view = generate_view_pose(req, feasible, params.view);
        report.view_pose_canonical = view->canonical;
      }
      catch (const Error& e)
      {
        if (e.code() != ErrorCode::NoViewPoseFound)
          throw;
        // Proceed open loop with the planned grasp.
        rec.success = false;
        rec.message = e.what();
        report.warnings.push_back("view pose: " + std::string(e.what()) + "; using the unrefined grasp");
      }
    });

  stages.run("grasp_execution", [&](StageRecord& rec) {
    report.disturbance = sample_disturbance(cfg.disturbance, derive_seed(cfg.seed, 4));
    // True object pose relative to the supportive hand after the grasp.
    object_in_hand = report.disturbance * pick_grasp.inverse() * scene.truth.object_pose;
    true_grasp = plan.config.supportive * object_in_hand * scene.truth.functional_grasp_in_object;
    report.true_grasp = true_grasp;
    report.unrefined_error = pose_error(plan.config.functional, true_grasp);
    rec.message = "unrefined error " + format_error(*report.unrefined_error);
  });

  final_grasp = plan.config.functional;
  if (params.refine && view)
  {
    stages.run("inhand_observation", [&](StageRecord& rec) {
      view_tip = fk(robot.left, view->joints);
      const TriangleMesh hand = make_box(0.9 * robot.hand_cuboid_half_extents);
      RenderOutput out = render_scene(
          {LabeledMesh{&scene.truth.instance_mesh, view_tip * object_in_hand, SegmentationMask::kObject},
           LabeledMesh{&hand, view_tip * robot.hand_cuboid_offset, 2}},
          cfg.sensor.camera, cfg.sensor.pose);
      if (cfg.noise.depth_sigma > 0.0)
      {
        std::mt19937_64 rng(derive_seed(cfg.seed, 5));
        std::normal_distribution<double> n(0.0, cfg.noise.depth_sigma);
        for (std::size_t i = 0; i < out.depth.depth.size(); ++i)
          if (out.mask.label[i] != SegmentationMask::kBackground)
            out.depth.depth[i] = std::max(1e-4, out.depth.depth[i] + n(rng));
      }
      inhand_cloud = deproject(out.depth, out.mask, cfg.sensor.camera, cfg.sensor.pose);
      rec.message = std::to_string(inhand_cloud.size()) + " points";
    });

    stages.run("inhand_refinement", [&](StageRecord& rec) {
      const Cuboid hand(view_tip * robot.hand_cuboid_offset, robot.hand_cuboid_half_extents);
      const RigidTransform expected = view_tip * pick_grasp.inverse() * reg.frame;
      const RigidTransform grasp_at_view = view_tip * plan.config.supportive.inverse() * plan.config.functional;
      const InHandRefinement ref =
          inhand_refine(expected, inhand_cloud, reg.deformed_mesh, hand, grasp_at_view, params.inhand);
      final_grasp = plan.config.functional * ref.t_view;
      report.refinement_applied = true;
      rec.message = "residual " + std::to_string(ref.icp.residual_rms) + " m";
    });
  }

  stages.run("success_check", [&](StageRecord& rec) {
    report.final_grasp = final_grasp;
    report.final_error = pose_error(final_grasp, true_grasp);
    report.success = grasp_success(*report.final_error, cfg.success);
    report.final_grasp_reachable = ik(robot.right, final_grasp, plan.config.right, params.planner.ik).has_value();
    report.completed = true;
    rec.success = report.success;
    rec.message = "final error " + format_error(*report.final_error);
  });
  return report;
}

void annotate_functional_grasp(ShapeSpaceModel& model, const RigidTransform& pose)
{
  model.functional_grasp = pose;
}

void annotate_functional_grasp(const std::filesystem::path& path, const RigidTransform& pose)
{
  ShapeSpaceModel model = load_shape_space(path);
  annotate_functional_grasp(model, pose);
  save_shape_space(path, model);
}

TrainParams CategoryTrainingParams::default_train_params()
{
  TrainParams p;
  p.max_instance_points = 1000;
  p.cpd.low_rank = 80;
  return p;
}

ShapeSpaceModel train_synthetic_category(const std::string& name, const CategoryTrainingParams& params)
{
  const SyntheticCategory cat = make_category(name);
  std::vector<TriangleMesh> meshes;
  std::vector<std::string> labels;
  for (const ShapeParams& s : sample_shape_params(params.instances, params.seed))
  {
    meshes.push_back(make_instance(cat, s));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "shape(radial=%.6f,height=%.6f,taper=%.6f)", s.radial, s.height, s.taper);
    labels.emplace_back(buf);
  }
  ShapeSpaceModel model = train_shape_space(cat.canonical, meshes, params.train);
  model.category = name;
  model.training_files = labels;
  annotate_functional_grasp(model, cat.functional_grasp);
  return model;
}

std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

namespace
{

double median(std::vector<double> v)
{
  if (v.empty())
    return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json number_or_null(double v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

}  // namespace

Json batch_summary(const std::vector<BatchEntry>& entries)
{
  Json scenes = Json::array();
  std::size_t completed = 0;
  std::size_t successes = 0;
  std::vector<double> ft, fr, ut, ur;
  for (const BatchEntry& e : entries)
  {
    const PipelineReport& r = e.report;
    scenes.push_back({{"name", e.name},
                      {"category", r.category},
                      {"seed", r.seed},
                      {"completed", r.completed},
                      {"success", r.success},
                      {"failure_stage", r.failure_stage},
                      {"failure_code", r.failure_code},
                      {"refinement_applied", r.refinement_applied},
                      {"final_grasp_reachable", r.final_grasp_reachable},
                      {"unrefined_error", error_json(r.unrefined_error)},
                      {"final_error", error_json(r.final_error)}});
    completed += r.completed;
    successes += r.success;
    if (r.final_error)
    {
      ft.push_back(r.final_error->translation);
      fr.push_back(r.final_error->rotation);
    }
    if (r.unrefined_error)
    {
      ut.push_back(r.unrefined_error->translation);
      ur.push_back(r.unrefined_error->rotation);
    }
  }
  const double n = static_cast<double>(entries.size());
  return Json{{"version", kReportVersion},
              {"scenes", scenes},
              {"aggregate",
               {{"count", entries.size()},
                {"completed", completed},
                {"successes", successes},
                {"success_rate", entries.empty() ? Json(nullptr) : Json(static_cast<double>(successes) / n)},
                {"median_final_translation", number_or_null(median(ft))},
                {"median_final_rotation", number_or_null(median(fr))},
                {"median_unrefined_translation", number_or_null(median(ut))},
                {"median_unrefined_rotation", number_or_null(median(ur))}}}};
}

}  // namespace regrasp
