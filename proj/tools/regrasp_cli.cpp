// Command-line front end: model training and annotation, the individual
// planning stages, and end-to-end runs over synthetic scenes.
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "regrasp/error.hpp"
#include "regrasp/mesh_io.hpp"
#include "regrasp/pipeline.hpp"

using namespace regrasp;
namespace fs = std::filesystem;

namespace
{

// "x y z rx ry rz": translation in m, rotation vector in rad.
RigidTransform pose_from_values(const std::vector<double>& v)
{
  if (v.size() != 6)
    throw Error(ErrorCode::Config, "a pose needs 6 values: x y z rx ry rz");
  return RigidTransform::from_axis_angle(Vec3(v[3], v[4], v[5]), Vec3(v[0], v[1], v[2]));
}

RigidTransform pose_option(const std::vector<double>& values, const std::string& file,
                           const RigidTransform& fallback = RigidTransform::identity())
{
  if (!file.empty())
    return pose_from_json(read_json_file(file));
  if (!values.empty())
    return pose_from_values(values);
  return fallback;
}

void add_pose_options(CLI::App* app, const std::string& name, std::vector<double>& values, std::string& file,
                      const std::string& what)
{
  app->add_option("--" + name, values, what + " as x y z rx ry rz (m, rotation vector in rad)")->expected(6);
  app->add_option("--" + name + "-file", file,
                  what + " as a JSON pose {\"translation\": [..], \"quaternion\": [w, x, y, z]}");
}

void emit(const Json& j, const std::string& path)
{
  if (path.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json_file(path, j);
}

bool is_mesh_file(const fs::path& p)
{
  const std::string ext = p.extension().string();
  return ext == ".obj" || ext == ".ply";
}

// --- train-shape-space -------------------------------------------------------

struct TrainArgs
{
  std::string dir;
  std::string synthetic;
  std::string output;
  std::string canonical = "canonical";
  std::string category;
  std::size_t latent_dim = 0;
  double variance = 0.95;
  std::size_t low_rank = 80;
  std::size_t instances = 12;
  std::uint64_t seed = 1;
};

int train(const TrainArgs& a)
{
  ShapeSpaceModel model;
  if (!a.synthetic.empty())
  {
    CategoryTrainingParams p;
    p.instances = a.instances;
    p.seed = a.seed;
    p.train.latent_dim = a.latent_dim;
    p.train.variance_target = a.variance;
    p.train.cpd.low_rank = a.low_rank;
    model = train_synthetic_category(a.synthetic, p);
  }
  else
  {
    if (a.dir.empty())
      throw Error(ErrorCode::Config, "give a category directory or --synthetic");
    std::vector<fs::path> files;
    fs::path canonical;
    for (const auto& e : fs::directory_iterator(a.dir))
    {
      if (!e.is_regular_file() || !is_mesh_file(e.path()))
        continue;
      if (e.path().stem() == a.canonical)
        canonical = e.path();
      else
        files.push_back(e.path());
    }
    if (canonical.empty())
      throw Error(ErrorCode::Config, "no " + a.canonical + ".obj or .ply in " + a.dir);
    std::sort(files.begin(), files.end());
    std::vector<TriangleMesh> meshes;
    for (const fs::path& f : files)
      meshes.push_back(load_mesh(f).mesh);
    TrainParams p;
    p.latent_dim = a.latent_dim;
    p.variance_target = a.variance;
    p.cpd.low_rank = a.low_rank;
    model = train_shape_space(load_mesh(canonical).mesh, meshes, p);
    model.category = a.category.empty() ? fs::path(a.dir).filename().string() : a.category;
    for (const fs::path& f : files)
      model.training_files.push_back(f.filename().string());
    const fs::path grasp = fs::path(a.dir) / "functional_grasp.json";
    if (fs::exists(grasp))
      annotate_functional_grasp(model, pose_from_json(read_json_file(grasp)));
  }
  save_shape_space(a.output, model);
  std::cout << "latent dimension " << model.latent_dim() << ", explained variances";
  for (Eigen::Index i = 0; i < model.variances.size(); ++i)
    std::cout << ' ' << model.variances[i];
  std::cout << " m^2\n";
  return 0;
}

// --- generate-category -------------------------------------------------------

struct GenerateArgs
{
  std::string category;
  std::string output;
  std::size_t instances = 12;
  std::uint64_t seed = 1;
  std::size_t scenes = 0;
  std::uint64_t scene_seed = 1;
};

int generate(const GenerateArgs& a)
{
  const SyntheticCategory cat = make_category(a.category);
  const fs::path out(a.output);
  fs::create_directories(out);
  save_obj(out / "canonical.obj", cat.canonical);
  write_json_file(out / "functional_grasp.json", to_json(cat.functional_grasp));
  const auto shapes = sample_shape_params(a.instances, a.seed);
  for (std::size_t i = 0; i < shapes.size(); ++i)
  {
    char name[32];
    std::snprintf(name, sizeof(name), "instance_%03zu.obj", i);
    save_obj(out / name, make_instance(cat, shapes[i]));
  }
  if (a.scenes > 0)
  {
    SceneSetParams sp;
    sp.count = a.scenes;
    sp.seed = a.scene_seed;
    fs::create_directories(out / "scenes");
    for (const SceneConfig& c : make_scene_set(a.category, sp))
      write_json_file(out / "scenes" / (c.name + ".json"), to_json(c));
  }
  std::cout << "wrote " << shapes.size() << " instances";
  if (a.scenes > 0)
    std::cout << " and " << a.scenes << " scenes";
  std::cout << " to " << out.string() << '\n';
  return 0;
}

// --- register ----------------------------------------------------------------

int register_cloud(const std::string& model_path, const std::string& cloud_path, const RigidTransform& init,
                   const std::string& output, const std::string& mesh_out)
{
  const ShapeSpaceModel model = load_shape_space(model_path);
  const PointCloud cloud = load_ply_cloud(cloud_path);
  const RegistrationResult r = infer(model, cloud, init);
  Json j{{"latent", std::vector<double>(r.latent.z.data(), r.latent.z.data() + r.latent.z.size())},
         {"local_rigid", to_json(r.latent.local_rigid)},
         {"frame", to_json(r.frame)},
         {"fitness_rms", r.fitness_rms},
         {"iterations", r.iterations},
         {"converged", r.converged}};
  if (model.functional_grasp)
    j["functional_grasp"] = to_json(r.frame * warp_pose(model, r, *model.functional_grasp));
  if (!mesh_out.empty())
    save_mesh(mesh_out, transform_mesh(r.deformed_mesh, r.frame));
  emit(j, output);
  return 0;
}

// --- sample-grasps -----------------------------------------------------------

int sample_grasps(const std::string& mesh_path, const RigidTransform& pose, std::size_t samples,
                  std::uint64_t seed, const std::string& output)
{
  const TriangleMesh mesh = transform_mesh(load_mesh(mesh_path).mesh, pose);
  const PinholeCamera camera;
  const RigidTransform cam_pose = top_down_camera(mesh, RigidTransform::identity(), default_standoff(mesh));
  const RenderOutput top = render_depth(mesh, camera, cam_pose);
  SamplerParams sp;
  sp.n_samples = samples;
  sp.seed = seed;
  const GraspCandidateSet set = select_candidates(sample_antipodal(top.depth, top.mask, camera, cam_pose, {}, sp));
  emit(to_json(set), output);
  return 0;
}

// --- plan-handover -----------------------------------------------------------

struct PlanArgs
{
  std::string grasps;
  std::string robot;
  std::string output;
  std::vector<double> functional;
  std::string functional_file;
  std::vector<double> object_sphere;
  std::size_t transforms = 256;
  bool no_early_stop = false;
};

int plan(const PlanArgs& a)
{
  const DualArmModel robot = load_robot_description(a.robot.empty() ? default_robot_path() : fs::path(a.robot));
  const Json in = read_json_file(a.grasps);
  GraspCandidateSet set;
  for (const Json& g : in.at("grasps"))
    set.grasps.push_back(grasp_from_json(g));
  set.selected = in.value("selected", set.grasps.size());
  if (a.functional.empty() && a.functional_file.empty())
    throw Error(ErrorCode::Config, "--functional or --functional-file is required");
  const RigidTransform functional = pose_option(a.functional, a.functional_file);

  PlannerParams params;
  params.sampler.n = a.transforms;
  params.early_stop = !a.no_early_stop;
  const CollisionWorld world = make_table_world(TableConfig{}, robot, 0.02, 0.005);
  std::optional<Sphere> object;
  if (a.object_sphere.size() == 4)
    object = Sphere{Vec3(a.object_sphere[0], a.object_sphere[1], a.object_sphere[2]), a.object_sphere[3]};
  const auto feasible = filter_grasps(set, robot, world, params);
  const HandoverPlan p = plan_handover(feasible, functional, robot, world, params, object);
  emit(Json{{"feasible_grasps", feasible.size()},
            {"grasp_index", feasible[p.grasp_index].index},
            {"sample_index", p.sample_index},
            {"configuration", to_json(p.config)},
            {"planner", to_json(p.report)}},
       a.output);
  return 0;
}

// --- run-pipeline and batch --------------------------------------------------

struct RunArgs
{
  std::string robot;
  std::string model;
  bool no_refine = false;
  bool times = true;
};

class ModelCache
{
public:
  explicit ModelCache(std::string override_path) : override_(std::move(override_path)) {}

  const ShapeSpaceModel& get(const SceneConfig& c)
  {
    const std::string key = !override_.empty() ? override_ : c.model ? c.model->string() : "synthetic:" + c.category;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = models_.find(key);
    if (it == models_.end())
    {
      ShapeSpaceModel m = key.starts_with("synthetic:") ? train_synthetic_category(c.category) : load_shape_space(key);
      it = models_.emplace(key, std::move(m)).first;
    }
    return it->second;
  }

private:
  std::string override_;
  std::mutex mutex_;
  std::map<std::string, ShapeSpaceModel> models_;
};

PipelineReport run_scene(const SceneConfig& c, ModelCache& models, const DualArmModel& robot, const RunArgs& a,
                         const std::string& dump_dir = {})
{
  PipelineParams params;
  params.refine = !a.no_refine;
  const ShapeSpaceModel& model = models.get(c);
  const Scene scene = generate_scene(c, &model);
  if (!dump_dir.empty())
  {
    fs::create_directories(dump_dir);
    save_ply_cloud(fs::path(dump_dir) / "observed.ply", scene.observed);
    save_mesh(fs::path(dump_dir) / "instance.ply", transform_mesh(scene.truth.instance_mesh, scene.truth.object_pose));
    write_json_file(fs::path(dump_dir) / "noisy_pose.json", to_json(scene.noisy_pose));
  }
  return run_pipeline(scene, model, robot, params);
}

void print_outcome(const std::string& name, const PipelineReport& r)
{
  std::cout << name << ": " << (r.success ? "success" : "failure");
  if (r.final_error)
    std::cout << ", final error " << r.final_error->translation * 1000.0 << " mm / "
              << r.final_error->rotation * 180.0 / M_PI << " deg";
  if (!r.failure_stage.empty())
    std::cout << ", aborted at " << r.failure_stage << " (" << r.failure_reason << ")";
  std::cout << '\n';
  for (const std::string& w : r.warnings)
    std::cerr << "warning: " << name << ": " << w << '\n';
}

int run_one(const std::string& scene_path, const std::string& report_path, const std::string& dump_dir,
            const RunArgs& a)
{
  const DualArmModel robot = load_robot_description(a.robot.empty() ? default_robot_path() : fs::path(a.robot));
  const SceneConfig c = load_scene(scene_path);
  ModelCache models(a.model);
  const PipelineReport r = run_scene(c, models, robot, a, dump_dir);
  if (!report_path.empty())
    write_json_file(report_path, to_json(r, a.times));
  print_outcome(c.name.empty() ? scene_path : c.name, r);
  return r.completed ? 0 : 2;
}

int run_batch(const std::string& dir, const std::string& summary_path, const std::string& reports_dir,
              unsigned jobs, const RunArgs& a)
{
  const DualArmModel robot = load_robot_description(a.robot.empty() ? default_robot_path() : fs::path(a.robot));
  const auto files = list_scene_files(dir);
  std::vector<SceneConfig> configs;
  for (const fs::path& f : files)
    configs.push_back(load_scene(f));
  ModelCache models(a.model);
  for (const SceneConfig& c : configs)
    models.get(c);

  std::vector<BatchEntry> entries(configs.size());
  std::size_t next = 0;
  std::mutex mutex;
  auto worker = [&] {
    for (;;)
    {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next == configs.size())
          return;
        i = next++;
      }
      const std::string name = configs[i].name.empty() ? files[i].stem().string() : configs[i].name;
      entries[i] = {name, run_scene(configs[i], models, robot, a)};
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < std::max(1u, jobs); ++k)
    pool.emplace_back(worker);
  for (std::thread& t : pool)
    t.join();

  if (!reports_dir.empty())
  {
    fs::create_directories(reports_dir);
    for (const BatchEntry& e : entries)
      write_json_file(fs::path(reports_dir) / (e.name + ".json"), to_json(e.report, a.times));
  }
  for (const BatchEntry& e : entries)
    print_outcome(e.name, e.report);
  const Json summary = batch_summary(entries);
  write_json_file(summary_path, summary);
  const Json& agg = summary.at("aggregate");
  std::cout << agg.at("successes") << '/' << agg.at("count") << " successful\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Category-level functional regrasping by dual-arm handover"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train-shape-space", "Learn a shape space from meshes of one category");
  train_cmd->add_option("category_dir", ta.dir,
                        "Directory of aligned OBJ/PLY meshes, one named <canonical>.obj|.ply; an optional "
                        "functional_grasp.json (pose in the canonical frame) is stored as the annotation");
  train_cmd->add_option("--synthetic", ta.synthetic, "Train a built-in category instead (spray_bottle, watering_can)");
  train_cmd->add_option("-o,--output", ta.output, "Model path (binary; metadata goes to <path>.json)")->required();
  train_cmd->add_option("--canonical", ta.canonical, "File stem of the canonical mesh")->capture_default_str();
  train_cmd->add_option("--category", ta.category, "Category name (default: directory name)");
  train_cmd->add_option("--latent-dim", ta.latent_dim, "Latent dimension; 0 picks it from --variance")
      ->capture_default_str();
  train_cmd->add_option("--variance", ta.variance, "Explained-variance target in (0, 1]")->capture_default_str();
  train_cmd->add_option("--low-rank", ta.low_rank, "CPD kernel eigenpairs; 0 solves exactly")->capture_default_str();
  train_cmd->add_option("--instances", ta.instances, "Synthetic training instances")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed, "Synthetic instance seed")->capture_default_str();

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate-category", "Write a built-in category's meshes and seeded scenes");
  gen_cmd->add_option("category", ga.category, "spray_bottle or watering_can")->required();
  gen_cmd->add_option("-o,--output", ga.output, "Output directory")->required();
  gen_cmd->add_option("--instances", ga.instances, "Instance meshes to write")->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "Instance shape seed")->capture_default_str();
  gen_cmd->add_option("--scenes", ga.scenes, "Scene configs to write under <output>/scenes")->capture_default_str();
  gen_cmd->add_option("--scene-seed", ga.scene_seed, "Scene set seed")->capture_default_str();

  std::string ann_model;
  std::vector<double> ann_pose;
  std::string ann_pose_file;
  auto* ann_cmd = app.add_subcommand("annotate-grasp", "Store the functional grasp on a trained model");
  ann_cmd->add_option("model", ann_model, "Model path")->required();
  add_pose_options(ann_cmd, "pose", ann_pose, ann_pose_file, "Grasp in the canonical frame");

  std::string reg_model, reg_cloud, reg_out, reg_mesh, reg_init_file;
  std::vector<double> reg_init;
  auto* reg_cmd = app.add_subcommand("register", "Fit the shape space to an observed point cloud");
  reg_cmd->add_option("model", reg_model, "Model path")->required();
  reg_cmd->add_option("cloud", reg_cloud, "PLY point cloud (m, world frame)")->required();
  add_pose_options(reg_cmd, "init", reg_init, reg_init_file, "Initial object pose (default identity)");
  reg_cmd->add_option("-o,--output", reg_out, "Result JSON (default stdout)");
  reg_cmd->add_option("--mesh-out", reg_mesh, "Registered mesh in the world frame (OBJ/PLY)");

  std::string sg_mesh, sg_out, sg_pose_file;
  std::vector<double> sg_pose;
  std::size_t sg_samples = 400;
  std::uint64_t sg_seed = 0;
  auto* sg_cmd = app.add_subcommand("sample-grasps", "Antipodal grasps from a top-down render of a mesh");
  sg_cmd->add_option("mesh", sg_mesh, "OBJ/PLY mesh (m)")->required();
  add_pose_options(sg_cmd, "pose", sg_pose, sg_pose_file, "Mesh pose in the world (default identity)");
  sg_cmd->add_option("--samples", sg_samples, "Sampling attempts")->capture_default_str();
  sg_cmd->add_option("--seed", sg_seed, "Sampler seed")->capture_default_str();
  sg_cmd->add_option("-o,--output", sg_out, "Grasp set JSON (default stdout)");

  PlanArgs pa;
  auto* plan_cmd = app.add_subcommand("plan-handover", "Plan the handover for supportive grasps and a functional grasp");
  plan_cmd->add_option("grasps", pa.grasps, "Grasp set JSON as written by sample-grasps")->required();
  add_pose_options(plan_cmd, "functional", pa.functional, pa.functional_file, "Functional grasp in the world");
  plan_cmd->add_option("--object", pa.object_sphere, "Held object bounding sphere: cx cy cz r (m)")->expected(4);
  plan_cmd->add_option("--transforms", pa.transforms, "Handover transform samples")->capture_default_str();
  plan_cmd->add_flag("--no-early-stop", pa.no_early_stop, "Search every grasp and transform");
  plan_cmd->add_option("--robot", pa.robot, "Robot description JSON (default $REGRASP_ROBOT or the bundled one)");
  plan_cmd->add_option("-o,--output", pa.output, "Plan JSON (default stdout)");

  RunArgs ra;
  std::string run_scene_path, run_report, run_dump;
  auto* run_cmd = app.add_subcommand("run-pipeline", "Run the full pipeline on one scene");
  run_cmd->add_option("scene", run_scene_path, "Scene JSON")->required();
  run_cmd->add_option("--report", run_report, "Report JSON path");
  run_cmd->add_option("--dump", run_dump,
                      "Directory for the observed cloud (PLY), the true instance mesh (PLY, world frame) and the "
                      "noisy pose (JSON)");

  std::string batch_dir, batch_summary_path, batch_reports;
  unsigned batch_jobs = 1;
  auto* batch_cmd = app.add_subcommand("batch", "Run the pipeline on every scene JSON of a directory");
  batch_cmd->add_option("scenes_dir", batch_dir, "Directory of scene JSON files")->required();
  batch_cmd->add_option("--summary", batch_summary_path, "Summary JSON path (no wall-clock values)")->required();
  batch_cmd->add_option("--reports", batch_reports, "Directory for per-scene reports");
  batch_cmd->add_option("-j,--jobs", batch_jobs, "Scenes run concurrently")->capture_default_str();

  for (CLI::App* cmd : {run_cmd, batch_cmd})
  {
    cmd->add_option("--model", ra.model, "Model for every scene (default: the scene's, else a trained synthetic one)");
    cmd->add_option("--robot", ra.robot, "Robot description JSON (default $REGRASP_ROBOT or the bundled one)");
    cmd->add_flag("--no-refine", ra.no_refine, "Skip the in-hand observation and refinement");
    cmd->add_flag("!--no-times", ra.times, "Leave wall-clock times out of reports");
  }

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*train_cmd)
      return train(ta);
    if (*gen_cmd)
      return generate(ga);
    if (*ann_cmd)
    {
      if (ann_pose.empty() && ann_pose_file.empty())
        throw Error(ErrorCode::Config, "--pose or --pose-file is required");
      annotate_functional_grasp(ann_model, pose_option(ann_pose, ann_pose_file));
      return 0;
    }
    if (*reg_cmd)
      return register_cloud(reg_model, reg_cloud, pose_option(reg_init, reg_init_file), reg_out, reg_mesh);
    if (*sg_cmd)
      return sample_grasps(sg_mesh, pose_option(sg_pose, sg_pose_file), sg_samples, sg_seed, sg_out);
    if (*plan_cmd)
      return plan(pa);
    if (*run_cmd)
      return run_one(run_scene_path, run_report, run_dump, ra);
    if (*batch_cmd)
      return run_batch(batch_dir, batch_summary_path, batch_reports, batch_jobs, ra);
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
