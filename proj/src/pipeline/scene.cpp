#include "regrasp/scene.hpp"

#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "regrasp/error.hpp"
#include "regrasp/mesh_io.hpp"
#include "regrasp/primitives.hpp"

namespace regrasp
{

RigidTransform SensorConfig::default_sensor_pose()
{
  const Vec3 eye(0.0, 0.0, 0.85);
  const Vec3 target(0.45, 0.1, 0.25);
  Mat3 r;
  r.col(2) = (target - eye).normalized();
  r.col(0) = Vec3::UnitZ().cross(r.col(2)).normalized();
  r.col(1) = r.col(2).cross(r.col(0));
  return RigidTransform(r, eye);
}

void SceneConfig::validate() const
{
  auto nonneg = [](double v, const char* what) {
    if (!(v >= 0.0))
      throw Error(ErrorCode::Config, std::string(what) + " must be non-negative");
  };
  nonneg(noise.depth_sigma, "noise.depth_sigma");
  nonneg(noise.pose.trans_sigma, "noise.pose.trans_sigma");
  nonneg(noise.pose.rot_sigma, "noise.pose.rot_sigma");
  nonneg(disturbance.trans_sigma, "disturbance.trans_sigma");
  nonneg(disturbance.rot_sigma, "disturbance.rot_sigma");
  if (!(success.translation > 0.0) || !(success.rotation > 0.0))
    throw Error(ErrorCode::Config, "success thresholds must be positive");
  if (!(table.half_extents.array() > 0.0).all())
    throw Error(ErrorCode::Config, "table half extents must be positive");
  if (instance.kind == InstanceSpec::Kind::Mesh && !instance.functional_grasp)
    throw Error(ErrorCode::Config, "a mesh instance needs its functional grasp");
  sensor.camera.validate();
}

namespace
{

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

SceneConfig scene_from_json(const Json& j, const std::filesystem::path& base_dir)
{
  try
  {
    SceneConfig c;
    c.name = j.value("name", std::string());
    c.category = j.value("category", c.category);
    if (j.contains("instance"))
    {
      const Json& in = j.at("instance");
      if (in.contains("shape"))
      {
        const Json& s = in.at("shape");
        c.instance.kind = InstanceSpec::Kind::Shape;
        c.instance.shape = {s.value("radial", 0.0), s.value("height", 0.0), s.value("taper", 0.0)};
      }
      else if (in.contains("latent"))
      {
        c.instance.kind = InstanceSpec::Kind::Latent;
        const auto z = in.at("latent").get<std::vector<double>>();
        c.instance.latent = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
      }
      else if (in.contains("mesh"))
      {
        c.instance.kind = InstanceSpec::Kind::Mesh;
        c.instance.mesh = resolve(base_dir, in.at("mesh").get<std::string>());
      }
      else
        throw Error(ErrorCode::Config, "instance needs one of 'shape', 'latent' or 'mesh'");
      if (in.contains("functional_grasp"))
        c.instance.functional_grasp = pose_from_json(in.at("functional_grasp"));
    }
    if (j.contains("object_pose"))
      c.object_pose = pose_from_json(j.at("object_pose"));
    if (j.contains("table"))
    {
      const Json& t = j.at("table");
      if (t.contains("pose"))
        c.table.pose = pose_from_json(t.at("pose"));
      if (t.contains("half_extents"))
        c.table.half_extents = vec3_from_json(t.at("half_extents"));
    }
    if (j.contains("sensor"))
    {
      const Json& s = j.at("sensor");
      if (s.contains("intrinsics"))
      {
        const Json& k = s.at("intrinsics");
        PinholeCamera& cam = c.sensor.camera;
        cam.fx = k.value("fx", cam.fx);
        cam.fy = k.value("fy", cam.fy);
        cam.cx = k.value("cx", cam.cx);
        cam.cy = k.value("cy", cam.cy);
        cam.width = k.value("width", cam.width);
        cam.height = k.value("height", cam.height);
      }
      if (s.contains("pose"))
        c.sensor.pose = pose_from_json(s.at("pose"));
    }
    if (j.contains("noise"))
    {
      const Json& n = j.at("noise");
      c.noise.depth_sigma = n.value("depth_sigma", 0.0);
      if (n.contains("pose"))
      {
        c.noise.pose.trans_sigma = n.at("pose").value("trans_sigma", 0.0);
        c.noise.pose.rot_sigma = n.at("pose").value("rot_sigma", 0.0);
      }
    }
    if (j.contains("disturbance"))
    {
      const Json& d = j.at("disturbance");
      c.disturbance.trans_sigma = d.value("trans_sigma", 0.0);
      c.disturbance.rot_sigma = d.value("rot_sigma", 0.0);
      c.disturbance.fixed_magnitude = d.value("fixed_magnitude", false);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("success"))
    {
      c.success.translation = j.at("success").value("translation", c.success.translation);
      c.success.rotation = j.at("success").value("rotation", c.success.rotation);
    }
    if (j.contains("model") && !j.at("model").is_null())
      c.model = resolve(base_dir, j.at("model").get<std::string>());
    c.validate();
    return c;
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::Config, std::string("scene: ") + e.what());
  }
}

SceneConfig load_scene(const std::filesystem::path& path)
{
  SceneConfig c = scene_from_json(read_json_file(path), path.parent_path());
  if (c.name.empty())
    c.name = path.stem().string();
  return c;
}

Json to_json(const SceneConfig& c)
{
  Json instance;
  switch (c.instance.kind)
  {
    case InstanceSpec::Kind::Shape:
      instance["shape"] = {{"radial", c.instance.shape.radial},
                           {"height", c.instance.shape.height},
                           {"taper", c.instance.shape.taper}};
      break;
    case InstanceSpec::Kind::Latent:
      instance["latent"] = std::vector<double>(c.instance.latent.data(), c.instance.latent.data() + c.instance.latent.size());
      break;
    case InstanceSpec::Kind::Mesh:
      instance["mesh"] = c.instance.mesh.string();
      break;
  }
  if (c.instance.functional_grasp)
    instance["functional_grasp"] = to_json(*c.instance.functional_grasp);
  const PinholeCamera& cam = c.sensor.camera;
  Json j{{"name", c.name},
         {"category", c.category},
         {"instance", instance},
         {"object_pose", to_json(c.object_pose)},
         {"table", {{"pose", to_json(c.table.pose)}, {"half_extents", to_json(c.table.half_extents)}}},
         {"sensor",
          {{"intrinsics",
            {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy}, {"width", cam.width}, {"height", cam.height}}},
           {"pose", to_json(c.sensor.pose)}}},
         {"noise",
          {{"depth_sigma", c.noise.depth_sigma},
           {"pose", {{"trans_sigma", c.noise.pose.trans_sigma}, {"rot_sigma", c.noise.pose.rot_sigma}}}}},
         {"disturbance",
          {{"trans_sigma", c.disturbance.trans_sigma},
           {"rot_sigma", c.disturbance.rot_sigma},
           {"fixed_magnitude", c.disturbance.fixed_magnitude}}},
         {"seed", c.seed},
         {"success", {{"translation", c.success.translation}, {"rotation", c.success.rotation}}}};
  j["model"] = c.model ? Json(c.model->string()) : Json(nullptr);
  return j;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace
{

Vec3 gaussian_vec(std::mt19937_64& rng, double sigma)
{
  if (!(sigma > 0.0))
    return Vec3::Zero();
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

Vec3 unit_vec(std::mt19937_64& rng)
{
  for (;;)
  {
    const Vec3 v = gaussian_vec(rng, 1.0);
    if (v.norm() > 1e-9)
      return v.normalized();
  }
}

}  // namespace

RigidTransform sample_disturbance(const DisturbanceConfig& config, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  if (config.fixed_magnitude)
  {
    const Vec3 t = config.trans_sigma * unit_vec(rng);
    const Vec3 axis = unit_vec(rng);
    return RigidTransform::from_axis_angle(config.rot_sigma * axis, t);
  }
  const Vec3 t = gaussian_vec(rng, config.trans_sigma);
  const Vec3 r = gaussian_vec(rng, config.rot_sigma);
  return RigidTransform::from_axis_angle(r, t);
}

std::vector<SceneConfig> make_scene_set(const std::string& category, const SceneSetParams& params)
{
  make_category(category);  // rejects unknown names
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> shape(-1.0, 1.0);
  std::vector<SceneConfig> out;
  out.reserve(params.count);
  for (std::size_t i = 0; i < params.count; ++i)
  {
    SceneConfig c;
    std::ostringstream name;
    name << category << '_' << std::setw(3) << std::setfill('0') << i;
    c.name = name.str();
    c.category = category;
    c.instance.shape.radial = shape(rng);
    c.instance.shape.height = shape(rng);
    c.instance.shape.taper = shape(rng);
    Vec3 p;
    for (int k = 0; k < 3; ++k)
      p[k] = params.position_min[k] + u(rng) * (params.position_max[k] - params.position_min[k]);
    const double yaw = params.yaw_bound * (2.0 * u(rng) - 1.0);
    c.object_pose = RigidTransform::from_axis_angle(Vec3(0.0, 0.0, yaw), p);
    c.noise = params.noise;
    c.disturbance = params.disturbance;
    c.seed = derive_seed(params.seed, i);
    out.push_back(std::move(c));
  }
  return out;
}

Scene generate_scene(const SceneConfig& config, const ShapeSpaceModel* model)
{
  config.validate();
  Scene scene;
  scene.config = config;
  GroundTruth& truth = scene.truth;
  truth.object_pose = config.object_pose;
  switch (config.instance.kind)
  {
    case InstanceSpec::Kind::Shape:
    {
      const SyntheticCategory cat = make_category(config.category);
      truth.instance_mesh = make_instance(cat, config.instance.shape);
      truth.functional_grasp_in_object = instance_functional_grasp(cat, config.instance.shape);
      break;
    }
    case InstanceSpec::Kind::Latent:
    {
      if (!model)
        throw Error(ErrorCode::Config, "a latent instance needs the category's shape space");
      if (!model->functional_grasp)
        throw Error(ErrorCode::Config, "the shape space has no functional grasp annotation");
      const LatentDescriptor latent{config.instance.latent, RigidTransform::identity()};
      truth.instance_mesh = decode(*model, latent);
      truth.functional_grasp_in_object = warp_pose(*model, latent, *model->functional_grasp);
      break;
    }
    case InstanceSpec::Kind::Mesh:
      truth.instance_mesh = load_mesh(config.instance.mesh).mesh;
      truth.functional_grasp_in_object = *config.instance.functional_grasp;
      break;
  }
  if (config.instance.functional_grasp && config.instance.kind != InstanceSpec::Kind::Mesh)
    truth.functional_grasp_in_object = *config.instance.functional_grasp;
  truth.functional_grasp = truth.object_pose * truth.functional_grasp_in_object;

  const TriangleMesh table = make_box(config.table.half_extents);
  RenderOutput render =
      render_scene({LabeledMesh{&truth.instance_mesh, truth.object_pose, SegmentationMask::kObject},
                    LabeledMesh{&table, config.table.pose, 2}},
                   config.sensor.camera, config.sensor.pose);
  if (config.noise.depth_sigma > 0.0)
  {
    std::mt19937_64 rng(derive_seed(config.seed, 1));
    std::normal_distribution<double> n(0.0, config.noise.depth_sigma);
    for (std::size_t i = 0; i < render.depth.depth.size(); ++i)
      if (render.mask.label[i] == SegmentationMask::kObject)
        render.depth.depth[i] = std::max(1e-4, render.depth.depth[i] + n(rng));
  }
  scene.observed = deproject(render.depth, render.mask, config.sensor.camera, config.sensor.pose,
                             SegmentationMask::kObject);

  scene.noisy_pose = truth.object_pose;
  if (config.noise.pose.trans_sigma > 0.0 || config.noise.pose.rot_sigma > 0.0)
  {
    std::mt19937_64 rng(derive_seed(config.seed, 2));
    const Vec3 dt = gaussian_vec(rng, config.noise.pose.trans_sigma);
    const Vec3 dr = gaussian_vec(rng, config.noise.pose.rot_sigma);
    // Rotation about the object origin, translation in the world frame.
    scene.noisy_pose = RigidTransform::from_translation(truth.object_pose.translation() + dt) *
                       RigidTransform::from_axis_angle(dr) *
                       RigidTransform(truth.object_pose.rotation(), Vec3::Zero());
  }
  return scene;
}

}  // namespace regrasp
