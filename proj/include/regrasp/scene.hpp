#ifndef REGRASP_SCENE_HPP
#define REGRASP_SCENE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regrasp/depth_render.hpp"
#include "regrasp/json_io.hpp"
#include "regrasp/shape_space.hpp"
#include "regrasp/synthetic_category.hpp"

namespace regrasp
{

/// Box whose top face is the support plane.
struct TableConfig
{
  RigidTransform pose = RigidTransform::from_translation(Vec3(0.6, 0.0, -0.2));  ///< box center
  Vec3 half_extents = Vec3(0.3, 0.6, 0.2);
};

/// Head-mounted depth sensor looking forward and down at the table.
struct SensorConfig
{
  PinholeCamera camera;
  RigidTransform pose = default_sensor_pose();

  static RigidTransform default_sensor_pose();
};

struct PoseNoise
{
  double trans_sigma = 0.0;  ///< m, per axis
  double rot_sigma = 0.0;    ///< rad, per rotation-vector component
};

struct NoiseConfig
{
  double depth_sigma = 0.0;  ///< m, per pixel along the optical axis
  PoseNoise pose;
};

/// Motion of the object inside the supportive hand while it is grasped,
/// applied in the grasp frame about the grasp center.
struct DisturbanceConfig
{
  double trans_sigma = 0.0;  ///< m
  double rot_sigma = 0.0;    ///< rad
  /// When set, the translation has length trans_sigma and the rotation angle
  /// rot_sigma, each about a uniformly random direction; otherwise both are
  /// Gaussian vectors with these per-component sigmas.
  bool fixed_magnitude = false;
};

struct InstanceSpec
{
  enum class Kind
  {
    Shape,   ///< synthetic category instance from shape parameters
    Latent,  ///< decoded from the category's shape space
    Mesh,    ///< loaded from disk
  };
  Kind kind = Kind::Shape;
  ShapeParams shape;
  Eigen::VectorXd latent;
  std::filesystem::path mesh;
  /// Object-frame functional grasp of a mesh instance (required for Kind::Mesh).
  std::optional<RigidTransform> functional_grasp;
};

struct SuccessThresholds
{
  double translation = 0.01;             ///< m
  double rotation = 5.0 * M_PI / 180.0;  ///< rad
};

struct SceneConfig
{
  std::string name;
  std::string category = "spray_bottle";
  InstanceSpec instance;
  /// Object frame (base center, z up) to world.
  RigidTransform object_pose = RigidTransform::from_translation(Vec3(0.42, 0.12, 0.0));
  TableConfig table;
  SensorConfig sensor;
  NoiseConfig noise;
  DisturbanceConfig disturbance;
  std::uint64_t seed = 0;
  SuccessThresholds success;
  /// Trained shape space for the category; empty means train the synthetic one.
  std::optional<std::filesystem::path> model;

  /// Throws Config on negative sigmas or thresholds, or a mesh instance without a functional grasp.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`.
SceneConfig scene_from_json(const Json& j, const std::filesystem::path& base_dir = {});
SceneConfig load_scene(const std::filesystem::path& path);
Json to_json(const SceneConfig& config);

struct GroundTruth
{
  RigidTransform object_pose;
  TriangleMesh instance_mesh;                  ///< object frame
  RigidTransform functional_grasp_in_object;  ///< object frame
  RigidTransform functional_grasp;            ///< world frame
};

struct Scene
{
  SceneConfig config;
  PointCloud observed;  ///< world frame, object pixels only
  RigidTransform noisy_pose;
  GroundTruth truth;
};

/// Places the instance on the table, renders it from the sensor with
/// Gaussian depth noise, keeps the object pixels (segmentation oracle) and
/// perturbs the pose (pose-estimation oracle). `model` is needed for latent
/// instances. Deterministic in the config seed.
Scene generate_scene(const SceneConfig& config, const ShapeSpaceModel* model = nullptr);

/// Distribution of a seeded batch of synthetic scenes.
struct SceneSetParams
{
  std::size_t count = 50;
  std::uint64_t seed = 1;
  Vec3 position_min = Vec3(0.38, 0.05, 0.0);  ///< m, object base center
  Vec3 position_max = Vec3(0.50, 0.20, 0.0);
  double yaw_bound = 0.4;  ///< rad, about the world z axis
  NoiseConfig noise{0.002, {0.005, 0.03}};
  DisturbanceConfig disturbance{0.02, 10.0 * M_PI / 180.0, true};
};

/// Scenes "<category>_000", "<category>_001", ... with shape parameters and
/// placements drawn from `params.seed`; scene i has seed derive_seed(params.seed, i).
std::vector<SceneConfig> make_scene_set(const std::string& category, const SceneSetParams& params = {});

/// Independent random stream for one purpose of one scene.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Rigid motion drawn per the disturbance config.
RigidTransform sample_disturbance(const DisturbanceConfig& config, std::uint64_t seed);

}  // namespace regrasp

#endif  // REGRASP_SCENE_HPP
