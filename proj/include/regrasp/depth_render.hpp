#ifndef REGRASP_DEPTH_RENDER_HPP
#define REGRASP_DEPTH_RENDER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "regrasp/geometry.hpp"

namespace regrasp
{

/// Pinhole intrinsics. Camera frame: x right, y down, z along the optical
/// axis. Pixel (u, v) has its center at image coordinates (u, v).
struct PinholeCamera
{
  double fx = 550.0;
  double fy = 550.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
  /// Camera-frame point on the ray through pixel coordinates (u, v) at depth z.
  Vec3 deproject(double u, double v, double depth) const
  {
    return {(u - cx) / fx * depth, (v - cy) / fy * depth, depth};
  }
  Eigen::Vector2d project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
};

struct DepthImage
{
  int width = 0;
  int height = 0;
  std::vector<double> depth;  ///< meters along the optical axis, 0 = no hit

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, 0.0) {}
  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

/// Per-pixel label: 0 is background, otherwise the label of the mesh hit.
struct SegmentationMask
{
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kObject = 1;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> label;

  SegmentationMask() = default;
  SegmentationMask(int w, int h) : width(w), height(h), label(static_cast<std::size_t>(w) * h, kBackground) {}
  std::uint8_t at(int u, int v) const { return label[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t& at(int u, int v) { return label[static_cast<std::size_t>(v) * width + u]; }
  std::size_t count(std::uint8_t value) const;
};

struct RenderOutput
{
  DepthImage depth;
  SegmentationMask mask;
};

struct LabeledMesh
{
  const TriangleMesh* mesh = nullptr;
  RigidTransform pose;  ///< mesh frame to world
  std::uint8_t label = SegmentationMask::kObject;
};

/// Z-buffer rasterization with perspective-correct depth and near-plane
/// clipping; no back-face culling. `camera_pose` maps camera to world.
RenderOutput render_depth(const TriangleMesh& mesh, const PinholeCamera& camera, const RigidTransform& camera_pose);
RenderOutput render_scene(const std::vector<LabeledMesh>& meshes, const PinholeCamera& camera,
                          const RigidTransform& camera_pose);

/// Camera `standoff` meters above the object's bounding-box center, looking
/// straight down, image x aligned with world x.
RigidTransform top_down_camera(const TriangleMesh& mesh, const RigidTransform& object_pose, double standoff);

/// Default standoff for top_down_camera: twice the bounding diagonal.
double default_standoff(const TriangleMesh& mesh);

/// World-frame points of all pixels whose label passes `keep` (label != 0 by default).
PointCloud deproject(const DepthImage& depth, const SegmentationMask& mask, const PinholeCamera& camera,
                     const RigidTransform& camera_pose, std::optional<std::uint8_t> only_label = std::nullopt);

/// 32-bit float PFM, rows stored bottom to top, little-endian.
void write_pfm(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_pfm(const std::filesystem::path& path);
/// 16-bit grayscale PNG in millimeters (saturating at 65.535 m).
void write_depth_png16(const std::filesystem::path& path, const DepthImage& depth);
/// 8-bit PNG, label values scaled by `scale`.
void write_mask_png(const std::filesystem::path& path, const SegmentationMask& mask, int scale = 255);

}  // namespace regrasp

#endif  // REGRASP_DEPTH_RENDER_HPP
