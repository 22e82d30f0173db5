#include "regrasp/grasp_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "regrasp/error.hpp"

namespace regrasp
{

RigidTransform grasp_pose(const GraspHypothesis& g)
{
  Mat3 r;
  r.col(2) = g.approach.normalized();
  r.col(0) = (g.axis - g.axis.dot(r.col(2)) * r.col(2)).normalized();
  r.col(1) = r.col(2).cross(r.col(0));
  return RigidTransform(r, g.center);
}

GraspHypothesis swapped_fingers(const GraspHypothesis& g)
{
  GraspHypothesis out = g;
  out.axis = -g.axis;
  return out;
}

namespace
{

struct Gradient
{
  double gu = 0.0;
  double gv = 0.0;
  double magnitude() const { return std::hypot(gu, gv); }
};

std::vector<Gradient> sobel(const DepthImage& depth, const SegmentationMask& mask)
{
  const int w = depth.width;
  const int h = depth.height;
  double far = 0.0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (mask.at(u, v) != SegmentationMask::kBackground)
        far = std::max(far, depth.at(u, v));
  far += 0.05;
  auto value = [&](int u, int v) {
    u = std::clamp(u, 0, w - 1);
    v = std::clamp(v, 0, h - 1);
    const double d = depth.at(u, v);
    return mask.at(u, v) != SegmentationMask::kBackground && d > 0.0 ? d : far;
  };
  std::vector<Gradient> g(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      if (mask.at(u, v) == SegmentationMask::kBackground)
        continue;
      const double gu = (value(u + 1, v - 1) + 2.0 * value(u + 1, v) + value(u + 1, v + 1)) -
                        (value(u - 1, v - 1) + 2.0 * value(u - 1, v) + value(u - 1, v + 1));
      const double gv = (value(u - 1, v + 1) + 2.0 * value(u, v + 1) + value(u + 1, v + 1)) -
                        (value(u - 1, v - 1) + 2.0 * value(u, v - 1) + value(u + 1, v - 1));
      g[static_cast<std::size_t>(v) * w + u] = {gu / 8.0, gv / 8.0};
    }
  return g;
}

struct EdgeNormal
{
  Eigen::Vector2d n = Eigen::Vector2d::Zero();
  double coherence = 0.0;
};

// Dominant gradient direction in a window around an edge pixel (structure
// tensor), oriented like the pixel's own gradient. Coherence is near one on
// straight edges and drops at corners.
EdgeNormal edge_normal(const std::vector<Gradient>& grad, const std::vector<std::uint8_t>& is_edge, int w, int h, int u,
                       int v, int radius)
{
  Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
  for (int dv = -radius; dv <= radius; ++dv)
    for (int du = -radius; du <= radius; ++du)
    {
      const int x = u + du, y = v + dv;
      if (x < 0 || y < 0 || x >= w || y >= h || !is_edge[static_cast<std::size_t>(y) * w + x])
        continue;
      const Gradient& g = grad[static_cast<std::size_t>(y) * w + x];
      const Eigen::Vector2d d(g.gu, g.gv);
      j += d * d.transpose() / d.squaredNorm();
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j);
  const double l0 = es.eigenvalues()[0], l1 = es.eigenvalues()[1];
  EdgeNormal out;
  if (!(l1 > 0.0))
    return out;
  out.coherence = (l1 - l0) / (l1 + l0);
  out.n = es.eigenvectors().col(1);
  const Gradient& own = grad[static_cast<std::size_t>(v) * w + u];
  if (out.n.dot(Eigen::Vector2d(own.gu, own.gv)) < 0.0)
    out.n = -out.n;
  return out;
}

}  // namespace

std::vector<GraspHypothesis> sample_antipodal(const DepthImage& depth, const SegmentationMask& mask,
                                              const PinholeCamera& camera, const RigidTransform& camera_pose,
                                              const GripperParams& gripper, const SamplerParams& params)
{
  camera.validate();
  if (depth.width != mask.width || depth.height != mask.height || depth.width != camera.width ||
      depth.height != camera.height)
    throw Error(ErrorCode::DimensionMismatch, "depth image, mask and camera sizes differ");
  if (!(gripper.friction_mu > 0.0) || !(gripper.max_width > 0.0))
    throw Error(ErrorCode::InvalidArgument, "gripper width and friction coefficient must be positive");

  const int w = depth.width;
  const int h = depth.height;
  const std::vector<Gradient> grad = sobel(depth, mask);
  auto in_mask = [&](int u, int v) {
    return u >= 0 && v >= 0 && u < w && v < h && mask.at(u, v) != SegmentationMask::kBackground &&
           depth.at(u, v) > 0.0;
  };
  auto is_edge = [&](int u, int v) {
    return in_mask(u, v) && grad[static_cast<std::size_t>(v) * w + u].magnitude() >= params.edge_threshold;
  };

  std::vector<std::uint8_t> edge_flag(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (is_edge(u, v))
      {
        edge_flag[static_cast<std::size_t>(v) * w + u] = 1;
        edges.emplace_back(u, v);
      }
  std::vector<GraspHypothesis> out;
  if (edges.empty())
    return out;

  const double cos_cone = std::cos(std::atan(gripper.friction_mu));
  const Vec3 approach = camera_pose.rotate(Vec3::UnitZ());
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  const int max_steps = w + h;

  for (std::size_t s = 0; s < params.n_samples; ++s)
  {
    const auto [u1, v1] = edges[pick(rng)];
    const EdgeNormal e1 = edge_normal(grad, edge_flag, w, h, u1, v1, params.normal_window);
    if (e1.coherence < params.min_edge_coherence)
      continue;
    const Eigen::Vector2d n1 = e1.n;

    // Walk inward until the mask ends; the last pixel inside is the opposite contact.
    int u2 = u1, v2 = v1;
    for (int t = 1; t <= max_steps; ++t)
    {
      const int u = static_cast<int>(std::lround(u1 - t * n1.x()));
      const int v = static_cast<int>(std::lround(v1 - t * n1.y()));
      if (!in_mask(u, v))
        break;
      u2 = u;
      v2 = v;
    }
    if ((u2 == u1 && v2 == v1) || !is_edge(u2, v2))
      continue;
    const EdgeNormal e2 = edge_normal(grad, edge_flag, w, h, u2, v2, params.normal_window);
    if (e2.coherence < params.min_edge_coherence)
      continue;
    const Eigen::Vector2d n2 = e2.n;
    // The closing axis follows the inward normal at the sampled contact. Both
    // inward normals and the actual contact line must lie in the friction cones.
    const Eigen::Vector2d a = -n1;
    const Eigen::Vector2d line = Eigen::Vector2d(u2 - u1, v2 - v1).normalized();
    if (n2.dot(a) < cos_cone || line.dot(a) < cos_cone)
      continue;

    const double d1 = depth.at(u1, v1);
    const double d2 = depth.at(u2, v2);
    const double zm = 0.5 * (d1 + d2);
    const Vec3 p1 = camera.deproject(u1, v1, zm);
    const Vec3 p2 = camera.deproject(u2, v2, zm);
    const Vec3 axis_cam = Vec3(a.x(), a.y(), 0.0);
    // Contacts are pixel centers just inside the silhouette; add one pixel footprint.
    const double footprint = zm * (std::abs(a.x()) / camera.fx + std::abs(a.y()) / camera.fy);
    const double width = (p2 - p1).dot(axis_cam) + footprint;
    if (width > gripper.max_width || !(width > 0.0))
      continue;

    const double zc = std::max(d1, d2) + params.center_depth_offset;
    const Vec3 mid_cam = camera.deproject(0.5 * (u1 + u2), 0.5 * (v1 + v2), zc);

    GraspHypothesis hyp;
    hyp.center = camera_pose * mid_cam;
    hyp.axis = camera_pose.rotate(axis_cam);
    hyp.approach = approach;
    hyp.width = width;
    hyp.quality = std::clamp(0.5 * (std::abs(n1.dot(a)) + std::abs(n2.dot(a))), 0.0, 1.0);
    out.push_back(hyp);
  }
  return out;
}

GraspCandidateSet select_candidates(std::vector<GraspHypothesis> hypotheses, const SelectionParams& params)
{
  std::stable_sort(hypotheses.begin(), hypotheses.end(),
                   [](const GraspHypothesis& a, const GraspHypothesis& b) { return a.quality > b.quality; });
  std::vector<GraspHypothesis> accepted;
  for (const GraspHypothesis& h : hypotheses)
  {
    const Vec3 up = h.approach.normalized();
    bool clear = true;
    for (const GraspHypothesis& a : accepted)
    {
      const Vec3 d = h.center - a.center;
      if ((d - d.dot(up) * up).norm() < params.min_separation)
      {
        clear = false;
        break;
      }
    }
    if (!clear)
      continue;
    accepted.push_back(h);
    if (h.quality < params.quality_floor && accepted.size() >= params.min_count)
      break;
  }
  GraspCandidateSet set;
  set.selected = accepted.size();
  for (const GraspHypothesis& g : accepted)
  {
    set.grasps.push_back(g);
    set.grasps.push_back(swapped_fingers(g));
  }
  return set;
}

Json to_json(const GraspHypothesis& g)
{
  return {{"center", to_json(g.center)},
          {"axis", to_json(g.axis)},
          {"approach", to_json(g.approach)},
          {"width", g.width},
          {"quality", g.quality}};
}

GraspHypothesis grasp_from_json(const Json& j)
{
  GraspHypothesis g;
  g.center = vec3_from_json(j.at("center"));
  g.axis = vec3_from_json(j.at("axis")).normalized();
  g.approach = vec3_from_json(j.at("approach")).normalized();
  g.width = j.at("width").get<double>();
  g.quality = j.value("quality", 0.0);
  return g;
}

Json to_json(const GraspCandidateSet& set)
{
  Json grasps = Json::array();
  for (const GraspHypothesis& g : set.grasps)
    grasps.push_back(to_json(g));
  return {{"selected", set.selected}, {"grasps", grasps}};
}

}  // namespace regrasp
