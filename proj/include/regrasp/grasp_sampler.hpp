#ifndef REGRASP_GRASP_SAMPLER_HPP
#define REGRASP_GRASP_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "regrasp/depth_render.hpp"
#include "regrasp/geometry.hpp"
#include "regrasp/json_io.hpp"

namespace regrasp
{

/// Parallel-jaw grasp in the world frame.
struct GraspHypothesis
{
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();      ///< closing direction, unit
  Vec3 approach = Vec3::UnitZ();  ///< unit, perpendicular to axis
  double width = 0.0;             ///< m
  double quality = 0.0;           ///< in [0, 1]
};

/// Grasp frame: origin at the center, z = approach, x = closing axis.
RigidTransform grasp_pose(const GraspHypothesis& g);

struct GripperParams
{
  double max_width = 0.085;  ///< m
  double friction_mu = 0.5;
};

struct SamplerParams
{
  std::size_t n_samples = 400;
  std::uint64_t seed = 0;
  /// Minimum depth-gradient magnitude of an edge pixel (m per pixel).
  double edge_threshold = 0.005;
  /// How far below the shallower contact the grasp center sits (m).
  double center_depth_offset = 0.01;
  /// Half size of the window used to estimate contact normals (pixels).
  int normal_window = 2;
  /// Contacts whose local edge direction is less coherent (corners) are skipped.
  double min_edge_coherence = 0.8;
};

/// Antipodal sampler on a depth/mask pair. Edge pixels are mask pixels with a
/// large Sobel depth gradient (background is first filled with a far plane);
/// contact normals come from the local structure tensor of edge gradients.
/// Each sample picks an edge pixel, walks against its outward gradient across
/// the mask and pairs it with the opposite boundary pixel when both contacts
/// pass the friction-cone test and the width fits the gripper. Closing axes
/// lie in the image plane; the approach is the optical axis.
std::vector<GraspHypothesis> sample_antipodal(const DepthImage& depth, const SegmentationMask& mask,
                                              const PinholeCamera& camera, const RigidTransform& camera_pose,
                                              const GripperParams& gripper, const SamplerParams& params = {});

struct SelectionParams
{
  double min_separation = 0.01;  ///< m, measured perpendicular to the approach
  double quality_floor = 0.5;
  std::size_t min_count = 10;
};

struct GraspCandidateSet
{
  /// Each selected grasp is followed by its copy with swapped fingers.
  std::vector<GraspHypothesis> grasps;
  std::size_t selected = 0;  ///< count before doubling
};

/// Greedy selection by descending quality (stable for ties) with a minimum
/// horizontal separation. Stops after accepting a grasp below the quality
/// floor once at least `min_count` grasps are selected.
GraspCandidateSet select_candidates(std::vector<GraspHypothesis> hypotheses, const SelectionParams& params = {});

/// The same grasp rotated by 180 degrees about its approach, which swaps the fingers.
GraspHypothesis swapped_fingers(const GraspHypothesis& g);

Json to_json(const GraspHypothesis& g);
GraspHypothesis grasp_from_json(const Json& j);
Json to_json(const GraspCandidateSet& set);

}  // namespace regrasp

#endif  // REGRASP_GRASP_SAMPLER_HPP
