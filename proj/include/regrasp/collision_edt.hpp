#ifndef REGRASP_COLLISION_EDT_HPP
#define REGRASP_COLLISION_EDT_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regrasp/geometry.hpp"

namespace regrasp
{

using GridDims = std::array<int, 3>;

/// How queries outside the grid are answered.
enum class OutOfGridPolicy
{
  /// The grid holds every obstacle: distance at the nearest in-grid sample
  /// plus the distance travelled outside the grid.
  Exhaustive,
  /// Anything outside the grid counts as touching an obstacle (distance 0).
  Conservative,
};

/// Voxel grid storing, per voxel, the Euclidean distance (m) from the voxel
/// center to the nearest occupied voxel center. Immutable after build.
class DistanceField
{
public:
  DistanceField() = default;
  DistanceField(const Vec3& origin, double resolution, const GridDims& dims, std::vector<double> squared_voxels,
                bool any_occupied);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const GridDims& dims() const { return dims_; }
  std::size_t voxel_count() const { return squared_.size(); }

  std::size_t index(int x, int y, int z) const
  {
    return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }
  /// Distance at a voxel center in meters.
  double at(int x, int y, int z) const { return distance_[index(x, y, z)]; }
  /// Squared distance in voxel units (an integer when any voxel is occupied).
  double squared_voxels(int x, int y, int z) const { return squared_[index(x, y, z)]; }
  Vec3 voxel_center(int x, int y, int z) const
  {
    return origin_ + resolution_ * Vec3(x + 0.5, y + 0.5, z + 0.5);
  }
  /// Value reported everywhere when nothing is occupied: the grid diagonal.
  double sentinel() const;
  bool contains(const Vec3& p) const;
  bool any_occupied() const { return any_occupied_; }

private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 1.0;
  GridDims dims_{0, 0, 0};
  std::vector<double> squared_;
  std::vector<double> distance_;
  bool any_occupied_ = false;
};

/// Exact Euclidean distance transform (three separable passes of the
/// lower envelope of parabolas, Felzenszwalb and Huttenlocher).
/// `occupancy` holds dims[0]*dims[1]*dims[2] flags in x-fastest order.
DistanceField build_edt(std::span<const std::uint8_t> occupancy, const Vec3& origin, double resolution,
                        const GridDims& dims);
/// Voxelizes the points (points outside the grid are ignored) and builds the field.
DistanceField build_edt(std::span<const Vec3> occupied_points, const Vec3& origin, double resolution,
                        const GridDims& dims);

/// Occupancy flags for every voxel whose center lies inside the oriented box.
void voxelize_box(std::vector<std::uint8_t>& occupancy, const Vec3& origin, double resolution, const GridDims& dims,
                  const RigidTransform& box_pose, const Vec3& half_extents);

/// Trilinear interpolation between voxel centers. Outside the sampled region
/// the policy applies.
double query_distance(const DistanceField& field, const Vec3& p,
                      OutOfGridPolicy policy = OutOfGridPolicy::Exhaustive);

struct TaggedSphere
{
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  std::string link;
};

/// Spheres tagged by link. Spheres on the same link are never checked
/// against each other, nor are links listed in `exclusions`.
struct SphereSet
{
  std::vector<TaggedSphere> spheres;
  std::vector<std::pair<std::string, std::string>> exclusions;

  void add(const Vec3& center, double radius, const std::string& link);
  void append(const SphereSet& other);
  bool excluded(const std::string& a, const std::string& b) const;
};

struct CollisionWorld
{
  DistanceField field;
  SphereSet robot_static;
  double clearance_margin = 0.0;
  OutOfGridPolicy out_of_grid = OutOfGridPolicy::Exhaustive;
};

struct CollisionReport
{
  bool free = true;
  std::string violation;
};

/// Free iff every dynamic sphere clears the field by radius + margin and no
/// non-excluded dynamic/dynamic or dynamic/static pair is within
/// r1 + r2 + margin. Reports the first violation found.
CollisionReport check_free(const CollisionWorld& world, const SphereSet& dynamic);

}  // namespace regrasp

#endif  // REGRASP_COLLISION_EDT_HPP
