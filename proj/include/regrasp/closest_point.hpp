#ifndef REGRASP_CLOSEST_POINT_HPP
#define REGRASP_CLOSEST_POINT_HPP

#include <limits>
#include <vector>

#include "regrasp/geometry.hpp"

namespace regrasp
{

/// Closest point on a triangle with its barycentric coordinates (Ericson,
/// Real-Time Collision Detection, 5.1.5).
struct TrianglePoint
{
  Vec3 point;
  Vec3 barycentric;
};

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct SurfaceHit
{
  int face = -1;
  Vec3 point = Vec3::Zero();
  Vec3 barycentric = Vec3::Zero();
  double squared_distance = std::numeric_limits<double>::infinity();

  bool valid() const { return face >= 0; }
};

/// Bounding-volume hierarchy over mesh faces for nearest-surface queries.
/// Holds a copy of the geometry; immutable once built.
class MeshBvh
{
public:
  explicit MeshBvh(const TriangleMesh& mesh);

  /// Nearest surface point; ignores faces farther than `max_distance`.
  SurfaceHit closest(const Vec3& p, double max_distance = std::numeric_limits<double>::infinity()) const;

  const TriangleMesh& mesh() const { return mesh_; }

private:
  struct Node
  {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build(int begin, int end);

  TriangleMesh mesh_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  std::vector<Vec3> centroids_;
};

}  // namespace regrasp

#endif  // REGRASP_CLOSEST_POINT_HPP
