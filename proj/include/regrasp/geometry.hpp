#ifndef REGRASP_GEOMETRY_HPP
#define REGRASP_GEOMETRY_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace regrasp
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// SE(3) pose stored as a unit quaternion and a translation in meters.
/// Used for object poses, grasps, camera poses and end-effector targets.
class RigidTransform
{
public:
  RigidTransform() : rotation_(Eigen::Quaterniond::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Eigen::Quaterniond& rotation, const Vec3& translation);
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t);
  /// Rotation given as axis * angle (radians).
  static RigidTransform from_axis_angle(const Vec3& axis_angle, const Vec3& t = Vec3::Zero());
  /// Rotation by `angle` about `axis` passing through `pivot`.
  static RigidTransform rotation_about(const Vec3& axis, double angle, const Vec3& pivot);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  const Vec3& translation() const { return translation_; }
  Vec3 axis_angle() const;
  Eigen::Matrix4d matrix() const;

  /// Rotation angle in [0, pi].
  double angle() const;

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& other) const;
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

private:
  Eigen::Quaterniond rotation_;
  Vec3 translation_;
};

/// Translation distance and rotation angle between two poses.
struct PoseError
{
  double translation = 0.0;
  double rotation = 0.0;
};

PoseError pose_error(const RigidTransform& a, const RigidTransform& b);

/// Rotation taking unit vector `from` onto unit vector `to` along the shortest arc.
Mat3 shortest_arc(const Vec3& from, const Vec3& to);

/// Nearest rotation matrix (polar decomposition via SVD).
Mat3 nearest_rotation(const Mat3& m);

struct PointCloud
{
  std::vector<Vec3> points;
  /// Empty or one unit normal per point.
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

using Face = std::array<int, 3>;

/// Indexed triangle mesh. Construction validates that indices are in range
/// and that no face repeats a vertex.
class TriangleMesh
{
public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  /// Builds a mesh from unchecked data, dropping faces that repeat an index or
  /// have zero area. Out-of-range indices still throw.
  static TriangleMesh from_raw(std::vector<Vec3> vertices, std::vector<Face> faces,
                               std::size_t* dropped = nullptr);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }

  /// Same topology, new vertex positions. Throws when the count differs.
  TriangleMesh with_vertices(std::vector<Vec3> vertices) const;

  Vec3 face_normal(std::size_t f) const;
  double face_area(std::size_t f) const;
  double surface_area() const;

private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
};

struct Aabb
{
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p)
  {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return valid() ? (max - min).norm() : 0.0; }
};

Aabb bounds(std::span<const Vec3> points);

PointCloud transform_points(const PointCloud& cloud, const RigidTransform& t);
TriangleMesh transform_mesh(const TriangleMesh& mesh, const RigidTransform& t);

/// Splits every triangle into four via edge midpoints, `levels` times.
/// Shared edges share their midpoint vertex.
TriangleMesh subdivide_mesh(const TriangleMesh& mesh, int levels);

/// Vertex clustering on an axis-aligned grid anchored at the mesh's bounding
/// box minimum. Each occupied cell keeps one vertex at the centroid of its
/// members (or, with `use_quadrics`, the minimizer of the summed face
/// quadrics of the members, falling back to the centroid when singular).
/// Faces that collapse are dropped; survivors keep their orientation.
TriangleMesh cluster_decimate(const TriangleMesh& mesh, double cell_size, bool use_quadrics = false);

/// Grid cell size used when none is configured: 1% of the bounding diagonal.
double default_cluster_cell(const TriangleMesh& mesh);

struct Sphere
{
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Minimal enclosing sphere by Welzl's move-to-front algorithm. The result is
/// exact up to floating point; a relative slack of 1e-9 is added to the radius
/// so that every input point tests as contained. Throws EmptyInput.
Sphere bounding_sphere(std::span<const Vec3> points);

/// Area-weighted uniform samples on the mesh surface with face normals.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::mt19937_64& rng);

}  // namespace regrasp

#endif  // REGRASP_GEOMETRY_HPP
