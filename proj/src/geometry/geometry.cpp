#include "regrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <Eigen/SVD>

#include "regrasp/error.hpp"

namespace regrasp
{

std::string_view to_string(ErrorCode code)
{
  switch (code)
  {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::RefinementRejected: return "RefinementRejected";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InsufficientTrainingData: return "InsufficientTrainingData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoHandoverFound: return "NoHandoverFound";
    case ErrorCode::NoViewPoseFound: return "NoViewPoseFound";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

RigidTransform::RigidTransform(const Eigen::Quaterniond& rotation, const Vec3& translation)
  : rotation_(rotation.normalized()), translation_(translation)
{
  if (rotation_.w() < 0.0)
    rotation_.coeffs() = -rotation_.coeffs();
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
  : RigidTransform(Eigen::Quaterniond(nearest_rotation(rotation)), translation)
{
}

RigidTransform RigidTransform::from_translation(const Vec3& t)
{
  return RigidTransform(Eigen::Quaterniond::Identity(), t);
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis_angle, const Vec3& t)
{
  const double angle = axis_angle.norm();
  if (angle < 1e-300)
    return from_translation(t);
  return RigidTransform(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis_angle / angle)), t);
}

RigidTransform RigidTransform::rotation_about(const Vec3& axis, double angle, const Vec3& pivot)
{
  const Eigen::Quaterniond q(Eigen::AngleAxisd(angle, axis.normalized()));
  return RigidTransform(q, pivot - q * pivot);
}

Vec3 RigidTransform::axis_angle() const
{
  const Eigen::AngleAxisd aa(rotation_);
  return aa.axis() * aa.angle();
}

Eigen::Matrix4d RigidTransform::matrix() const
{
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::angle() const
{
  return 2.0 * std::atan2(rotation_.vec().norm(), std::abs(rotation_.w()));
}

RigidTransform RigidTransform::inverse() const
{
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return RigidTransform(inv, -(inv * translation_));
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const
{
  return RigidTransform(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

PoseError pose_error(const RigidTransform& a, const RigidTransform& b)
{
  return {(a.translation() - b.translation()).norm(), (a.inverse() * b).angle()};
}

Mat3 shortest_arc(const Vec3& from, const Vec3& to)
{
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

Mat3 nearest_rotation(const Mat3& m)
{
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
  : vertices_(std::move(vertices)), faces_(std::move(faces))
{
  const int n = static_cast<int>(vertices_.size());
  for (const Face& f : faces_)
  {
    for (int idx : f)
      if (idx < 0 || idx >= n)
        throw Error(ErrorCode::InvalidArgument, "face index out of range");
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw Error(ErrorCode::InvalidArgument, "degenerate face repeats a vertex");
  }
}

TriangleMesh TriangleMesh::from_raw(std::vector<Vec3> vertices, std::vector<Face> faces,
                                    std::size_t* dropped)
{
  const int n = static_cast<int>(vertices.size());
  std::vector<Face> kept;
  kept.reserve(faces.size());
  std::size_t removed = 0;
  for (const Face& f : faces)
  {
    for (int idx : f)
      if (idx < 0 || idx >= n)
        throw Error(ErrorCode::InvalidArgument, "face index out of range");
    const bool repeated = f[0] == f[1] || f[1] == f[2] || f[0] == f[2];
    const bool zero_area =
      !repeated &&
      (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).squaredNorm() == 0.0;
    if (repeated || zero_area)
      ++removed;
    else
      kept.push_back(f);
  }
  if (dropped)
    *dropped = removed;
  return TriangleMesh(std::move(vertices), std::move(kept));
}

TriangleMesh TriangleMesh::with_vertices(std::vector<Vec3> vertices) const
{
  if (vertices.size() != vertices_.size())
    throw Error(ErrorCode::DimensionMismatch, "vertex count differs from topology");
  TriangleMesh out;
  out.vertices_ = std::move(vertices);
  out.faces_ = faces_;
  return out;
}

Vec3 TriangleMesh::face_normal(std::size_t f) const
{
  const Face& t = faces_[f];
  const Vec3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

double TriangleMesh::face_area(std::size_t f) const
{
  const Face& t = faces_[f];
  return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
}

double TriangleMesh::surface_area() const
{
  double a = 0.0;
  for (std::size_t f = 0; f < faces_.size(); ++f)
    a += face_area(f);
  return a;
}

Aabb bounds(std::span<const Vec3> points)
{
  Aabb box;
  for (const Vec3& p : points)
    box.extend(p);
  return box;
}

PointCloud transform_points(const PointCloud& cloud, const RigidTransform& t)
{
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points)
    out.points.push_back(t * p);
  out.normals.reserve(cloud.normals.size());
  for (const Vec3& n : cloud.normals)
    out.normals.push_back(t.rotate(n));
  return out;
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const RigidTransform& t)
{
  std::vector<Vec3> v;
  v.reserve(mesh.vertex_count());
  for (const Vec3& p : mesh.vertices())
    v.push_back(t * p);
  return mesh.with_vertices(std::move(v));
}

TriangleMesh subdivide_mesh(const TriangleMesh& mesh, int levels)
{
  if (levels < 0)
    throw Error(ErrorCode::InvalidArgument, "subdivision levels must be >= 0");
  if (mesh.empty())
    return mesh;

  std::vector<Vec3> vertices = mesh.vertices();
  std::vector<Face> faces = mesh.faces();
  for (int level = 0; level < levels; ++level)
  {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end())
        return it->second;
      const int idx = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (vertices[a] + vertices[b]));
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces)
    {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({ab, f[1], bc});
      next.push_back({ca, bc, f[2]});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

namespace
{

struct CellKey
{
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash
{
  std::size_t operator()(const CellKey& k) const
  {
    std::size_t h = std::hash<long long>{}(k.x);
    h = h * 1000003u ^ std::hash<long long>{}(k.y);
    h = h * 1000003u ^ std::hash<long long>{}(k.z);
    return h;
  }
};

}  // namespace

TriangleMesh cluster_decimate(const TriangleMesh& mesh, double cell_size, bool use_quadrics)
{
  if (!(cell_size > 0.0))
    throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  const auto& verts = mesh.vertices();
  if (verts.empty())
    return mesh;

  const Aabb box = bounds(verts);
  std::unordered_map<CellKey, int, CellKeyHash> cell_of;
  std::vector<int> remap(verts.size());
  std::vector<Vec3> sums;
  std::vector<int> counts;
  for (std::size_t i = 0; i < verts.size(); ++i)
  {
    const Vec3 rel = (verts[i] - box.min) / cell_size;
    const CellKey key{static_cast<long long>(std::floor(rel.x())),
                      static_cast<long long>(std::floor(rel.y())),
                      static_cast<long long>(std::floor(rel.z()))};
    auto [it, inserted] = cell_of.emplace(key, static_cast<int>(sums.size()));
    if (inserted)
    {
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
    }
    remap[i] = it->second;
    sums[it->second] += verts[i];
    counts[it->second] += 1;
  }

  std::vector<Vec3> out_vertices(sums.size());
  for (std::size_t c = 0; c < sums.size(); ++c)
    out_vertices[c] = counts[c] == 1 ? sums[c] : Vec3(sums[c] / counts[c]);

  if (use_quadrics)
  {
    std::vector<Eigen::Matrix4d> q(sums.size(), Eigen::Matrix4d::Zero());
    for (std::size_t f = 0; f < mesh.face_count(); ++f)
    {
      const Vec3 n = mesh.face_normal(f);
      const Eigen::Vector4d plane(n.x(), n.y(), n.z(), -n.dot(verts[mesh.faces()[f][0]]));
      const Eigen::Matrix4d k = mesh.face_area(f) * plane * plane.transpose();
      for (int idx : mesh.faces()[f])
        q[remap[idx]] += k;
    }
    for (std::size_t c = 0; c < sums.size(); ++c)
    {
      if (counts[c] == 1)
        continue;
      const Mat3 a = q[c].topLeftCorner<3, 3>();
      const Vec3 b = -q[c].topRightCorner<3, 1>();
      Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double smax = svd.singularValues()(0);
      if (smax <= 0.0 || svd.singularValues()(2) < 1e-6 * smax)
        continue;
      const Vec3 x = svd.solve(b);
      if (((x - out_vertices[c]).array().abs() <= cell_size).all())
        out_vertices[c] = x;
    }
  }

  std::vector<Face> out_faces;
  out_faces.reserve(mesh.face_count());
  for (const Face& f : mesh.faces())
  {
    const Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] != g[1] && g[1] != g[2] && g[0] != g[2])
      out_faces.push_back(g);
  }
  return TriangleMesh(std::move(out_vertices), std::move(out_faces));
}

double default_cluster_cell(const TriangleMesh& mesh)
{
  return 0.01 * bounds(mesh.vertices()).diagonal();
}

namespace
{

bool contains(const Sphere& s, const Vec3& p)
{
  return s.radius >= 0.0 && (p - s.center).norm() <= s.radius * (1.0 + 1e-12) + 1e-15;
}

Sphere sphere_from_two(const Vec3& a, const Vec3& b)
{
  return {0.5 * (a + b), 0.5 * (a - b).norm()};
}

Sphere sphere_from_three(const Vec3& a, const Vec3& b, const Vec3& c)
{
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 n = ab.cross(ac);
  const double nn = n.squaredNorm();
  if (nn < 1e-24 * ab.squaredNorm() * ac.squaredNorm())
  {
    // Collinear: the farthest pair spans the others.
    Sphere s = sphere_from_two(a, b);
    for (const Sphere& t : {sphere_from_two(a, c), sphere_from_two(b, c)})
      if (t.radius > s.radius)
        s = t;
    return s;
  }
  const Vec3 offset = (ac.squaredNorm() * n.cross(ab) + ab.squaredNorm() * ac.cross(n)) / (2.0 * nn);
  return {a + offset, offset.norm()};
}

Sphere sphere_from_four(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d)
{
  Mat3 m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = (d - a).transpose();
  const double det = m.determinant();
  const double scale = m.row(0).norm() * m.row(1).norm() * m.row(2).norm();
  if (std::abs(det) < 1e-12 * scale)
  {
    // Coplanar support: smallest sphere through three of them containing all four.
    Sphere best{Vec3::Zero(), -1.0};
    const std::array<Vec3, 4> p{a, b, c, d};
    for (int skip = 0; skip < 4; ++skip)
    {
      std::array<Vec3, 3> t;
      for (int i = 0, k = 0; i < 4; ++i)
        if (i != skip)
          t[k++] = p[i];
      const Sphere s = sphere_from_three(t[0], t[1], t[2]);
      if (contains(s, p[skip]) && (best.radius < 0.0 || s.radius < best.radius))
        best = s;
    }
    return best;
  }
  const Vec3 rhs(0.5 * (b - a).squaredNorm(), 0.5 * (c - a).squaredNorm(), 0.5 * (d - a).squaredNorm());
  const Vec3 offset = m.partialPivLu().solve(rhs);
  return {a + offset, offset.norm()};
}

Sphere sphere_from_support(const std::vector<Vec3>& r)
{
  switch (r.size())
  {
    case 0: return {Vec3::Zero(), -1.0};
    case 1: return {r[0], 0.0};
    case 2: return sphere_from_two(r[0], r[1]);
    case 3: return sphere_from_three(r[0], r[1], r[2]);
    default: return sphere_from_four(r[0], r[1], r[2], r[3]);
  }
}

Sphere welzl(const std::vector<Vec3>& p, std::size_t end, std::vector<Vec3>& support)
{
  Sphere s = sphere_from_support(support);
  if (support.size() == 4)
    return s;
  for (std::size_t i = 0; i < end; ++i)
  {
    if (contains(s, p[i]))
      continue;
    support.push_back(p[i]);
    s = welzl(p, i, support);
    support.pop_back();
  }
  return s;
}

}  // namespace

Sphere bounding_sphere(std::span<const Vec3> points)
{
  if (points.empty())
    throw Error(ErrorCode::EmptyInput, "bounding sphere of an empty point set");
  std::vector<Vec3> p(points.begin(), points.end());
  std::mt19937_64 rng(0x5eedu);
  std::shuffle(p.begin(), p.end(), rng);
  std::vector<Vec3> support;
  Sphere s = welzl(p, p.size(), support);
  double r = s.radius;
  for (const Vec3& q : points)
    r = std::max(r, (q - s.center).norm());
  s.radius = r * (1.0 + 1e-9);
  return s;
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::mt19937_64& rng)
{
  PointCloud cloud;
  if (mesh.empty() || count == 0)
    return cloud;
  std::vector<double> cumulative(mesh.face_count());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.face_count(); ++f)
  {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  cloud.points.reserve(count);
  cloud.normals.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
  {
    const double pick = uni(rng) * total;
    const std::size_t f = std::min<std::size_t>(
      std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(), mesh.face_count() - 1);
    double u = uni(rng);
    double v = uni(rng);
    if (u + v > 1.0)
    {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Face& t = mesh.faces()[f];
    const auto& vs = mesh.vertices();
    cloud.points.push_back(vs[t[0]] + u * (vs[t[1]] - vs[t[0]]) + v * (vs[t[2]] - vs[t[0]]));
    cloud.normals.push_back(mesh.face_normal(f));
  }
  return cloud;
}

}  // namespace regrasp
