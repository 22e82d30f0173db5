#include "regrasp/collision_edt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regrasp/error.hpp"

namespace regrasp
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared distance transform of a sampled function. Infinite
// samples are left out of the envelope so finite results stay exact integers.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z)
{
  int k = -1;
  for (int q = 0; q < n; ++q)
  {
    if (f[q] == kInf)
      continue;
    const double fq = f[q] + static_cast<double>(q) * q;
    double s = -kInf;
    while (k >= 0)
    {
      const int p = v[k];
      s = (fq - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s > z[k])
        break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0)
  {
    std::fill(d, d + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q)
  {
    while (z[j + 1] < q)
      ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

DistanceField::DistanceField(const Vec3& origin, double resolution, const GridDims& dims,
                             std::vector<double> squared_voxels, bool any_occupied)
  : origin_(origin), resolution_(resolution), dims_(dims), squared_(std::move(squared_voxels)),
    any_occupied_(any_occupied)
{
  distance_.resize(squared_.size());
  const double sentinel_value = sentinel();
  for (std::size_t i = 0; i < squared_.size(); ++i)
    distance_[i] = any_occupied_ ? std::sqrt(squared_[i]) * resolution_ : sentinel_value;
}

double DistanceField::sentinel() const
{
  return resolution_ * std::sqrt(static_cast<double>(dims_[0]) * dims_[0] + static_cast<double>(dims_[1]) * dims_[1] +
                                 static_cast<double>(dims_[2]) * dims_[2]);
}

bool DistanceField::contains(const Vec3& p) const
{
  const Vec3 rel = (p - origin_) / resolution_;
  return rel.x() >= 0.0 && rel.y() >= 0.0 && rel.z() >= 0.0 && rel.x() <= dims_[0] && rel.y() <= dims_[1] &&
         rel.z() <= dims_[2];
}

DistanceField build_edt(std::span<const std::uint8_t> occupancy, const Vec3& origin, double resolution,
                        const GridDims& dims)
{
  if (!(resolution > 0.0))
    throw Error(ErrorCode::InvalidArgument, "EDT resolution must be positive");
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw Error(ErrorCode::InvalidArgument, "EDT dimensions must be positive");
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (occupancy.size() != total)
    throw Error(ErrorCode::DimensionMismatch, "occupancy size does not match grid dimensions");

  std::vector<double> grid(total);
  bool any = false;
  for (std::size_t i = 0; i < total; ++i)
  {
    grid[i] = occupancy[i] ? 0.0 : kInf;
    any = any || occupancy[i];
  }
  if (!any)
    return DistanceField(origin, resolution, dims, std::vector<double>(total, kInf), false);

  const int longest = std::max({dims[0], dims[1], dims[2]});
  std::vector<double> f(longest), d(longest), z(longest + 1);
  std::vector<int> v(longest);
  const std::size_t stride[3] = {1, static_cast<std::size_t>(dims[0]),
                                 static_cast<std::size_t>(dims[0]) * dims[1]};
  for (int axis = 0; axis < 3; ++axis)
  {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    const int n = dims[axis];
    for (int i = 0; i < dims[a1]; ++i)
      for (int j = 0; j < dims[a2]; ++j)
      {
        const std::size_t base = i * stride[a1] + j * stride[a2];
        for (int q = 0; q < n; ++q)
          f[q] = grid[base + q * stride[axis]];
        edt_1d(f.data(), d.data(), n, v, z);
        for (int q = 0; q < n; ++q)
          grid[base + q * stride[axis]] = d[q];
      }
  }
  return DistanceField(origin, resolution, dims, std::move(grid), true);
}

DistanceField build_edt(std::span<const Vec3> occupied_points, const Vec3& origin, double resolution,
                        const GridDims& dims)
{
  if (!(resolution > 0.0))
    throw Error(ErrorCode::InvalidArgument, "EDT resolution must be positive");
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw Error(ErrorCode::InvalidArgument, "EDT dimensions must be positive");
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  for (const Vec3& p : occupied_points)
  {
    const Vec3 rel = (p - origin) / resolution;
    const int x = static_cast<int>(std::floor(rel.x()));
    const int y = static_cast<int>(std::floor(rel.y()));
    const int z = static_cast<int>(std::floor(rel.z()));
    if (x < 0 || y < 0 || z < 0 || x >= dims[0] || y >= dims[1] || z >= dims[2])
      continue;
    occ[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x] = 1;
  }
  return build_edt(occ, origin, resolution, dims);
}

void voxelize_box(std::vector<std::uint8_t>& occupancy, const Vec3& origin, double resolution, const GridDims& dims,
                  const RigidTransform& box_pose, const Vec3& half_extents)
{
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (occupancy.size() != total)
    occupancy.assign(total, 0);
  const RigidTransform to_box = box_pose.inverse();
  // Only scan the voxels overlapping the box's world bounds.
  Aabb world;
  for (int c = 0; c < 8; ++c)
  {
    const Vec3 corner((c & 1 ? 1 : -1) * half_extents.x(), (c & 2 ? 1 : -1) * half_extents.y(),
                      (c & 4 ? 1 : -1) * half_extents.z());
    world.extend(box_pose * corner);
  }
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a)
  {
    lo[a] = std::max(0, static_cast<int>(std::floor((world.min[a] - origin[a]) / resolution)) - 1);
    hi[a] = std::min(dims[a] - 1, static_cast<int>(std::floor((world.max[a] - origin[a]) / resolution)) + 1);
  }
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x)
      {
        const Vec3 c = origin + resolution * Vec3(x + 0.5, y + 0.5, z + 0.5);
        const Vec3 local = to_box * c;
        if ((local.array().abs() <= half_extents.array()).all())
          occupancy[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x] = 1;
      }
}

double query_distance(const DistanceField& field, const Vec3& p, OutOfGridPolicy policy)
{
  const GridDims& dims = field.dims();
  // Continuous coordinates in which voxel centers sit on integers.
  const Vec3 g = (p - field.origin()) / field.resolution() - Vec3::Constant(0.5);
  Vec3 clamped = g;
  bool outside = false;
  for (int a = 0; a < 3; ++a)
  {
    const double hi = static_cast<double>(dims[a] - 1);
    if (g[a] < 0.0 || g[a] > hi)
    {
      outside = true;
      clamped[a] = std::clamp(g[a], 0.0, hi);
    }
  }
  if (outside && policy == OutOfGridPolicy::Conservative)
    return 0.0;

  int i0[3], i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a)
  {
    i0[a] = static_cast<int>(std::floor(clamped[a]));
    i0[a] = std::min(i0[a], std::max(dims[a] - 2, 0));
    i1[a] = std::min(i0[a] + 1, dims[a] - 1);
    t[a] = i1[a] == i0[a] ? 0.0 : clamped[a] - i0[a];
  }
  double value = 0.0;
  for (int c = 0; c < 8; ++c)
  {
    const int x = (c & 1) ? i1[0] : i0[0];
    const int y = (c & 2) ? i1[1] : i0[1];
    const int z = (c & 4) ? i1[2] : i0[2];
    const double w = ((c & 1) ? t[0] : 1.0 - t[0]) * ((c & 2) ? t[1] : 1.0 - t[1]) * ((c & 4) ? t[2] : 1.0 - t[2]);
    if (w != 0.0)
      value += w * field.at(x, y, z);
  }
  if (outside)
    value += (g - clamped).norm() * field.resolution();
  return value;
}

void SphereSet::add(const Vec3& center, double radius, const std::string& link)
{
  if (!(radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
  spheres.push_back({center, radius, link});
}

void SphereSet::append(const SphereSet& other)
{
  spheres.insert(spheres.end(), other.spheres.begin(), other.spheres.end());
  exclusions.insert(exclusions.end(), other.exclusions.begin(), other.exclusions.end());
}

bool SphereSet::excluded(const std::string& a, const std::string& b) const
{
  if (a == b)
    return true;
  for (const auto& [x, y] : exclusions)
    if ((x == a && y == b) || (x == b && y == a))
      return true;
  return false;
}

namespace
{

bool overlap(const TaggedSphere& a, const TaggedSphere& b, double margin)
{
  const double limit = a.radius + b.radius + margin;
  return (a.center - b.center).squaredNorm() <= limit * limit;
}

}  // namespace

CollisionReport check_free(const CollisionWorld& world, const SphereSet& dynamic)
{
  const double m = world.clearance_margin;
  for (const TaggedSphere& s : dynamic.spheres)
  {
    const double d = query_distance(world.field, s.center, world.out_of_grid);
    if (d <= s.radius + m)
      return {false, "sphere on '" + s.link + "' within " + std::to_string(d) + " m of the environment"};
  }
  for (std::size_t i = 0; i < dynamic.spheres.size(); ++i)
  {
    const TaggedSphere& a = dynamic.spheres[i];
    for (std::size_t j = i + 1; j < dynamic.spheres.size(); ++j)
    {
      const TaggedSphere& b = dynamic.spheres[j];
      if (!dynamic.excluded(a.link, b.link) && overlap(a, b, m))
        return {false, "links '" + a.link + "' and '" + b.link + "' collide"};
    }
    for (const TaggedSphere& b : world.robot_static.spheres)
      if (!dynamic.excluded(a.link, b.link) && !world.robot_static.excluded(a.link, b.link) && overlap(a, b, m))
        return {false, "link '" + a.link + "' collides with static body '" + b.link + "'"};
  }
  return {};
}

}  // namespace regrasp
