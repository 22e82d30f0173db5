#include "regrasp/closest_point.hpp"

#include <algorithm>
#include <numeric>

#include "regrasp/error.hpp"

namespace regrasp
{

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0)
    return {a, Vec3(1, 0, 0)};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3)
    return {b, Vec3(0, 1, 0)};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
  {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, Vec3(1 - v, v, 0)};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6)
    return {c, Vec3(0, 0, 1)};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
  {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, Vec3(1 - w, 0, w)};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
  {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), Vec3(0, 1 - w, w)};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, Vec3(1 - v - w, v, w)};
}

MeshBvh::MeshBvh(const TriangleMesh& mesh) : mesh_(mesh)
{
  if (mesh_.empty())
    throw Error(ErrorCode::EmptyInput, "nearest-surface structure over an empty mesh");
  const auto& v = mesh_.vertices();
  centroids_.reserve(mesh_.face_count());
  for (const Face& f : mesh_.faces())
    centroids_.push_back((v[f[0]] + v[f[1]] + v[f[2]]) / 3.0);
  order_.resize(mesh_.face_count());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * mesh_.face_count());
  build(0, static_cast<int>(order_.size()));
}

int MeshBvh::build(int begin, int end)
{
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroid_box;
  const auto& v = mesh_.vertices();
  for (int i = begin; i < end; ++i)
  {
    const Face& f = mesh_.faces()[order_[i]];
    for (int k : f)
      box.extend(v[k]);
    centroid_box.extend(centroids_[order_[i]]);
  }
  nodes_[index].box = box;
  nodes_[index].begin = begin;
  nodes_[index].end = end;
  if (end - begin <= 4)
    return index;

  int axis = 0;
  (centroid_box.max - centroid_box.min).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

namespace
{

double box_squared_distance(const Aabb& box, const Vec3& p)
{
  const Vec3 d = (box.min - p).cwiseMax(p - box.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}

}  // namespace

SurfaceHit MeshBvh::closest(const Vec3& p, double max_distance) const
{
  SurfaceHit best;
  best.squared_distance = max_distance * max_distance;
  const auto& v = mesh_.vertices();

  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0)
  {
    const Node& node = nodes_[stack[--top]];
    if (box_squared_distance(node.box, p) > best.squared_distance)
      continue;
    if (node.left < 0)
    {
      for (int i = node.begin; i < node.end; ++i)
      {
        const int fi = order_[i];
        const Face& f = mesh_.faces()[fi];
        const TrianglePoint tp = closest_point_on_triangle(p, v[f[0]], v[f[1]], v[f[2]]);
        const double d2 = (tp.point - p).squaredNorm();
        if (d2 < best.squared_distance || (d2 == best.squared_distance && best.face >= 0 && fi < best.face))
        {
          best.face = fi;
          best.point = tp.point;
          best.barycentric = tp.barycentric;
          best.squared_distance = d2;
        }
      }
      continue;
    }
    const double dl = box_squared_distance(nodes_[node.left].box, p);
    const double dr = box_squared_distance(nodes_[node.right].box, p);
    // Visit the nearer child first.
    if (dl <= dr)
    {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
    else
    {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  if (best.face < 0)
    best.squared_distance = std::numeric_limits<double>::infinity();
  return best;
}

}  // namespace regrasp
