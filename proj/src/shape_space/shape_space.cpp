#include "regrasp/shape_space.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "regrasp/error.hpp"

namespace regrasp
{

Eigen::VectorXd ShapeSpaceModel::sigmas() const
{
  Eigen::VectorXd s(variances.size());
  const double top = variances.size() > 0 ? variances.maxCoeff() : 0.0;
  const double floor = std::max(1e-10 * top, 1e-14);
  for (Eigen::Index i = 0; i < variances.size(); ++i)
    s[i] = std::sqrt(std::max(variances[i], floor));
  return s;
}

ShapeSpaceModel train_from_fields(const TriangleMesh& canonical, const std::vector<DeformationField>& fields,
                                  const TrainParams& params)
{
  if (fields.size() < 2)
    throw Error(ErrorCode::InsufficientTrainingData, "a shape space needs at least two training instances");
  const auto k = static_cast<Eigen::Index>(fields.size());
  const auto rows = 3 * static_cast<Eigen::Index>(canonical.vertex_count());
  Eigen::MatrixXd data(rows, k);
  for (Eigen::Index c = 0; c < k; ++c)
  {
    const DeformationField& f = fields[static_cast<std::size_t>(c)];
    if (f.size() != canonical.vertex_count())
      throw Error(ErrorCode::DimensionMismatch, "deformation field does not match the canonical vertex count");
    data.col(c) = f.stacked();
  }
  if (!data.allFinite())
    throw Error(ErrorCode::NonFinite, "training field contains non-finite values");

  ShapeSpaceModel model;
  model.canonical = canonical;
  model.mean_field = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - model.mean_field;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::VectorXd all_var = svd.singularValues().array().square() / static_cast<double>(k - 1);

  std::size_t l = params.latent_dim;
  if (l > fields.size())
    throw Error(ErrorCode::InsufficientTrainingData, "latent dimension exceeds the number of training instances");
  if (l == 0)
  {
    const double total = all_var.sum();
    double acc = 0.0;
    l = 1;
    for (Eigen::Index i = 0; i < all_var.size(); ++i)
    {
      acc += all_var[i];
      l = static_cast<std::size_t>(i + 1);
      if (total <= 0.0 || acc >= params.variance_target * total)
        break;
    }
  }
  const auto L = static_cast<Eigen::Index>(l);
  model.basis = svd.matrixU().leftCols(L);
  // Columns belonging to vanishing singular values are still orthonormalized.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(model.basis);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, L);
  for (Eigen::Index c = 0; c < L; ++c)
    model.basis.col(c) = q.col(c) * (q.col(c).dot(model.basis.col(c)) < 0.0 ? -1.0 : 1.0);
  model.variances = all_var.head(L);
  model.training_latents = centered.transpose() * model.basis;
  return model;
}

ShapeSpaceModel train_shape_space(const TriangleMesh& canonical, const std::vector<TriangleMesh>& training_meshes,
                                  const TrainParams& params)
{
  if (training_meshes.size() < 2)
    throw Error(ErrorCode::InsufficientTrainingData, "a shape space needs at least two training meshes");
  if (params.latent_dim > training_meshes.size())
    throw Error(ErrorCode::InsufficientTrainingData, "latent dimension exceeds the number of training meshes");
  PointCloud canon{canonical.vertices(), {}};
  std::vector<DeformationField> fields;
  std::optional<CpdKernel> kernel;
  if (params.cpd.low_rank > 0 && params.cpd.low_rank < canon.size())
    kernel = cpd_kernel(canon, params.cpd);
  for (const TriangleMesh& mesh : training_meshes)
  {
    PointCloud inst;
    const std::size_t n = mesh.vertex_count();
    const std::size_t stride = std::max<std::size_t>(1, (n + params.max_instance_points - 1) / params.max_instance_points);
    for (std::size_t i = 0; i < n; i += stride)
      inst.points.push_back(mesh.vertices()[i]);
    fields.push_back(kernel ? cpd_nonrigid(canon, inst, params.cpd, *kernel) : cpd_nonrigid(canon, inst, params.cpd));
  }
  return train_from_fields(canonical, fields, params);
}

DeformationField field_from_latent(const ShapeSpaceModel& model, const Eigen::VectorXd& z)
{
  if (z.size() != model.basis.cols())
    throw Error(ErrorCode::DimensionMismatch, "latent vector has the wrong dimension");
  return DeformationField::from_stacked(model.mean_field + model.basis * z);
}

Eigen::VectorXd encode_field(const ShapeSpaceModel& model, const DeformationField& field)
{
  if (field.size() != model.vertex_count())
    throw Error(ErrorCode::DimensionMismatch, "field does not match the canonical vertex count");
  return model.basis.transpose() * (field.stacked() - model.mean_field);
}

namespace
{

std::vector<Vec3> deformed_vertices(const ShapeSpaceModel& model, const Eigen::VectorXd& z)
{
  const Eigen::VectorXd d = model.mean_field + model.basis * z;
  std::vector<Vec3> v(model.canonical.vertices());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] += d.segment<3>(3 * static_cast<Eigen::Index>(i));
  return v;
}

}  // namespace

TriangleMesh decode(const ShapeSpaceModel& model, const LatentDescriptor& latent)
{
  if (latent.z.size() != model.basis.cols())
    throw Error(ErrorCode::DimensionMismatch, "latent vector has the wrong dimension");
  std::vector<Vec3> v = deformed_vertices(model, latent.z);
  for (Vec3& p : v)
    p = latent.local_rigid * p;
  return model.canonical.with_vertices(std::move(v));
}

namespace
{

Mat3 skew(const Vec3& v)
{
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Mat3 exp_so3(const Vec3& w)
{
  const double angle = w.norm();
  if (angle < 1e-15)
    return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

struct Linearization
{
  double energy = 0.0;
  Eigen::VectorXd half_gradient;
  Eigen::MatrixXd normal;
};

// Data term and prior with fixed correspondences; optionally the Gauss-Newton system.
Linearization linearize(const ShapeSpaceModel& model, const std::vector<Vec3>& points,
                        const std::vector<SurfaceCorrespondence>& corr, const Eigen::VectorXd& z, const Mat3& r,
                        const Vec3& t, const Vec3& pivot, const InferParams& params, bool want_system)
{
  const auto L = model.basis.cols();
  const Eigen::Index n = L + 6;
  const Eigen::VectorXd sig = model.sigmas();
  const double ws = 1.0 / (params.point_sigma * params.point_sigma);
  const std::vector<Vec3> verts = deformed_vertices(model, z);
  const auto& faces = model.canonical.faces();

  Linearization lin;
  lin.half_gradient = Eigen::VectorXd::Zero(n);
  if (want_system)
    lin.normal = Eigen::MatrixXd::Zero(n, n);
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, n);
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    const SurfaceCorrespondence& c = corr[i];
    if (c.face < 0)
      continue;
    const Face& f = faces[static_cast<std::size_t>(c.face)];
    const Vec3 q = c.barycentric[0] * verts[f[0]] + c.barycentric[1] * verts[f[1]] + c.barycentric[2] * verts[f[2]];
    const Vec3 ru = r * (q - pivot);
    const Vec3 res = ru + pivot + t - points[i];
    lin.energy += ws * res.squaredNorm();
    jac.leftCols(L) = r * (c.barycentric[0] * model.basis.middleRows(3 * f[0], 3) +
                           c.barycentric[1] * model.basis.middleRows(3 * f[1], 3) +
                           c.barycentric[2] * model.basis.middleRows(3 * f[2], 3));
    jac.middleCols(L, 3) = Mat3::Identity();
    jac.rightCols(3) = -skew(ru);
    lin.half_gradient.noalias() += ws * jac.transpose() * res;
    if (want_system)
      lin.normal.noalias() += ws * jac.transpose() * jac;
  }
  for (Eigen::Index l = 0; l < L; ++l)
  {
    const double inv = params.latent_reg_weight / (sig[l] * sig[l]);
    lin.energy += inv * z[l] * z[l];
    lin.half_gradient[l] += inv * z[l];
    if (want_system)
      lin.normal(l, l) += inv;
  }
  return lin;
}

RigidTransform to_local_rigid(const Mat3& r, const Vec3& t, const Vec3& pivot)
{
  return RigidTransform(r, pivot + t - r * pivot);
}

}  // namespace

RegistrationEnergy registration_energy(const ShapeSpaceModel& model, const std::vector<Vec3>& points,
                                       const std::vector<SurfaceCorrespondence>& correspondences,
                                       const Eigen::VectorXd& z, const Mat3& rotation, const Vec3& translation,
                                       const Vec3& pivot, const InferParams& params)
{
  if (correspondences.size() != points.size())
    throw Error(ErrorCode::DimensionMismatch, "one correspondence per point is required");
  if (z.size() != model.basis.cols())
    throw Error(ErrorCode::DimensionMismatch, "latent vector has the wrong dimension");
  const Linearization lin = linearize(model, points, correspondences, z, rotation, translation, pivot, params, false);
  return {lin.energy, 2.0 * lin.half_gradient};
}

RegistrationResult infer(const ShapeSpaceModel& model, const PointCloud& observed, const RigidTransform& init_pose,
                         const InferParams& params)
{
  if (observed.empty())
    throw Error(ErrorCode::EmptyCloud, "observed cloud is empty");
  if (model.canonical.empty())
    throw Error(ErrorCode::EmptyInput, "shape space has no canonical mesh");
  if (!(params.point_sigma > 0.0) || !(params.latent_reg_weight >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "invalid inference parameters");

  // Work in the model frame.
  const RigidTransform to_model = init_pose.inverse();
  std::vector<Vec3> pts;
  const std::size_t stride =
      std::max<std::size_t>(1, (observed.size() + params.max_points - 1) / std::max<std::size_t>(params.max_points, 1));
  for (std::size_t i = 0; i < observed.size(); i += stride)
  {
    if (!observed.points[i].allFinite())
      throw Error(ErrorCode::NonFinite, "observed cloud contains non-finite points");
    pts.push_back(to_model * observed.points[i]);
  }

  const auto L = model.basis.cols();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L);
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Vec3 pivot = Vec3::Zero();
  for (const Vec3& v : deformed_vertices(model, z))
    pivot += v;
  pivot /= static_cast<double>(model.vertex_count());

  std::vector<SurfaceCorrespondence> corr(pts.size());
  auto closest_energy = [&](const Eigen::VectorXd& zz, const Mat3& rr, const Vec3& tt, bool store) {
    const TriangleMesh mesh = decode(model, {zz, to_local_rigid(rr, tt, pivot)});
    const MeshBvh bvh(mesh);
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
      const SurfaceHit hit = bvh.closest(pts[i]);
      sum += hit.squared_distance;
      if (store)
        corr[i] = {hit.face, hit.barycentric};
    }
    return sum;
  };

  RegistrationResult result;
  result.frame = init_pose;
  double data_sq = closest_energy(z, r, t, true);
  const Eigen::VectorXd sig = model.sigmas();
  auto prior = [&](const Eigen::VectorXd& zz) {
    return params.latent_reg_weight * (zz.array() / sig.array()).square().sum();
  };
  const double ws = 1.0 / (params.point_sigma * params.point_sigma);
  double energy = ws * data_sq + prior(z);
  result.energy_history.push_back(energy);

  double mu = 1e-3;
  for (int iter = 0; iter < params.max_iterations; ++iter)
  {
    const Linearization lin = linearize(model, pts, corr, z, r, t, pivot, params, true);
    Eigen::MatrixXd h = lin.normal;
    if (!params.optimize_rigid)
    {
      h.bottomRightCorner(6, 6) = Eigen::MatrixXd::Identity(6, 6);
      h.block(0, L, L, 6).setZero();
      h.block(L, 0, 6, L).setZero();
    }
    Eigen::VectorXd grad = lin.half_gradient;
    if (!params.optimize_rigid)
      grad.tail(6).setZero();

    // Damped step with Armijo backtracking on the fixed-correspondence energy.
    bool accepted = false;
    Eigen::VectorXd cand_z;
    Mat3 cand_r;
    Vec3 cand_t;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt)
    {
      Eigen::MatrixXd damped = h;
      damped.diagonal() += mu * h.diagonal().cwiseMax(1e-9);
      const Eigen::VectorXd step = -damped.ldlt().solve(grad);
      const double slope = grad.dot(step);
      if (!step.allFinite() || slope >= 0.0)
      {
        mu *= 10.0;
        continue;
      }
      for (double alpha = 1.0; alpha > 1e-4; alpha *= 0.5)
      {
        cand_z = z + alpha * step.head(L);
        cand_t = t + alpha * step.segment<3>(L);
        cand_r = exp_so3(alpha * step.tail<3>()) * r;
        const double e = linearize(model, pts, corr, cand_z, cand_r, cand_t, pivot, params, false).energy;
        if (e <= lin.energy + 1e-4 * 2.0 * alpha * slope)
        {
          accepted = true;
          break;
        }
      }
      if (!accepted)
        mu *= 10.0;
    }
    if (!accepted)
    {
      result.converged = true;
      break;
    }
    mu = std::max(mu * 0.3, 1e-6);

    const std::vector<SurfaceCorrespondence> previous_corr = corr;
    const double cand_sq = closest_energy(cand_z, cand_r, cand_t, true);
    const double next = ws * cand_sq + prior(cand_z);
    if (!std::isfinite(next))
      throw Error(ErrorCode::NonFinite, "shape inference diverged");
    if (next > energy)
    {
      // Only rounding can get here; keep the last accepted iterate.
      corr = previous_corr;
      result.converged = true;
      break;
    }
    z = cand_z;
    r = cand_r;
    t = cand_t;
    data_sq = cand_sq;
    result.iterations = iter + 1;
    result.energy_history.push_back(next);
    const double drop = energy - next;
    energy = next;
    if (drop <= params.tolerance * std::max(energy, 1e-12))
    {
      result.converged = true;
      break;
    }
  }

  result.latent = {z, to_local_rigid(r, t, pivot)};
  result.deformed_mesh = decode(model, result.latent);
  result.fitness_rms = std::sqrt(data_sq / static_cast<double>(pts.size()));
  return result;
}

Vec3 interpolate_field(const std::vector<Vec3>& sites, const std::vector<Vec3>& displacements, const Vec3& x,
                       double kernel_width)
{
  if (sites.size() != displacements.size() || sites.empty())
    throw Error(ErrorCode::DimensionMismatch, "field sites and displacements differ in size");
  const double inv = 1.0 / (2.0 * kernel_width * kernel_width);
  double wsum = 0.0;
  Vec3 xm = Vec3::Zero();
  Vec3 dm = Vec3::Zero();
  std::vector<double> w(sites.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites.size(); ++i)
    max_log = std::max(max_log, -(sites[i] - x).squaredNorm() * inv);
  for (std::size_t i = 0; i < sites.size(); ++i)
  {
    w[i] = std::exp(-(sites[i] - x).squaredNorm() * inv - max_log);
    wsum += w[i];
    xm += w[i] * sites[i];
    dm += w[i] * displacements[i];
  }
  xm /= wsum;
  dm /= wsum;
  Mat3 c = Mat3::Zero();
  Mat3 s = Mat3::Zero();
  for (std::size_t i = 0; i < sites.size(); ++i)
  {
    const Vec3 dx = sites[i] - xm;
    c += w[i] * dx * dx.transpose();
    s += w[i] * (displacements[i] - dm) * dx.transpose();
  }
  // Ridge keeps the fit defined for flat or collinear neighbourhoods.
  c.diagonal().array() += 1e-12 * (c.trace() + 1e-30);
  const Mat3 a = s * c.inverse();
  return dm + a * (x - xm);
}

RigidTransform warp_pose(const ShapeSpaceModel& model, const LatentDescriptor& latent,
                         const RigidTransform& pose_on_canonical, const WarpParams& params)
{
  const DeformationField field = field_from_latent(model, latent.z);
  const std::vector<Vec3>& sites = model.canonical.vertices();
  const double h = params.kernel_fraction * bounds(sites).diagonal();
  const double delta = params.triad_offset;
  const Vec3 o = pose_on_canonical.translation();
  const Vec3 o2 = o + interpolate_field(sites, field.displacements, o, h);
  const Mat3 r = pose_on_canonical.rotation_matrix();
  Mat3 axes;
  for (int k = 0; k < 3; ++k)
  {
    const Vec3 p = o + delta * r.col(k);
    axes.col(k) = (p + interpolate_field(sites, field.displacements, p, h) - o2) / delta;
  }
  return latent.local_rigid * RigidTransform(nearest_rotation(axes), o2);
}

RigidTransform warp_pose(const ShapeSpaceModel& model, const RegistrationResult& result,
                         const RigidTransform& pose_on_canonical, const WarpParams& params)
{
  return warp_pose(model, result.latent, pose_on_canonical, params);
}

}  // namespace regrasp
