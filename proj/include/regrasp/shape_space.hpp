#ifndef REGRASP_SHAPE_SPACE_HPP
#define REGRASP_SHAPE_SPACE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "regrasp/closest_point.hpp"
#include "regrasp/geometry.hpp"

namespace regrasp
{

/// One displacement (m) per canonical vertex.
struct DeformationField
{
  std::vector<Vec3> displacements;

  std::size_t size() const { return displacements.size(); }
  Eigen::VectorXd stacked() const;
  static DeformationField from_stacked(const Eigen::VectorXd& v);
};

struct CpdParams
{
  double beta = 2.0;     ///< Gaussian kernel width in normalized units
  double lambda = 3.0;   ///< smoothness weight
  int max_em_iterations = 150;
  double tolerance = 1e-6;  ///< relative change of the variance that ends EM
  double outlier_weight = 0.1;
  /// Kernel eigenpairs kept for the M-step (low-rank solve); 0 solves exactly.
  std::size_t low_rank = 0;
};

/// Leading eigenpairs of the CPD kernel matrix of a (normalized) point set.
/// Depends only on the canonical points, so training computes it once.
struct CpdKernel
{
  Eigen::MatrixXd vectors;  ///< M x k
  Eigen::VectorXd values;   ///< k, descending
};
/// Leading `params.low_rank` eigenpairs (all when 0); eigenvalues at
/// round-off level relative to the largest are dropped, so k may be smaller.
CpdKernel cpd_kernel(const PointCloud& canonical_points, const CpdParams& params);

/// Coherent Point Drift, non-rigid variant: moves `canonical_points` onto
/// `instance_points`. Each cloud is normalized to zero mean and unit RMS
/// radius before EM; the result is mapped back with the instance's
/// normalization. Throws EmptyCloud and NonFinite.
DeformationField cpd_nonrigid(const PointCloud& canonical_points, const PointCloud& instance_points,
                              const CpdParams& params = {});
/// Same, with the M-step restricted to the given kernel eigenpairs (Woodbury solve).
DeformationField cpd_nonrigid(const PointCloud& canonical_points, const PointCloud& instance_points,
                              const CpdParams& params, const CpdKernel& kernel);

/// Rigid correction about a pivot plus latent coordinates.
struct LatentDescriptor
{
  Eigen::VectorXd z;
  RigidTransform local_rigid;
};

struct ShapeSpaceModel
{
  std::string category;
  TriangleMesh canonical;
  Eigen::VectorXd mean_field;  ///< 3V, vertex-major (x0 y0 z0 x1 ...)
  Eigen::MatrixXd basis;       ///< 3V x L, orthonormal columns
  Eigen::VectorXd variances;   ///< L explained variances (m^2)
  /// Latent coordinates of every training field (K x L).
  Eigen::MatrixXd training_latents;
  std::vector<std::string> training_files;
  /// Functional grasp annotated on the canonical mesh, if any.
  std::optional<RigidTransform> functional_grasp;

  std::size_t latent_dim() const { return static_cast<std::size_t>(basis.cols()); }
  std::size_t vertex_count() const { return canonical.vertex_count(); }
  /// Per-component standard deviations, floored so none is zero.
  Eigen::VectorXd sigmas() const;
};

struct TrainParams
{
  /// 0 selects the smallest dimension explaining `variance_target`.
  std::size_t latent_dim = 0;
  double variance_target = 0.95;
  /// Instance meshes with more vertices are subsampled to this many points.
  std::size_t max_instance_points = 2000;
  CpdParams cpd;
};

/// Registers the canonical mesh to every training mesh (already aligned in a
/// common frame) and keeps the leading principal components of the fields.
/// Throws InsufficientTrainingData for fewer than two meshes or a latent
/// dimension above the training count.
ShapeSpaceModel train_shape_space(const TriangleMesh& canonical, const std::vector<TriangleMesh>& training_meshes,
                                  const TrainParams& params = {});
ShapeSpaceModel train_from_fields(const TriangleMesh& canonical, const std::vector<DeformationField>& fields,
                                  const TrainParams& params = {});

/// Field mean + basis * z. Throws DimensionMismatch.
DeformationField field_from_latent(const ShapeSpaceModel& model, const Eigen::VectorXd& z);
/// Least-squares latent coordinates of a field.
Eigen::VectorXd encode_field(const ShapeSpaceModel& model, const DeformationField& field);

/// local_rigid applied to canonical + field(z). Same faces as the canonical mesh.
TriangleMesh decode(const ShapeSpaceModel& model, const LatentDescriptor& latent);

struct InferParams
{
  int max_iterations = 60;
  /// Weight of sum (z_l / sigma_l)^2.
  double latent_reg_weight = 1.0;
  /// Data term scale: squared distances are divided by point_sigma^2 (m).
  double point_sigma = 0.005;
  double tolerance = 1e-7;  ///< relative energy decrease that ends the search
  std::size_t max_points = 1500;
  bool optimize_rigid = true;
};

struct RegistrationResult
{
  LatentDescriptor latent;
  /// Decoded mesh in the frame of the initial pose; the world mesh is
  /// `frame * deformed_mesh`.
  TriangleMesh deformed_mesh;
  RigidTransform frame;
  double fitness_rms = 0.0;  ///< RMS closest-point distance of the observed cloud (m)
  int iterations = 0;
  bool converged = false;
  /// Closest-point energy after every accepted iteration.
  std::vector<double> energy_history;
};

/// Fits latent coordinates and a local rigid correction to `observed`
/// (world frame), starting from the canonical frame placed at `init_pose`.
/// Alternates closest-point correspondences with damped Gauss-Newton
/// steps under an Armijo line search. Throws EmptyCloud and NonFinite.
RegistrationResult infer(const ShapeSpaceModel& model, const PointCloud& observed, const RigidTransform& init_pose,
                         const InferParams& params = {});

/// Correspondence of one observed point to a point on a mesh face.
struct SurfaceCorrespondence
{
  int face = -1;
  Vec3 barycentric = Vec3::Zero();
};

/// Energy and gradient with the correspondences held fixed. Points are in the
/// model frame. Gradient order: z (L), translation (3), rotation (3, left
/// perturbation about `pivot`).
struct RegistrationEnergy
{
  double energy = 0.0;
  Eigen::VectorXd gradient;
};
RegistrationEnergy registration_energy(const ShapeSpaceModel& model, const std::vector<Vec3>& points,
                                       const std::vector<SurfaceCorrespondence>& correspondences,
                                       const Eigen::VectorXd& z, const Mat3& rotation, const Vec3& translation,
                                       const Vec3& pivot, const InferParams& params);

/// Smoothly interpolated displacement at an arbitrary point: a locally
/// weighted affine fit of the vertex displacements (Gaussian weights of
/// width `kernel_width`), which reproduces affine fields exactly.
Vec3 interpolate_field(const std::vector<Vec3>& sites, const std::vector<Vec3>& displacements, const Vec3& x,
                       double kernel_width);

struct WarpParams
{
  double triad_offset = 0.01;  ///< m
  /// Kernel width as a fraction of the canonical bounding diagonal.
  double kernel_fraction = 0.15;
};

/// Transfers a pose annotated on the canonical mesh onto the registered
/// instance: the origin and three offset points along the pose axes are
/// displaced by the field, the axes re-orthonormalized, then local_rigid applied.
/// The output is in the same frame as `result.deformed_mesh`.
RigidTransform warp_pose(const ShapeSpaceModel& model, const LatentDescriptor& latent,
                         const RigidTransform& pose_on_canonical, const WarpParams& params = {});
RigidTransform warp_pose(const ShapeSpaceModel& model, const RegistrationResult& result,
                         const RigidTransform& pose_on_canonical, const WarpParams& params = {});

/// Binary model (little-endian, see README) plus `<path>.json` metadata.
void save_shape_space(const std::filesystem::path& path, const ShapeSpaceModel& model);
ShapeSpaceModel load_shape_space(const std::filesystem::path& path);

}  // namespace regrasp

#endif  // REGRASP_SHAPE_SPACE_HPP
