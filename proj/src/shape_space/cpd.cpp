#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "regrasp/error.hpp"
#include "regrasp/shape_space.hpp"

namespace regrasp
{

namespace
{

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

Matrix to_matrix(const std::vector<Vec3>& points)
{
  Matrix m(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return m;
}

struct Normalization
{
  Eigen::RowVector3d mean;
  double scale = 1.0;
};

Normalization normalize(Matrix& m)
{
  Normalization n;
  n.mean = m.colwise().mean();
  m.rowwise() -= n.mean;
  n.scale = std::sqrt(m.squaredNorm() / static_cast<double>(m.rows()));
  if (!(n.scale > 0.0))
    n.scale = 1.0;
  m /= n.scale;
  return n;
}

Eigen::MatrixXd gaussian_kernel(const Matrix& y, double beta)
{
  const Eigen::Index m = y.rows();
  Eigen::MatrixXd g(m, m);
  const double inv_2b2 = 1.0 / (2.0 * beta * beta);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j)
      g(i, j) = g(j, i) = std::exp(-(y.row(i) - y.row(j)).squaredNorm() * inv_2b2);
  return g;
}

void check_params(const CpdParams& params)
{
  if (!(params.beta > 0.0) || !(params.lambda > 0.0) || !(params.outlier_weight >= 0.0 && params.outlier_weight < 1.0))
    throw Error(ErrorCode::InvalidArgument, "invalid CPD parameters");
}

DeformationField run_cpd(const PointCloud& canonical_points, const PointCloud& instance_points,
                         const CpdParams& params, const CpdKernel* kernel);

}  // namespace

CpdKernel cpd_kernel(const PointCloud& canonical_points, const CpdParams& params)
{
  if (canonical_points.empty())
    throw Error(ErrorCode::EmptyCloud, "CPD kernel needs a non-empty cloud");
  check_params(params);
  Matrix y = to_matrix(canonical_points.points);
  normalize(y);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gaussian_kernel(y, params.beta));
  const Eigen::Index m = y.rows();
  Eigen::Index k = params.low_rank == 0 ? m : std::min<Eigen::Index>(m, static_cast<Eigen::Index>(params.low_rank));
  // Eigenvalues at round-off level would blow up the inverse in the M-step.
  const double floor = 1e-12 * eig.eigenvalues()[m - 1];
  while (k > 1 && !(eig.eigenvalues()[m - k] > floor))
    --k;
  CpdKernel out;
  // Eigen returns ascending eigenvalues.
  out.vectors = eig.eigenvectors().rightCols(k).rowwise().reverse();
  out.values = eig.eigenvalues().tail(k).reverse();
  return out;
}

Eigen::VectorXd DeformationField::stacked() const
{
  Eigen::VectorXd v(3 * static_cast<Eigen::Index>(displacements.size()));
  for (std::size_t i = 0; i < displacements.size(); ++i)
    v.segment<3>(3 * static_cast<Eigen::Index>(i)) = displacements[i];
  return v;
}

DeformationField DeformationField::from_stacked(const Eigen::VectorXd& v)
{
  if (v.size() % 3 != 0)
    throw Error(ErrorCode::DimensionMismatch, "stacked field length is not a multiple of 3");
  DeformationField f;
  f.displacements.resize(static_cast<std::size_t>(v.size() / 3));
  for (std::size_t i = 0; i < f.displacements.size(); ++i)
    f.displacements[i] = v.segment<3>(3 * static_cast<Eigen::Index>(i));
  return f;
}

DeformationField cpd_nonrigid(const PointCloud& canonical_points, const PointCloud& instance_points,
                              const CpdParams& params)
{
  if (params.low_rank > 0 && params.low_rank < canonical_points.size())
    return run_cpd(canonical_points, instance_points, params, nullptr);
  CpdParams exact = params;
  exact.low_rank = 0;
  return run_cpd(canonical_points, instance_points, exact, nullptr);
}

DeformationField cpd_nonrigid(const PointCloud& canonical_points, const PointCloud& instance_points,
                              const CpdParams& params, const CpdKernel& kernel)
{
  if (kernel.vectors.rows() != static_cast<Eigen::Index>(canonical_points.size()) ||
      kernel.vectors.cols() != kernel.values.size())
    throw Error(ErrorCode::DimensionMismatch, "CPD kernel does not match the canonical points");
  return run_cpd(canonical_points, instance_points, params, &kernel);
}

namespace
{

DeformationField run_cpd(const PointCloud& canonical_points, const PointCloud& instance_points,
                         const CpdParams& params, const CpdKernel* kernel)
{
  if (canonical_points.empty() || instance_points.empty())
    throw Error(ErrorCode::EmptyCloud, "CPD needs two non-empty clouds");
  check_params(params);

  Matrix y = to_matrix(canonical_points.points);
  Matrix x = to_matrix(instance_points.points);
  if (!y.allFinite() || !x.allFinite())
    throw Error(ErrorCode::NonFinite, "CPD input contains non-finite coordinates");
  normalize(y);
  const Normalization nx = normalize(x);
  const Eigen::Index m = y.rows();
  const Eigen::Index n = x.rows();
  constexpr double dim = 3.0;

  CpdKernel own;
  if (!kernel && params.low_rank > 0)
  {
    own = cpd_kernel(canonical_points, params);
    kernel = &own;
  }
  Eigen::MatrixXd g;
  if (!kernel)
    g = gaussian_kernel(y, params.beta);

  double sigma2 = 0.0;
  {
    const Eigen::RowVector3d sy = y.colwise().sum();
    const Eigen::RowVector3d sx = x.colwise().sum();
    sigma2 = (static_cast<double>(m) * x.squaredNorm() + static_cast<double>(n) * y.squaredNorm() -
              2.0 * sy.dot(sx)) /
             (dim * static_cast<double>(m) * static_cast<double>(n));
  }
  Matrix t = y;
  Matrix w = Matrix::Zero(m, 3);
  Eigen::MatrixXd p(m, n);
  const double w_ratio = params.outlier_weight / (1.0 - params.outlier_weight);

  for (int iter = 0; iter < params.max_em_iterations && sigma2 > 1e-12; ++iter)
  {
    // E-step: posterior of each Gaussian centroid for each instance point.
    const double c = std::pow(2.0 * M_PI * sigma2, dim / 2.0) * w_ratio * static_cast<double>(m) / static_cast<double>(n);
    const double inv_2s2 = 1.0 / (2.0 * sigma2);
    for (Eigen::Index j = 0; j < n; ++j)
    {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < m; ++i)
      {
        const double v = std::exp(-(x.row(j) - t.row(i)).squaredNorm() * inv_2s2);
        p(i, j) = v;
        sum += v;
      }
      const double denom = sum + c;
      if (denom > 0.0)
        p.col(j) /= denom;
    }
    const Eigen::VectorXd p1 = p.rowwise().sum();
    const Eigen::VectorXd pt1 = p.colwise().sum().transpose();
    const Matrix px = p * x;
    const double np = p1.sum();
    if (!(np > 0.0))
      break;

    // M-step: (G + lambda sigma^2 diag(P1)^-1) W = diag(P1)^-1 P X - Y.
    constexpr double kFloor = 1e-12;
    Eigen::VectorXd diag(m);
    Matrix rhs(m, 3);
    for (Eigen::Index i = 0; i < m; ++i)
    {
      const double pi = std::max(p1[i], kFloor);
      diag[i] = params.lambda * sigma2 / pi;
      rhs.row(i) = px.row(i) / pi - y.row(i);
    }
    if (kernel)
    {
      // G ~ Q L Q^T:  (D + Q L Q^T)^-1 = D^-1 - D^-1 Q (L^-1 + Q^T D^-1 Q)^-1 Q^T D^-1
      const Eigen::MatrixXd& q = kernel->vectors;
      const Eigen::VectorXd dinv = diag.cwiseInverse();
      const Matrix dr = dinv.asDiagonal() * rhs;
      Eigen::MatrixXd inner = q.transpose() * dinv.asDiagonal() * q;
      inner.diagonal() += kernel->values.cwiseInverse();
      Eigen::LLT<Eigen::MatrixXd> llt(inner);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NonFinite, "CPD low-rank system is not positive definite");
      const Eigen::MatrixXd qd = q.transpose() * dr;
      w = dr - dinv.asDiagonal() * (q * llt.solve(qd));
      t = y + q * (kernel->values.asDiagonal() * (q.transpose() * w));
    }
    else
    {
      Eigen::MatrixXd a = g;
      a.diagonal() += diag;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NonFinite, "CPD linear system is not positive definite");
      w = llt.solve(rhs);
      t = y + g * w;
    }

    const double previous = sigma2;
    sigma2 = (pt1.dot(x.rowwise().squaredNorm()) - 2.0 * (px.cwiseProduct(t)).sum() +
              p1.dot(t.rowwise().squaredNorm())) /
             (np * dim);
    if (!std::isfinite(sigma2) || !t.allFinite())
      throw Error(ErrorCode::NonFinite, "CPD diverged");
    if (sigma2 <= 0.0)
      sigma2 = 1e-12;
    if (std::abs(previous - sigma2) <= params.tolerance * previous)
      break;
  }

  DeformationField field;
  field.displacements.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
  {
    const Vec3 moved = (t.row(i) * nx.scale + nx.mean).transpose();
    field.displacements[static_cast<std::size_t>(i)] = moved - canonical_points.points[static_cast<std::size_t>(i)];
  }
  return field;
}

}  // namespace

}  // namespace regrasp
