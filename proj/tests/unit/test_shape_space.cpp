#include <doctest.h>

#include <filesystem>
#include <random>

#include "regrasp/error.hpp"
#include "regrasp/primitives.hpp"
#include "regrasp/shape_space.hpp"

using namespace regrasp;

namespace
{

TriangleMesh canonical_mesh()
{
  return subdivide_mesh(make_cylinder(0.04, 0.15, 16), 1);
}

// Smooth two-parameter family: radial scale and height scale plus a taper.
TriangleMesh instance(const TriangleMesh& base, double radial, double height, double taper)
{
  std::vector<Vec3> v = base.vertices();
  for (Vec3& p : v)
  {
    const double z = p.z() * height;
    const double s = radial * (1.0 + taper * z / 0.075);
    p = Vec3(p.x() * s, p.y() * s, z);
  }
  return base.with_vertices(std::move(v));
}

PointCloud cloud_of(const TriangleMesh& m)
{
  return PointCloud{m.vertices(), {}};
}

double max_vertex_error(const TriangleMesh& a, const TriangleMesh& b)
{
  double e = 0.0;
  for (std::size_t i = 0; i < a.vertex_count(); ++i)
    e = std::max(e, (a.vertices()[i] - b.vertices()[i]).norm());
  return e;
}

struct Family
{
  TriangleMesh canonical;
  std::vector<TriangleMesh> meshes;
  ShapeSpaceModel model;
};

const Family& family()
{
  static const Family f = [] {
    Family fam;
    fam.canonical = canonical_mesh();
    for (double r : {0.8, 1.0, 1.2})
      for (double t : {-0.15, 0.15})
        fam.meshes.push_back(instance(fam.canonical, r, 1.0 + 0.5 * (r - 1.0), t));
    TrainParams p;
    p.latent_dim = 3;
    fam.model = train_shape_space(fam.canonical, fam.meshes, p);
    return fam;
  }();
  return f;
}

}  // namespace

TEST_CASE("cpd identity, scaling and unequal counts")
{
  const TriangleMesh canon = canonical_mesh();
  const double diag = bounds(canon.vertices()).diagonal();
  const DeformationField id = cpd_nonrigid(cloud_of(canon), cloud_of(canon));
  double max_d = 0.0;
  for (const Vec3& d : id.displacements)
    max_d = std::max(max_d, d.norm());
  CHECK(max_d < 1e-3 * diag);

  std::vector<Vec3> scaled = canon.vertices();
  for (Vec3& p : scaled)
    p *= 1.2;
  const DeformationField s = cpd_nonrigid(cloud_of(canon), PointCloud{scaled, {}});
  for (std::size_t i = 0; i < canon.vertex_count(); ++i)
    CHECK((canon.vertices()[i] + s.displacements[i] - scaled[i]).norm() < 0.01 * diag * 1.2);

  std::mt19937_64 rng(41);
  const PointCloud other = sample_surface(instance(canon, 1.1, 0.9, 0.1), 313, rng);
  const DeformationField f = cpd_nonrigid(cloud_of(canon), other);
  CHECK(f.size() == canon.vertex_count());

  CHECK_THROWS_AS(cpd_nonrigid(PointCloud{}, other), Error);
}

TEST_CASE("low-rank cpd")
{
  const TriangleMesh canon = canonical_mesh();
  const double diag = bounds(canon.vertices()).diagonal();
  std::mt19937_64 rng(7);
  const PointCloud target = sample_surface(instance(canon, 1.15, 0.9, 0.1), 400, rng);
  const DeformationField exact = cpd_nonrigid(cloud_of(canon), target);

  auto max_gap = [&](const DeformationField& f) {
    double e = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      e = std::max(e, (f.displacements[i] - exact.displacements[i]).norm());
    return e;
  };

  SUBCASE("every eigenpair reproduces the exact solve")
  {
    CpdParams p;
    p.low_rank = canon.vertex_count();
    const CpdKernel k = cpd_kernel(cloud_of(canon), p);
    CHECK(static_cast<std::size_t>(k.values.size()) <= canon.vertex_count());
    CHECK(k.values.minCoeff() > 0.0);
    CHECK(max_gap(cpd_nonrigid(cloud_of(canon), target, p, k)) < 1e-6 * diag);
  }
  SUBCASE("truncated kernel stays close")
  {
    CpdParams p;
    p.low_rank = 40;
    const CpdKernel k = cpd_kernel(cloud_of(canon), p);
    CHECK(k.values.size() == 40);
    for (Eigen::Index i = 1; i < k.values.size(); ++i)
      CHECK(k.values[i] <= k.values[i - 1]);
    CHECK(max_gap(cpd_nonrigid(cloud_of(canon), target, p, k)) < 0.01 * diag);
    CHECK(max_gap(cpd_nonrigid(cloud_of(canon), target, p)) < 0.01 * diag);
  }
}

TEST_CASE("training a shape space")
{
  const TriangleMesh canon = canonical_mesh();
  std::vector<TriangleMesh> scaled;
  for (double s : {0.9, 1.0, 1.1})
  {
    std::vector<Vec3> v = canon.vertices();
    for (Vec3& p : v)
      p *= s;
    scaled.push_back(canon.with_vertices(v));
  }
  TrainParams p;
  p.latent_dim = 1;
  const ShapeSpaceModel m = train_shape_space(canon, scaled, p);
  CHECK(m.latent_dim() == 1);
  // Share of the total training variance captured by the first component.
  p.latent_dim = 3;
  const ShapeSpaceModel full = train_shape_space(canon, scaled, p);
  CHECK(full.variances[0] / full.variances.sum() >= 0.99);
  CHECK(std::abs(m.variances[0] - full.variances[0]) < 1e-12);

  // Full rank reproduces each training field.
  const Family& fam = family();
  TrainParams all;
  all.latent_dim = fam.meshes.size();
  std::vector<DeformationField> fields;
  for (const TriangleMesh& inst : fam.meshes)
    fields.push_back(cpd_nonrigid(cloud_of(fam.canonical), cloud_of(inst)));
  const ShapeSpaceModel rank = train_from_fields(fam.canonical, fields, all);
  const Eigen::MatrixXd gram = rank.basis.transpose() * rank.basis;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-6);
  for (const DeformationField& f : fields)
  {
    const DeformationField back = field_from_latent(rank, encode_field(rank, f));
    CHECK((back.stacked() - f.stacked()).cwiseAbs().maxCoeff() < 1e-6);
  }
  const Eigen::MatrixXd g3 = fam.model.basis.transpose() * fam.model.basis;
  CHECK((g3 - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);

  try
  {
    train_shape_space(canon, {scaled[0]});
    FAIL("expected InsufficientTrainingData");
  }
  catch (const Error& e)
  {
    CHECK(e.code() == ErrorCode::InsufficientTrainingData);
  }
  TrainParams too_many;
  too_many.latent_dim = 4;
  CHECK_THROWS_AS(train_shape_space(canon, scaled, too_many), Error);

  // Default dimension: smallest explaining 95%.
  const ShapeSpaceModel automatic = train_from_fields(fam.canonical, fields, TrainParams{});
  const ShapeSpaceModel everything = rank;
  double acc = 0.0;
  std::size_t expect = 0;
  while (acc < 0.95 * everything.variances.sum())
    acc += everything.variances[static_cast<Eigen::Index>(expect++)];
  CHECK(automatic.latent_dim() == expect);
}

TEST_CASE("decode")
{
  const ShapeSpaceModel& m = family().model;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const TriangleMesh mean = decode(m, {zero, RigidTransform()});
  CHECK(mean.faces() == m.canonical.faces());
  for (std::size_t i = 0; i < mean.vertex_count(); ++i)
    CHECK((mean.vertices()[i] - m.canonical.vertices()[i] - m.mean_field.segment<3>(3 * i)).norm() < 1e-15);

  const Eigen::VectorXd z1 = Eigen::VectorXd::Random(3) * 0.01;
  const Eigen::VectorXd z2 = Eigen::VectorXd::Random(3) * 0.01;
  const TriangleMesh a = decode(m, {z1, RigidTransform()});
  const TriangleMesh b = decode(m, {z2, RigidTransform()});
  const TriangleMesh ab = decode(m, {z1 + z2, RigidTransform()});
  for (std::size_t i = 0; i < mean.vertex_count(); ++i)
  {
    const Vec3 lhs = ab.vertices()[i] - mean.vertices()[i];
    const Vec3 rhs = (a.vertices()[i] - mean.vertices()[i]) + (b.vertices()[i] - mean.vertices()[i]);
    CHECK((lhs - rhs).norm() < 1e-12);
  }

  const RigidTransform shift = RigidTransform::from_translation(Vec3(0.1, -0.2, 0.3));
  const TriangleMesh moved = decode(m, {z1, shift});
  for (std::size_t i = 0; i < moved.vertex_count(); ++i)
    CHECK((moved.vertices()[i] - a.vertices()[i] - Vec3(0.1, -0.2, 0.3)).norm() < 1e-12);

  CHECK_THROWS_AS(decode(m, {Eigen::VectorXd::Zero(2), RigidTransform()}), Error);
}

TEST_CASE("energy gradient matches finite differences")
{
  const ShapeSpaceModel& m = family().model;
  std::mt19937_64 rng(42);
  const TriangleMesh target = instance(m.canonical, 1.1, 1.05, 0.05);
  const PointCloud obs = sample_surface(target, 60, rng);
  std::uniform_int_distribution<int> face(0, static_cast<int>(m.canonical.face_count()) - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SurfaceCorrespondence> corr;
  for (std::size_t i = 0; i < obs.size(); ++i)
  {
    double a = u(rng), b = u(rng);
    if (a + b > 1.0)
    {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    corr.push_back({face(rng), Vec3(1.0 - a - b, a, b)});
  }
  InferParams p;
  const Eigen::VectorXd z = Eigen::VectorXd::Random(3) * 0.01;
  const Mat3 r = RigidTransform::from_axis_angle(Vec3(0.05, -0.02, 0.03)).rotation_matrix();
  const Vec3 t(0.003, -0.002, 0.001);
  const Vec3 pivot(0.0, 0.0, 0.01);
  const RegistrationEnergy e = registration_energy(m, obs.points, corr, z, r, t, pivot, p);
  for (Eigen::Index k = 0; k < 9; ++k)
  {
    const double h = 1e-6;
    auto eval = [&](double sign) {
      Eigen::VectorXd zz = z;
      Vec3 tt = t;
      Mat3 rr = r;
      if (k < 3)
        zz[k] += sign * h;
      else if (k < 6)
        tt[k - 3] += sign * h;
      else
      {
        Vec3 w = Vec3::Zero();
        w[k - 6] = sign * h;
        rr = RigidTransform::from_axis_angle(w).rotation_matrix() * r;
      }
      return registration_energy(m, obs.points, corr, zz, rr, tt, pivot, p).energy;
    };
    const double fd = (eval(1.0) - eval(-1.0)) / (2.0 * h);
    CHECK(std::abs(fd - e.gradient[k]) <= 1e-4 * std::max(std::abs(fd), 1.0));
  }
}

TEST_CASE("inference")
{
  const Family& fam = family();
  const ShapeSpaceModel& m = fam.model;
  const double diag = bounds(m.canonical.vertices()).diagonal();
  std::mt19937_64 rng(43);

  SUBCASE("held-out instance")
  {
    std::vector<TriangleMesh> train(fam.meshes.begin(), fam.meshes.end());
    const TriangleMesh held = train[3];
    train.erase(train.begin() + 3);
    TrainParams tp;
    tp.latent_dim = 3;
    const ShapeSpaceModel partial = train_shape_space(fam.canonical, train, tp);
    const RigidTransform pose = RigidTransform::from_axis_angle(Vec3(0.1, 0.2, 0.3), Vec3(0.5, 0.1, 0.2));
    const PointCloud obs = transform_points(sample_surface(held, 800, rng), pose);
    const RegistrationResult r = infer(partial, obs, pose);
    CHECK(r.fitness_rms < 0.02 * diag);
    CHECK(r.deformed_mesh.faces() == partial.canonical.faces());
    for (std::size_t i = 1; i < r.energy_history.size(); ++i)
      CHECK(r.energy_history[i] <= r.energy_history[i - 1]);
  }
  SUBCASE("canonical observation")
  {
    const PointCloud obs = sample_surface(m.canonical, 800, rng);
    const RegistrationResult r = infer(m, obs, RigidTransform());
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m.training_latents.rows(); ++k)
      smallest = std::min(smallest, m.training_latents.row(k).norm());
    CHECK(r.latent.z.norm() < 0.1 * smallest);
    CHECK(r.latent.local_rigid.angle() < 0.5 * M_PI / 180.0);
    CHECK(r.latent.local_rigid.translation().norm() < 1e-3);
  }
  SUBCASE("rotated training instance")
  {
    const RigidTransform rot = RigidTransform::from_axis_angle(Vec3(1, 0, 0) * (5.0 * M_PI / 180.0));
    const PointCloud obs = transform_points(sample_surface(fam.meshes[4], 800, rng), rot);
    const RegistrationResult r = infer(m, obs, RigidTransform());
    const RigidTransform rel(r.latent.local_rigid.rotation() * rot.rotation().inverse(), Vec3::Zero());
    CHECK(rel.angle() < 1.0 * M_PI / 180.0);
  }
  SUBCASE("errors")
  {
    CHECK_THROWS_AS(infer(m, PointCloud{}, RigidTransform()), Error);
  }
}

TEST_CASE("warp_pose")
{
  const TriangleMesh canon = canonical_mesh();
  const std::size_t v = canon.vertex_count();
  ShapeSpaceModel m;
  m.canonical = canon;
  m.basis = Eigen::MatrixXd::Zero(3 * v, 1);
  m.basis(0, 0) = 1.0;
  m.variances = Eigen::VectorXd::Ones(1);
  const RigidTransform pose = RigidTransform::from_axis_angle(Vec3(0.3, -0.4, 0.2), Vec3(0.01, 0.02, 0.05));
  const LatentDescriptor zero{Eigen::VectorXd::Zero(1), RigidTransform()};

  m.mean_field = Eigen::VectorXd::Zero(3 * v);
  m.basis(0, 0) = 0.0;
  CHECK(pose_error(warp_pose(m, zero, pose), pose).translation < 1e-12);
  CHECK(pose_error(warp_pose(m, zero, pose), pose).rotation < 1e-9);

  const Vec3 t(0.01, -0.03, 0.02);
  for (std::size_t i = 0; i < v; ++i)
    m.mean_field.segment<3>(3 * static_cast<Eigen::Index>(i)) = t;
  const RigidTransform translated = warp_pose(m, zero, pose);
  CHECK((translated.translation() - pose.translation() - t).norm() < 1e-9);
  CHECK(pose_error(translated, RigidTransform(pose.rotation(), translated.translation())).rotation < 1e-9);

  const double s = 1.3;
  for (std::size_t i = 0; i < v; ++i)
    m.mean_field.segment<3>(3 * static_cast<Eigen::Index>(i)) = (s - 1.0) * canon.vertices()[i];
  const RigidTransform scaled = warp_pose(m, zero, pose);
  CHECK((scaled.translation() - s * pose.translation()).norm() < 1e-9);
  CHECK(pose_error(RigidTransform(scaled.rotation(), Vec3::Zero()), RigidTransform(pose.rotation(), Vec3::Zero())).rotation <
        1e-6);

  // Local rigid composes on top; orientation always a rotation.
  const RigidTransform rigid = RigidTransform::from_axis_angle(Vec3(0, 0, 0.5), Vec3(1, 2, 3));
  CHECK(pose_error(warp_pose(m, LatentDescriptor{Eigen::VectorXd::Zero(1), rigid}, pose), rigid * scaled).translation < 1e-12);
  const Family& fam = family();
  std::mt19937_64 rng(44);
  for (int i = 0; i < 20; ++i)
  {
    const Eigen::VectorXd z = Eigen::VectorXd::Random(3) * 0.05;
    const Mat3 r = warp_pose(fam.model, LatentDescriptor{z, RigidTransform()}, pose).rotation_matrix();
    CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-6);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-6);
  }
}

TEST_CASE("model persistence")
{
  ShapeSpaceModel m = family().model;
  m.category = "cylinder";
  m.training_files = {"a.obj", "b.obj"};
  m.functional_grasp = RigidTransform::from_axis_angle(Vec3(0.1, 0.2, 0.3), Vec3(0.01, 0.0, 0.05));
  const auto path = std::filesystem::temp_directory_path() / "regrasp_model_test.bin";
  save_shape_space(path, m);
  const ShapeSpaceModel back = load_shape_space(path);
  CHECK(back.category == "cylinder");
  CHECK(back.training_files == m.training_files);
  REQUIRE(back.functional_grasp);
  CHECK(pose_error(*back.functional_grasp, *m.functional_grasp).translation < 1e-12);
  CHECK(back.canonical.faces() == m.canonical.faces());
  CHECK(back.canonical.vertices() == m.canonical.vertices());
  CHECK(back.mean_field == m.mean_field);
  CHECK(back.basis == m.basis);
  CHECK(back.variances == m.variances);
  CHECK(back.training_latents == m.training_latents);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
  CHECK_THROWS_AS(load_shape_space(path), Error);
}
