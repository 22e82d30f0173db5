#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "regrasp/error.hpp"
#include "regrasp/json_io.hpp"
#include "regrasp/shape_space.hpp"

namespace regrasp
{

namespace
{

constexpr char kMagic[4] = {'R', 'G', 'S', 'S'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

class Writer
{
public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path)
  {
    if (!out_)
      throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void finish()
  {
    out_.flush();
    if (!out_)
      throw Error(ErrorCode::Io, "failed writing '" + path_.string() + "'");
  }

private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader
{
public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path)
  {
    if (!in_)
      throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  }
  void raw(void* p, std::size_t n)
  {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_)
      throw Error(ErrorCode::Io, "truncated shape space file '" + path_.string() + "'");
  }
  std::uint32_t u32()
  {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::int32_t i32()
  {
    std::int32_t v;
    raw(&v, 4);
    return v;
  }
  double f64()
  {
    double v;
    raw(&v, 8);
    return v;
  }

private:
  std::ifstream in_;
  std::filesystem::path path_;
};

std::filesystem::path sidecar(const std::filesystem::path& path)
{
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void save_shape_space(const std::filesystem::path& path, const ShapeSpaceModel& model)
{
  const auto v = static_cast<std::uint32_t>(model.canonical.vertex_count());
  const auto f = static_cast<std::uint32_t>(model.canonical.face_count());
  const auto l = static_cast<std::uint32_t>(model.basis.cols());
  const auto k = static_cast<std::uint32_t>(model.training_latents.rows());
  if (model.mean_field.size() != 3 * static_cast<Eigen::Index>(v) || model.basis.rows() != model.mean_field.size() ||
      model.variances.size() != static_cast<Eigen::Index>(l) ||
      (k > 0 && model.training_latents.cols() != static_cast<Eigen::Index>(l)))
    throw Error(ErrorCode::DimensionMismatch, "inconsistent shape space model");

  Writer w(path);
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(v);
  w.u32(f);
  w.u32(l);
  w.u32(k);
  for (Eigen::Index i = 0; i < model.variances.size(); ++i)
    w.f64(model.variances[i]);
  for (const Vec3& p : model.canonical.vertices())
    for (int c = 0; c < 3; ++c)
      w.f64(p[c]);
  for (const Face& face : model.canonical.faces())
    for (int c = 0; c < 3; ++c)
      w.i32(face[c]);
  for (Eigen::Index i = 0; i < model.mean_field.size(); ++i)
    w.f64(model.mean_field[i]);
  for (Eigen::Index c = 0; c < model.basis.cols(); ++c)
    for (Eigen::Index r = 0; r < model.basis.rows(); ++r)
      w.f64(model.basis(r, c));
  for (Eigen::Index r = 0; r < model.training_latents.rows(); ++r)
    for (Eigen::Index c = 0; c < model.training_latents.cols(); ++c)
      w.f64(model.training_latents(r, c));
  w.finish();

  Json meta{{"category", model.category},
            {"vertex_count", v},
            {"latent_dim", l},
            {"training_meshes", model.training_files}};
  meta["functional_grasp"] = model.functional_grasp ? to_json(*model.functional_grasp) : Json(nullptr);
  write_json_file(sidecar(path), meta);
}

ShapeSpaceModel load_shape_space(const std::filesystem::path& path)
{
  Reader r(path);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::Io, "'" + path.string() + "' is not a shape space file");
  if (r.u32() != kVersion)
    throw Error(ErrorCode::Io, "unsupported shape space version in '" + path.string() + "'");
  const std::uint32_t v = r.u32();
  const std::uint32_t f = r.u32();
  const std::uint32_t l = r.u32();
  const std::uint32_t k = r.u32();
  if (v == 0 || f == 0 || v > (1u << 24) || f > (1u << 25) || l > 4096 || k > 65536)
    throw Error(ErrorCode::Io, "implausible header in '" + path.string() + "'");

  ShapeSpaceModel model;
  model.variances.resize(l);
  for (std::uint32_t i = 0; i < l; ++i)
    model.variances[i] = r.f64();
  std::vector<Vec3> verts(v);
  for (Vec3& p : verts)
    for (int c = 0; c < 3; ++c)
      p[c] = r.f64();
  std::vector<Face> faces(f);
  for (Face& face : faces)
    for (int c = 0; c < 3; ++c)
      face[c] = r.i32();
  model.canonical = TriangleMesh(std::move(verts), std::move(faces));
  model.mean_field.resize(3 * static_cast<Eigen::Index>(v));
  for (Eigen::Index i = 0; i < model.mean_field.size(); ++i)
    model.mean_field[i] = r.f64();
  model.basis.resize(3 * static_cast<Eigen::Index>(v), l);
  for (Eigen::Index c = 0; c < model.basis.cols(); ++c)
    for (Eigen::Index row = 0; row < model.basis.rows(); ++row)
      model.basis(row, c) = r.f64();
  model.training_latents.resize(k, l);
  for (Eigen::Index row = 0; row < model.training_latents.rows(); ++row)
    for (Eigen::Index c = 0; c < model.training_latents.cols(); ++c)
      model.training_latents(row, c) = r.f64();

  const std::filesystem::path meta_path = sidecar(path);
  if (std::filesystem::exists(meta_path))
  {
    const Json meta = read_json_file(meta_path);
    model.category = meta.value("category", std::string());
    if (meta.contains("training_meshes"))
      model.training_files = meta["training_meshes"].get<std::vector<std::string>>();
    if (meta.contains("functional_grasp") && !meta["functional_grasp"].is_null())
      model.functional_grasp = pose_from_json(meta["functional_grasp"]);
  }
  return model;
}

}  // namespace regrasp
