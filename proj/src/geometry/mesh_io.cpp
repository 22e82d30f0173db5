#include "regrasp/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "regrasp/error.hpp"

namespace regrasp
{

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

namespace
{

std::string lower_extension(const std::filesystem::path& path)
{
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::ifstream open_in(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

enum class PlyType
{
  Int8,
  Uint8,
  Int16,
  Uint16,
  Int32,
  Uint32,
  Float32,
  Float64,
};

PlyType parse_ply_type(const std::string& s)
{
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::Uint8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::Uint16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::Uint32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  throw Error(ErrorCode::Io, "unknown PLY type '" + s + "'");
}

template <typename T>
double read_raw(std::istream& in)
{
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<double>(v);
}

double read_binary(std::istream& in, PlyType t)
{
  switch (t)
  {
    case PlyType::Int8: return read_raw<std::int8_t>(in);
    case PlyType::Uint8: return read_raw<std::uint8_t>(in);
    case PlyType::Int16: return read_raw<std::int16_t>(in);
    case PlyType::Uint16: return read_raw<std::uint16_t>(in);
    case PlyType::Int32: return read_raw<std::int32_t>(in);
    case PlyType::Uint32: return read_raw<std::uint32_t>(in);
    case PlyType::Float32: return read_raw<float>(in);
    case PlyType::Float64: return read_raw<double>(in);
  }
  return 0.0;
}

struct PlyProperty
{
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::Uint8;
};

struct PlyElement
{
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyData
{
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Face> faces;
};

PlyData read_ply(const std::filesystem::path& path)
{
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0)
    throw Error(ErrorCode::Io, path.string() + " is not a PLY file");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format")
    {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw Error(ErrorCode::Io, "unsupported PLY format '" + fmt + "'");
    }
    else if (word == "element")
    {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    }
    else if (word == "property")
    {
      if (elements.empty())
        throw Error(ErrorCode::Io, "PLY property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list")
      {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type);
        p.type = parse_ply_type(item_type);
      }
      else
      {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    }
    else if (word == "end_header")
      break;
  }

  PlyData data;
  std::vector<std::vector<int>> polygons;
  for (const PlyElement& e : elements)
  {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    for (std::size_t i = 0; i < e.count; ++i)
    {
      std::istringstream ascii_line;
      if (!binary)
      {
        if (!std::getline(in, line))
          throw Error(ErrorCode::Io, "truncated PLY body in " + path.string());
        ascii_line.str(line);
      }
      auto next = [&](PlyType t) {
        if (binary)
          return read_binary(in, t);
        double v = 0.0;
        ascii_line >> v;
        return v;
      };
      Vec3 p = Vec3::Zero();
      Vec3 n = Vec3::Zero();
      bool has_normal = false;
      for (const PlyProperty& prop : e.properties)
      {
        if (prop.is_list)
        {
          const auto count = static_cast<std::size_t>(next(prop.count_type));
          std::vector<int> idx(count);
          for (auto& v : idx)
            v = static_cast<int>(next(prop.type));
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
            polygons.push_back(std::move(idx));
          continue;
        }
        const double v = next(prop.type);
        if (!is_vertex)
          continue;
        if (prop.name == "x") p.x() = v;
        else if (prop.name == "y") p.y() = v;
        else if (prop.name == "z") p.z() = v;
        else if (prop.name == "nx") { n.x() = v; has_normal = true; }
        else if (prop.name == "ny") { n.y() = v; has_normal = true; }
        else if (prop.name == "nz") { n.z() = v; has_normal = true; }
      }
      if (!in && binary)
        throw Error(ErrorCode::Io, "truncated PLY body in " + path.string());
      if (is_vertex)
      {
        data.vertices.push_back(p);
        if (has_normal)
          data.normals.push_back(n.normalized());
      }
    }
  }
  for (const auto& poly : polygons)
    for (std::size_t k = 1; k + 1 < poly.size(); ++k)
      data.faces.push_back({poly[0], poly[k], poly[k + 1]});
  return data;
}

void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& vertices,
               const std::vector<Vec3>& normals, const std::vector<Face>* faces, PlyFormat format)
{
  std::ofstream out = open_out(path);
  const bool binary = format == PlyFormat::BinaryLittleEndian;
  const bool with_normals = !normals.empty();
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (with_normals)
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (faces)
    out << "element face " << faces->size() << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";
  if (binary)
  {
    auto put = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
      for (int k = 0; k < 3; ++k)
        put(vertices[i][k]);
      if (with_normals)
        for (int k = 0; k < 3; ++k)
          put(normals[i][k]);
    }
    if (faces)
      for (const Face& f : *faces)
      {
        const std::uint8_t three = 3;
        out.write(reinterpret_cast<const char*>(&three), 1);
        for (int idx : f)
        {
          const std::int32_t v = idx;
          out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
      }
  }
  else
  {
    out.precision(17);
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
      out << vertices[i].x() << ' ' << vertices[i].y() << ' ' << vertices[i].z();
      if (with_normals)
        out << ' ' << normals[i].x() << ' ' << normals[i].y() << ' ' << normals[i].z();
      out << '\n';
    }
    if (faces)
      for (const Face& f : *faces)
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out)
    throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace

MeshLoadResult load_obj(const std::filesystem::path& path)
{
  std::ifstream in = open_in(path);
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  while (std::getline(in, line))
  {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v")
    {
      Vec3 p;
      ls >> p.x() >> p.y() >> p.z();
      vertices.push_back(p);
    }
    else if (tag == "f")
    {
      std::vector<int> idx;
      std::string token;
      while (ls >> token)
      {
        const int raw = std::stoi(token.substr(0, token.find('/')));
        idx.push_back(raw > 0 ? raw - 1 : static_cast<int>(vertices.size()) + raw);
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  MeshLoadResult result;
  result.mesh = TriangleMesh::from_raw(std::move(vertices), std::move(faces), &result.dropped_faces);
  return result;
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh)
{
  std::ofstream out = open_out(path);
  out.precision(17);
  for (const Vec3& v : mesh.vertices())
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : mesh.faces())
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out)
    throw Error(ErrorCode::Io, "failed writing " + path.string());
}

MeshLoadResult load_ply_mesh(const std::filesystem::path& path)
{
  PlyData data = read_ply(path);
  MeshLoadResult result;
  result.mesh = TriangleMesh::from_raw(std::move(data.vertices), std::move(data.faces), &result.dropped_faces);
  return result;
}

void save_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format)
{
  write_ply(path, mesh.vertices(), {}, &mesh.faces(), format);
}

MeshLoadResult load_mesh(const std::filesystem::path& path)
{
  const std::string ext = lower_extension(path);
  if (ext == ".obj")
    return load_obj(path);
  if (ext == ".ply")
    return load_ply_mesh(path);
  throw Error(ErrorCode::Io, "unsupported mesh extension '" + ext + "'");
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format)
{
  const std::string ext = lower_extension(path);
  if (ext == ".obj")
    save_obj(path, mesh);
  else if (ext == ".ply")
    save_ply_mesh(path, mesh, format);
  else
    throw Error(ErrorCode::Io, "unsupported mesh extension '" + ext + "'");
}

PointCloud load_ply_cloud(const std::filesystem::path& path)
{
  PlyData data = read_ply(path);
  PointCloud cloud;
  cloud.points = std::move(data.vertices);
  if (data.normals.size() == cloud.points.size())
    cloud.normals = std::move(data.normals);
  return cloud;
}

void save_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format)
{
  write_ply(path, cloud.points, cloud.has_normals() ? cloud.normals : std::vector<Vec3>{}, nullptr, format);
}

}  // namespace regrasp
