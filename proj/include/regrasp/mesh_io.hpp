#ifndef REGRASP_MESH_IO_HPP
#define REGRASP_MESH_IO_HPP

#include <filesystem>

#include "regrasp/geometry.hpp"

namespace regrasp
{

struct MeshLoadResult
{
  TriangleMesh mesh;
  /// Faces removed because they repeated a vertex or had zero area.
  std::size_t dropped_faces = 0;
};

enum class PlyFormat
{
  Ascii,
  BinaryLittleEndian,
};

/// Loads .obj or .ply (ASCII or binary little-endian) by extension.
/// Polygons are fan-triangulated.
MeshLoadResult load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

MeshLoadResult load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
MeshLoadResult load_ply_mesh(const std::filesystem::path& path);
void save_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format);

/// Point clouds as PLY vertices with optional nx/ny/nz properties.
PointCloud load_ply_cloud(const std::filesystem::path& path);
void save_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                    PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace regrasp

#endif  // REGRASP_MESH_IO_HPP
