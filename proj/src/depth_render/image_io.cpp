#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "regrasp/depth_render.hpp"
#include "regrasp/error.hpp"

namespace regrasp
{

void write_pfm(const std::filesystem::path& path, const DepthImage& depth)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(depth.width));
  for (int v = depth.height - 1; v >= 0; --v)
  {
    for (int u = 0; u < depth.width; ++u)
      row[static_cast<std::size_t>(u)] = static_cast<float>(depth.at(u, v));
    if constexpr (std::endian::native != std::endian::little)
      for (float& f : row)
      {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&f, &bits, 4);
      }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out)
    throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

DepthImage read_pfm(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0)
    throw Error(ErrorCode::Io, "'" + path.string() + "' is not a grayscale PFM");
  const bool little = scale < 0.0;
  DepthImage img(w, h);
  std::vector<float> row(static_cast<std::size_t>(w));
  for (int v = h - 1; v >= 0; --v)
  {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in)
      throw Error(ErrorCode::Io, "truncated PFM '" + path.string() + "'");
    for (int u = 0; u < w; ++u)
    {
      float f = row[static_cast<std::size_t>(u)];
      if (little != (std::endian::native == std::endian::little))
      {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&f, &bits, 4);
      }
      img.at(u, v) = f;
    }
  }
  return img;
}

namespace
{

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               const std::vector<png_bytep>& rows)
{
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info)
  {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png)))
  {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && std::endian::native == std::endian::little)
    png_set_swap(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_depth_png16(const std::filesystem::path& path, const DepthImage& depth)
{
  std::vector<std::uint16_t> data(static_cast<std::size_t>(depth.width) * depth.height);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<std::uint16_t>(std::clamp(std::lround(depth.depth[i] * 1000.0), 0L, 65535L));
  std::vector<png_bytep> rows(static_cast<std::size_t>(depth.height));
  for (int v = 0; v < depth.height; ++v)
    rows[static_cast<std::size_t>(v)] = reinterpret_cast<png_bytep>(data.data() + static_cast<std::size_t>(v) * depth.width);
  write_png(path, depth.width, depth.height, 16, rows);
}

void write_mask_png(const std::filesystem::path& path, const SegmentationMask& mask, int scale)
{
  std::vector<std::uint8_t> data(mask.label.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<std::uint8_t>(std::clamp(mask.label[i] * scale, 0, 255));
  std::vector<png_bytep> rows(static_cast<std::size_t>(mask.height));
  for (int v = 0; v < mask.height; ++v)
    rows[static_cast<std::size_t>(v)] = data.data() + static_cast<std::size_t>(v) * mask.width;
  write_png(path, mask.width, mask.height, 8, rows);
}

}  // namespace regrasp
