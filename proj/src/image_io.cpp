#include "anogen/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace anogen {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

bool has_suffix(const std::filesystem::path& path, const char* a,
                const char* b = nullptr) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == a || (b && ext == b);
}

// Decoded interleaved rows, 8 or 16 bit, 1..4 channels.
struct RawImage {
  int h = 0, w = 0, channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;  // row-major, interleaved
};

RawImage decode_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_swap(png);  // 16-bit PNGs are big-endian on disk
  png_read_update_info(png, info);

  RawImage img;
  img.h = static_cast<int>(png_get_image_height(png, info));
  img.w = static_cast<int>(png_get_image_width(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  img.bit_depth = static_cast<int>(png_get_bit_depth(png, info));

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<png_byte> row(row_bytes);
  img.pixels.resize(static_cast<std::size_t>(img.h) * img.w * img.channels);
  for (int y = 0; y < img.h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int i = 0; i < img.w * img.channels; ++i) {
      std::size_t at = (static_cast<std::size_t>(y) * img.w * img.channels) +
                       static_cast<std::size_t>(i);
      if (img.bit_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, row.data() + 2 * i, 2);
        img.pixels[at] = v;
      } else {
        img.pixels[at] = row[static_cast<std::size_t>(i)];
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

RawImage decode_jpeg(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jerr.error_exit = [](j_common_ptr c) {
    char msg[JMSG_LENGTH_MAX];
    (*c->err->format_message)(c, msg);
    throw IoError(std::string("JPEG decode failed: ") + msg);
  };
  jpeg_create_decompress(&cinfo);
  try {
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    RawImage img;
    img.h = static_cast<int>(cinfo.output_height);
    img.w = static_cast<int>(cinfo.output_width);
    img.channels = cinfo.output_components;
    img.pixels.resize(static_cast<std::size_t>(img.h) * img.w * img.channels);
    std::vector<JSAMPLE> row(static_cast<std::size_t>(img.w) * img.channels);
    JSAMPROW rows[1] = {row.data()};
    int y = 0;
    while (cinfo.output_scanline < cinfo.output_height) {
      jpeg_read_scanlines(&cinfo, rows, 1);
      for (int i = 0; i < img.w * img.channels; ++i)
        img.pixels[(static_cast<std::size_t>(y) * img.w * img.channels) +
                   static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i)];
      ++y;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
  } catch (...) {
    jpeg_destroy_decompress(&cinfo);
    throw;
  }
}

RawImage decode_any(const std::filesystem::path& path) {
  if (has_suffix(path, ".jpg", ".jpeg")) return decode_jpeg(path);
  if (has_suffix(path, ".png")) return decode_png(path);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace

ImagePlane load_color_image(const std::filesystem::path& path) {
  RawImage img = decode_any(path);
  const Scalar denom = img.bit_depth == 16 ? 65535.0 : 255.0;
  ImagePlane plane(img.h, img.w, PlaneRole::Color, RangeTag::Unit);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const std::size_t base =
          (static_cast<std::size_t>(y) * img.w + static_cast<std::size_t>(x)) *
          static_cast<std::size_t>(img.channels);
      for (int c = 0; c < 3; ++c) {
        const int sc = img.channels >= 3 ? c : 0;
        plane.chan(c)(y, x) =
            static_cast<Scalar>(img.pixels[base + static_cast<std::size_t>(sc)]) /
            denom;
      }
    }
  return plane;
}

ImagePlane load_gray_image(const std::filesystem::path& path, PlaneRole role) {
  RawImage img = decode_any(path);
  const Scalar denom = img.bit_depth == 16 ? 65535.0 : 255.0;
  ImagePlane plane(img.h, img.w, role, RangeTag::Unit);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const std::size_t base =
          (static_cast<std::size_t>(y) * img.w + static_cast<std::size_t>(x)) *
          static_cast<std::size_t>(img.channels);
      Scalar v = 0;
      if (img.channels >= 3) {
        v = 0.299 * img.pixels[base] + 0.587 * img.pixels[base + 1] +
            0.114 * img.pixels[base + 2];
      } else {
        v = static_cast<Scalar>(img.pixels[base]);
      }
      plane.chan(0)(y, x) = v / denom;
    }
  return plane;
}

namespace {

void write_png(const std::filesystem::path& path, int h, int w, int channels,
               int bit_depth, const std::vector<std::uint16_t>& pixels) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto file = open_file(tmp, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError("PNG encode failed: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 6);
    const int color_type =
        channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(w),
                 static_cast<png_uint_32>(h), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    std::vector<png_byte> row(static_cast<std::size_t>(w) * channels *
                              (bit_depth / 8));
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w * channels; ++i) {
        const std::uint16_t v =
            pixels[(static_cast<std::size_t>(y) * w * channels) +
                   static_cast<std::size_t>(i)];
        if (bit_depth == 16) {
          std::memcpy(row.data() + 2 * i, &v, 2);
        } else {
          row[static_cast<std::size_t>(i)] = static_cast<png_byte>(v);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

std::uint16_t quantize(Scalar v, Scalar max_code) {
  const Scalar clamped = std::clamp(v, Scalar(0), Scalar(1));
  return static_cast<std::uint16_t>(std::lround(clamped * max_code));
}

}  // namespace

void save_png8(const ImagePlane& plane, const std::filesystem::path& path) {
  ImagePlane unit = convert_range(plane, RangeTag::Unit);
  const int h = unit.height(), w = unit.width(), c = unit.channel_count();
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(h) * w * c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ci = 0; ci < c; ++ci)
        pixels[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(c) +
               static_cast<std::size_t>(ci)] = quantize(unit.chan(ci)(y, x), 255.0);
  write_png(path, h, w, c, 8, pixels);
}

void save_png16_gray(const ImagePlane& plane,
                     const std::filesystem::path& path) {
  if (plane.channel_count() != 1)
    throw DimensionError("save_png16_gray expects a single-channel plane");
  ImagePlane unit = convert_range(plane, RangeTag::Unit);
  const int h = unit.height(), w = unit.width();
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] =
          quantize(unit.chan(0)(y, x), 65535.0);
  write_png(path, h, w, 1, 16, pixels);
}

void save_raw_plane(const ImagePlane& plane,
                    const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string());
    const char magic[8] = {'A', 'G', 'P', 'L', 'N', '0', '0', '1'};
    out.write(magic, 8);
    const std::int32_t h = plane.height(), w = plane.width(),
                       c = plane.channel_count(),
                       tag = static_cast<std::int32_t>(plane.range_tag),
                       role = static_cast<std::int32_t>(plane.role);
    for (std::int32_t v : {h, w, c, tag, role})
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    for (const auto& ch : plane.channels)
      out.write(reinterpret_cast<const char*>(ch.data()),
                static_cast<std::streamsize>(sizeof(Scalar) * ch.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ImagePlane load_raw_plane(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "AGPLN001", 8) != 0)
    throw IoError("bad plane file: " + path.string());
  std::int32_t h, w, c, tag, role;
  for (std::int32_t* v : {&h, &w, &c, &tag, &role})
    in.read(reinterpret_cast<char*>(v), sizeof(*v));
  if (!in || h <= 0 || w <= 0 || c <= 0 || c > 4)
    throw IoError("corrupt plane file: " + path.string());
  ImagePlane plane;
  plane.range_tag = static_cast<RangeTag>(tag);
  plane.role = static_cast<PlaneRole>(role);
  plane.channels.resize(static_cast<std::size_t>(c));
  for (auto& ch : plane.channels) {
    ch.resize(h, w);
    in.read(reinterpret_cast<char*>(ch.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * ch.size()));
  }
  if (!in) throw IoError("truncated plane file: " + path.string());
  return plane;
}

}  // namespace anogen
