#ifndef STGAN_IMAGE_IO_HPP
#define STGAN_IMAGE_IO_HPP

// 8/16-bit single-channel PNG and TIFF reading and writing.

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "stgan/error.hpp"

namespace stgan::io {

struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;  // row-major raw integer values
};

enum class ImageFormat { Png, Tiff };

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

inline ImageFormat format_for(const std::filesystem::path& p) {
  const auto ext = lower_extension(p);
  if (ext == ".png") return ImageFormat::Png;
  if (ext == ".tif" || ext == ".tiff") return ImageFormat::Tiff;
  fail(Errc::DiskError, "unsupported image extension: " + p.string());
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& p, const char* mode) {
  FilePtr f(std::fopen(p.string().c_str(), mode));
  require(f != nullptr, Errc::DiskError, "cannot open " + p.string());
  return f;
}

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}
inline void png_warning_fn(png_structp, png_const_charp) {}

inline GrayImage read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, Errc::DiskError, "libpng initialisation failed");
  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  bool unsupported = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Errc::DiskError, "cannot decode " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
    unsupported = true;
  } else {
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.bit_depth = depth;
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * img.height);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = buffer.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  require(!unsupported, Errc::UnsupportedBitDepth,
          path.string() + ": only 8- or 16-bit grayscale PNG is supported (depth " + std::to_string(depth) + ")");

  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const png_byte* row = rows[y];
      img.pixels[static_cast<std::size_t>(y) * img.width + x] =
          depth == 8 ? row[x] : static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  return img;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  auto file = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, Errc::DiskError, "libpng initialisation failed");
  const int bytes = img.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * bytes);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Errc::DiskError, "cannot encode " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint16_t v = img.pixels[static_cast<std::size_t>(y) * img.width + x];
      if (bytes == 1) {
        row[x] = static_cast<png_byte>(v);
      } else {
        row[2 * x] = static_cast<png_byte>(v >> 8);
        row[2 * x + 1] = static_cast<png_byte>(v & 0xFF);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void silence_libtiff() {
  static const bool once = [] {
    TIFFSetWarningHandler(nullptr);
    TIFFSetErrorHandler(nullptr);
    return true;
  }();
  (void)once;
}

struct TiffCloser {
  void operator()(TIFF* t) const {
    if (t) TIFFClose(t);
  }
};

inline GrayImage read_tiff(const std::filesystem::path& path) {
  silence_libtiff();
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.string().c_str(), "r"));
  require(tif != nullptr, Errc::DiskError, "cannot open TIFF " + path.string());
  std::uint32_t w = 0, h = 0;
  std::uint16_t bps = 0, spp = 1;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetField(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  require(spp == 1 && (bps == 8 || bps == 16), Errc::UnsupportedBitDepth,
          path.string() + ": only 8- or 16-bit single-channel TIFF is supported");
  GrayImage img{static_cast<int>(w), static_cast<int>(h), bps, {}};
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  std::vector<unsigned char> line(TIFFScanlineSize(tif.get()));
  for (std::uint32_t y = 0; y < h; ++y) {
    require(TIFFReadScanline(tif.get(), line.data(), y) == 1, Errc::DiskError, "cannot read TIFF row in " + path.string());
    for (std::uint32_t x = 0; x < w; ++x) {
      std::uint16_t v;
      if (bps == 8) {
        v = line[x];
      } else {
        std::memcpy(&v, line.data() + 2 * x, 2);  // libtiff delivers native byte order
      }
      img.pixels[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return img;
}

inline void write_tiff(const std::filesystem::path& path, const GrayImage& img) {
  silence_libtiff();
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.string().c_str(), "w"));
  require(tif != nullptr, Errc::DiskError, "cannot create TIFF " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(img.width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(img.height));
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(img.bit_depth));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(img.height));
  const int bytes = img.bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> line(static_cast<std::size_t>(img.width) * bytes);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint16_t v = img.pixels[static_cast<std::size_t>(y) * img.width + x];
      if (bytes == 1)
        line[x] = static_cast<unsigned char>(v);
      else
        std::memcpy(line.data() + 2 * x, &v, 2);
    }
    require(TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y), 0) == 1, Errc::DiskError,
            "cannot write TIFF row to " + path.string());
  }
}

}  // namespace detail

inline GrayImage read_image(const std::filesystem::path& path) {
  return format_for(path) == ImageFormat::Png ? detail::read_png(path) : detail::read_tiff(path);
}

inline void write_image(const std::filesystem::path& path, const GrayImage& img) {
  require(img.bit_depth == 8 || img.bit_depth == 16, Errc::UnsupportedBitDepth, "bit depth must be 8 or 16");
  if (format_for(path) == ImageFormat::Png)
    detail::write_png(path, img);
  else
    detail::write_tiff(path, img);
}

}  // namespace stgan::io

#endif  // STGAN_IMAGE_IO_HPP
