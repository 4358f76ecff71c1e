#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "siamte/errors.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

namespace detail {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

inline Tensor from_interleaved_rgb(const std::vector<unsigned char>& buf, int h, int w) {
  Tensor t(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ci = 0; ci < 3; ++ci) t.at(ci, y, x) = double(buf[(size_t(y) * w + x) * 3 + ci]);
  return t;
}

inline std::vector<unsigned char> to_interleaved_rgb(const Tensor& t) {
  if (t.c != 3) throw ConfigError("expected 3-channel image, got " + t.shape_str());
  std::vector<unsigned char> buf(size_t(t.h) * t.w * 3);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      for (int ci = 0; ci < 3; ++ci) {
        double v = std::nearbyint(t.at(ci, y, x));
        buf[(size_t(y) * t.w + x) * 3 + ci] = (unsigned char)std::min(255.0, std::max(0.0, v));
      }
  return buf;
}

}  // namespace detail

/// Decode a baseline/progressive JPEG byte stream to 8-bit RGB.
inline Tensor decode_jpeg(const std::vector<unsigned char>& bytes) {
  jpeg_decompress_struct cinfo;
  detail::JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = detail::jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw MissingInputError("JPEG decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), (unsigned long)bytes.size());
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    throw MissingInputError("not a JPEG stream");
  }
  if (cinfo.num_components == 1) {
    jpeg_destroy_decompress(&cinfo);
    throw ConfigError("grayscale images are not accepted");
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  int w = cinfo.output_width, h = cinfo.output_height;
  std::vector<unsigned char> buf(size_t(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = buf.data() + size_t(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return detail::from_interleaved_rgb(buf, h, w);
}

/// Encode to baseline sequential JPEG. Settings are pinned for bit-exact
/// reproducibility: force_baseline, default 4:2:0 chroma subsampling, standard
/// quantization-table scaling, no optimized Huffman coding.
inline std::vector<unsigned char> encode_jpeg(const Tensor& img, int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("JPEG quality must be in [1,100]");
  auto buf = detail::to_interleaved_rgb(img);

  jpeg_compress_struct cinfo;
  detail::JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = detail::jpeg_error_exit;
  unsigned char* out = nullptr;
  unsigned long out_len = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (out) free(out);
    throw NumericError("JPEG encode failed");
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out, &out_len);
  cinfo.image_width = img.w;
  cinfo.image_height = img.h;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE /* force baseline */);
  cinfo.optimize_coding = FALSE;
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    unsigned char* row = buf.data() + size_t(cinfo.next_scanline) * img.w * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<unsigned char> bytes(out, out + out_len);
  jpeg_destroy_compress(&cinfo);
  free(out);
  return bytes;
}

inline Tensor decode_png(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw MissingInputError("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  struct Reader {
    const unsigned char* p;
    size_t left;
  } reader{bytes.data(), bytes.size()};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MissingInputError("PNG decode failed");
  }
  png_set_read_fn(png, &reader, [](png_structp p, png_bytep out, png_size_t n) {
    auto* r = static_cast<Reader*>(png_get_io_ptr(p));
    if (n > r->left) png_error(p, "truncated PNG");
    std::memcpy(out, r->p, n);
    r->p += n;
    r->left -= n;
  });
  png_read_info(png, info);
  int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("grayscale images are not accepted");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  int w = png_get_image_width(png, info);
  int h = png_get_image_height(png, info);
  std::vector<unsigned char> buf(size_t(h) * w * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + size_t(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return detail::from_interleaved_rgb(buf, h, w);
}

inline std::vector<unsigned char> encode_png(const Tensor& img) {
  auto buf = detail::to_interleaved_rgb(img);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  std::vector<unsigned char> bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw NumericError("PNG encode failed");
  }
  png_set_write_fn(
      png, &bytes,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* b = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(p));
        b->insert(b->end(), data, data + n);
      },
      [](png_structp) {});
  png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.h);
  for (int y = 0; y < img.h; ++y) rows[y] = buf.data() + size_t(y) * img.w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return bytes;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open file: " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const void* data, size_t n) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open file for writing: " + path.string());
  f.write(static_cast<const char*>(data), std::streamsize(n));
  if (!f) throw MissingInputError("write failed: " + path.string());
}

/// Decode a PNG or JPEG file (sniffed by signature) to 8-bit RGB in [0,255].
inline Tensor load_image(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) return decode_jpeg(bytes);
  throw MissingInputError("unsupported image format: " + path.string());
}

inline void save_png(const std::filesystem::path& path, const Tensor& img) {
  auto bytes = encode_png(img);
  write_file_bytes(path, bytes.data(), bytes.size());
}

}  // namespace siamte
