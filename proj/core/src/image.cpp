/*
 * Copyright 2026 The gldet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gldet/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "gldet/error.hpp"

namespace gldet {

bool Intersects(const Rect& a, const Rect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h &&
         b.y < a.y + a.h;
}

Image::Image(int width, int height)
    : width_(width),
      height_(height),
      data_(static_cast<size_t>(kChannels) * width * height, 0.0f),
      original_size_{width, height} {
  if (width <= 0 || height <= 0) {
    throw ArgumentError("image dimensions must be positive");
  }
}

Image::Image(int width, int height, std::vector<float> data,
             std::string source_path)
    : width_(width),
      height_(height),
      data_(std::move(data)),
      source_path_(std::move(source_path)),
      original_size_{width, height} {
  if (width <= 0 || height <= 0) {
    throw ArgumentError("image dimensions must be positive");
  }
  if (data_.size() != static_cast<size_t>(kChannels) * width * height) {
    throw ArgumentError("image data size does not match 3 x height x width");
  }
}

void Image::Validate() const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValidationError("image value outside [0, 1] in '" + source_path_ +
                            "'");
    }
  }
}

std::uint8_t ToByte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

namespace {

Image FromInterleaved(const std::uint8_t* rgb, int width, int height,
                      const std::string& source_path) {
  Image img(width, height);
  const size_t plane = static_cast<size_t>(width) * height;
  auto data = img.mutable_data();
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < Image::kChannels; ++c) {
      data[c * plane + i] = static_cast<float>(rgb[i * 3 + c]) / 255.0f;
    }
  }
  img.set_source_path(source_path);
  return img;
}

std::vector<std::uint8_t> ToInterleaved(const Image& image) {
  const size_t plane = static_cast<size_t>(image.width()) * image.height();
  std::vector<std::uint8_t> rgb(plane * 3);
  auto data = image.data();
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < Image::kChannels; ++c) {
      rgb[i * 3 + c] = ToByte(data[c * plane + i]);
    }
  }
  return rgb;
}

bool IsPng(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G',
                                           '\r', '\n', 0x1a, '\n'};
  return b.size() >= 8 && std::equal(kSig, kSig + 8, b.begin());
}

bool IsJpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff;
}

Image DecodePng(std::span<const std::uint8_t> bytes,
                const std::string& source_path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("png decode failed for '" + source_path + "': " + msg);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("png decode failed for '" + source_path + "': " + msg);
  }
  return FromInterleaved(rgb.data(), static_cast<int>(png.width),
                         static_cast<int>(png.height), source_path);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image DecodeJpeg(std::span<const std::uint8_t> bytes,
                 const std::string& source_path) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = JpegErrorExit;
  std::vector<std::uint8_t> rgb;
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("jpeg decode failed for '" + source_path +
                      "': " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  rgb.resize(static_cast<size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<size_t>(cinfo.output_scanline) *
                                    width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return FromInterleaved(rgb.data(), width, height, source_path);
}

}  // namespace

Image DecodeImage(std::span<const std::uint8_t> bytes,
                  const std::string& source_path) {
  if (IsPng(bytes)) return DecodePng(bytes, source_path);
  if (IsJpeg(bytes)) return DecodeJpeg(bytes, source_path);
  throw DecodeError("'" + source_path + "' is neither PNG nor JPEG");
}

Image LoadImage(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read image '" + path.string() + "'");
  Image img = DecodeImage(bytes, path.string());
  img.set_original_size(img.size());
  return img;
}

std::vector<std::uint8_t> EncodePng(const Image& image) {
  const std::vector<std::uint8_t> rgb = ToInterleaved(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png.flags |= PNG_IMAGE_FLAG_FAST;
  // Worst case bound so the image is compressed only once.
  png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(png);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, rgb.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void SavePng(const Image& image, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = EncodePng(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> EncodeJpeg(const Image& image, int quality) {
  if (quality < 1 || quality > 100) {
    throw ArgumentError("jpeg quality must be in [1, 100]");
  }
  const std::vector<std::uint8_t> rgb = ToInterleaved(image);
  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = JpegErrorExit;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw IoError(std::string("jpeg encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  cinfo.dct_method = JDCT_ISLOW;
  for (int c = 0; c < 3; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  const int stride = image.width() * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<std::uint8_t*>(rgb.data()) +
                   static_cast<size_t>(cinfo.next_scanline) * stride;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

Image ResizeBilinear(const Image& image, ImageSize size) {
  if (size.width <= 0 || size.height <= 0) {
    throw ArgumentError("resize target must be positive");
  }
  if (size == image.size()) return image;

  struct Tap {
    int i0, i1;
    float w1;
  };
  auto taps = [](int out, int in) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double src = (o + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, static_cast<float>(src - i0)};
    }
    return t;
  };
  const std::vector<Tap> xs = taps(size.width, image.width());
  const std::vector<Tap> ys = taps(size.height, image.height());

  Image out(size.width, size.height);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < size.height; ++y) {
      const Tap& ty = ys[y];
      for (int x = 0; x < size.width; ++x) {
        const Tap& tx = xs[x];
        const float top = image.at(c, ty.i0, tx.i0) * (1.0f - tx.w1) +
                          image.at(c, ty.i0, tx.i1) * tx.w1;
        const float bottom = image.at(c, ty.i1, tx.i0) * (1.0f - tx.w1) +
                             image.at(c, ty.i1, tx.i1) * tx.w1;
        out.at(c, y, x) =
            std::clamp(top * (1.0f - ty.w1) + bottom * ty.w1, 0.0f, 1.0f);
      }
    }
  }
  out.set_source_path(image.source_path());
  out.set_original_size(image.original_size());
  return out;
}

Image Crop(const Image& image, const Rect& rect) {
  if (rect.w <= 0 || rect.h <= 0 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.w > image.width() || rect.y + rect.h > image.height()) {
    throw ArgumentError("crop rectangle outside image");
  }
  Image out(rect.w, rect.h);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < rect.h; ++y) {
      for (int x = 0; x < rect.w; ++x) {
        out.at(c, y, x) = image.at(c, rect.y + y, rect.x + x);
      }
    }
  }
  out.set_source_path(image.source_path());
  return out;
}

}  // namespace gldet
