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

#ifndef GLDET_IMAGE_HPP_
#define GLDET_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gldet {

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Axis-aligned rectangle in pixel coordinates, origin top-left.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

bool Intersects(const Rect& a, const Rect& b);

// Decoded RGB image stored channel-major (C x H x W) with values in [0, 1].
//
// `original_size` is the pixel size of the decoded file. Resizing keeps it, so
// downstream code can map coordinates back to the image as it was loaded.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height);
  Image(int width, int height, std::vector<float> data,
        std::string source_path = {});

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {width_, height_}; }
  bool empty() const { return data_.empty(); }

  ImageSize original_size() const { return original_size_; }
  void set_original_size(ImageSize size) { original_size_ = size; }
  const std::string& source_path() const { return source_path_; }
  void set_source_path(std::string path) { source_path_ = std::move(path); }

  float at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
  }
  float& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }
  std::span<const float> channel(int c) const {
    return std::span<const float>(data_).subspan(
        static_cast<size_t>(c) * height_ * width_,
        static_cast<size_t>(height_) * width_);
  }

  // Throws ValidationError unless every value is finite and inside [0, 1].
  void Validate() const;

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
  std::string source_path_;
  ImageSize original_size_;
};

// PNG or JPEG, detected from the file signature. Grayscale and alpha inputs
// are converted to RGB.
Image LoadImage(const std::filesystem::path& path);
Image DecodeImage(std::span<const std::uint8_t> bytes,
                  const std::string& source_path = {});

void SavePng(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> EncodePng(const Image& image);

// Baseline JPEG with 4:4:4 chroma sampling.
std::vector<std::uint8_t> EncodeJpeg(const Image& image, int quality);

// Half-pixel-centred bilinear resampling with edge clamping.
Image ResizeBilinear(const Image& image, ImageSize size);

// Copies `rect` out of `image`; the rectangle must lie inside the image.
Image Crop(const Image& image, const Rect& rect);

std::uint8_t ToByte(float v);

}  // namespace gldet

#endif  // GLDET_IMAGE_HPP_
