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

#ifndef GLDET_NN_HPP_
#define GLDET_NN_HPP_

#include <cstddef>
#include <vector>

namespace gldet::nn {

// Batch activations stored channel-major as [C, N, H, W], which makes a
// convolution a single GEMM over the whole batch.
struct Activation {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Activation() = default;
  Activation(int c, int n, int h, int w)
      : channels(c), batch(n), height(h), width(w),
        data(static_cast<std::size_t>(c) * n * h * w, 0.0f) {}

  std::size_t plane() const { return static_cast<std::size_t>(batch) * height * width; }
  std::size_t image_plane() const { return static_cast<std::size_t>(height) * width; }
  float* channel(int c) { return data.data() + c * plane(); }
  const float* channel(int c) const { return data.data() + c * plane(); }
  bool SameShape(const Activation& o) const {
    return channels == o.channels && batch == o.batch && height == o.height &&
           width == o.width;
  }
};

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  int OutSize(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_size() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }
};

// Weights are [out, in, k, k] row-major. No bias; a channel affine follows
// every convolution in the backbone.
void Conv2dForward(const Activation& in, const ConvGeometry& g,
                   const float* weight, Activation& out);

// Accumulates into d_weight; overwrites *d_in when non-null.
void Conv2dBackward(const Activation& in, const ConvGeometry& g,
                    const float* weight, const Activation& d_out,
                    float* d_weight, Activation* d_in);

// y = scale[c] * x + shift[c], optionally followed by ReLU.
void AffineForward(const Activation& in, const float* scale, const float* shift,
                   bool relu, Activation& out);

// `in` is the affine input and `out` its output. Accumulates parameter
// gradients; writes d_in.
void AffineBackward(const Activation& in, const Activation& out,
                    const float* scale, bool relu, const Activation& d_out,
                    float* d_scale, float* d_shift, Activation& d_in);

void MaxPoolForward(const Activation& in, int kernel, int stride, int pad,
                    Activation& out, std::vector<int>& argmax);
void MaxPoolBackward(const Activation& d_out, const std::vector<int>& argmax,
                     Activation& d_in);

}  // namespace gldet::nn

#endif  // GLDET_NN_HPP_
