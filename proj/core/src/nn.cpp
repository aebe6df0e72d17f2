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

#include "gldet/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <limits>

namespace gldet::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

bool IsPointwise(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.pad == 0;
}

std::vector<float>& Scratch() {
  thread_local std::vector<float> buffer;
  return buffer;
}

// cols is [C*k*k, Ho*Wo] for image n. Working per image keeps cols in cache.
void Im2Col(const Activation& in, const ConvGeometry& g, int out_h, int out_w,
            int n, float* cols) {
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  const std::size_t row_len = out_plane;
  for (int c = 0; c < in.channels; ++c) {
    const float* src_c = in.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * row_len;
        {
          const float* src = src_c + n * in.image_plane();
          float* dst = row;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            float* d = dst + static_cast<std::size_t>(oy) * out_w;
            if (iy < 0 || iy >= in.height) {
              std::fill(d, d + out_w, 0.0f);
              continue;
            }
            const float* s = src + static_cast<std::size_t>(iy) * in.width;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              d[ox] = (ix >= 0 && ix < in.width) ? s[ix] : 0.0f;
            }
          }
        }
      }
    }
  }
}

// Accumulates the image n columns into d_in.
void Col2Im(const float* cols, const ConvGeometry& g, int out_h, int out_w,
            int n, Activation& d_in) {
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  const std::size_t row_len = out_plane;
  for (int c = 0; c < d_in.channels; ++c) {
    float* dst_c = d_in.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * row_len;
        {
          float* dst = dst_c + n * d_in.image_plane();
          const float* src = row;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= d_in.height) continue;
            float* d = dst + static_cast<std::size_t>(iy) * d_in.width;
            const float* s = src + static_cast<std::size_t>(oy) * out_w;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < d_in.width) d[ix] += s[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

void Conv2dForward(const Activation& in, const ConvGeometry& g,
                   const float* weight, Activation& out) {
  const int out_h = g.OutSize(in.height);
  const int out_w = g.OutSize(in.width);
  out = Activation(g.out_channels, in.batch, out_h, out_w);
  const Eigen::Index K = static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel;
  const Eigen::Index P = static_cast<Eigen::Index>(out.plane());
  ConstMatrixMap w(weight, g.out_channels, K);
  MatrixMap y(out.data.data(), g.out_channels, P);
  if (IsPointwise(g)) {
    y.noalias() = w * ConstMatrixMap(in.data.data(), K, P);
    return;
  }
  const Eigen::Index Q = static_cast<Eigen::Index>(out_h) * out_w;
  std::vector<float>& cols = Scratch();
  cols.resize(static_cast<std::size_t>(K) * Q);
  for (int n = 0; n < in.batch; ++n) {
    Im2Col(in, g, out_h, out_w, n, cols.data());
    y.middleCols(n * Q, Q).noalias() = w * ConstMatrixMap(cols.data(), K, Q);
  }
}

void Conv2dBackward(const Activation& in, const ConvGeometry& g,
                    const float* weight, const Activation& d_out,
                    float* d_weight, Activation* d_in) {
  const Eigen::Index K = static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel;
  const Eigen::Index P = static_cast<Eigen::Index>(d_out.plane());
  ConstMatrixMap dy(d_out.data.data(), g.out_channels, P);
  MatrixMap dw(d_weight, g.out_channels, K);
  ConstMatrixMap w(weight, g.out_channels, K);
  if (IsPointwise(g)) {
    ConstMatrixMap x(in.data.data(), K, P);
    dw.noalias() += dy * x.transpose();
    if (d_in != nullptr) {
      *d_in = Activation(in.channels, in.batch, in.height, in.width);
      MatrixMap(d_in->data.data(), K, P).noalias() = w.transpose() * dy;
    }
    return;
  }
  const Eigen::Index Q = static_cast<Eigen::Index>(d_out.height) * d_out.width;
  std::vector<float>& cols = Scratch();
  cols.resize(static_cast<std::size_t>(K) * Q);
  if (d_in != nullptr) *d_in = Activation(in.channels, in.batch, in.height, in.width);
  for (int n = 0; n < in.batch; ++n) {
    Im2Col(in, g, d_out.height, d_out.width, n, cols.data());
    dw.noalias() += dy.middleCols(n * Q, Q) * ConstMatrixMap(cols.data(), K, Q).transpose();
    if (d_in != nullptr) {
      MatrixMap(cols.data(), K, Q).noalias() = w.transpose() * dy.middleCols(n * Q, Q);
      Col2Im(cols.data(), g, d_out.height, d_out.width, n, *d_in);
    }
  }
}

void AffineForward(const Activation& in, const float* scale, const float* shift,
                   bool relu, Activation& out) {
  out = Activation(in.channels, in.batch, in.height, in.width);
  const std::size_t plane = in.plane();
  for (int c = 0; c < in.channels; ++c) {
    const float a = scale[c];
    const float b = shift[c];
    const float* x = in.channel(c);
    float* y = out.channel(c);
    if (relu) {
      for (std::size_t i = 0; i < plane; ++i) y[i] = std::max(0.0f, a * x[i] + b);
    } else {
      for (std::size_t i = 0; i < plane; ++i) y[i] = a * x[i] + b;
    }
  }
}

void AffineBackward(const Activation& in, const Activation& out,
                    const float* scale, bool relu, const Activation& d_out,
                    float* d_scale, float* d_shift, Activation& d_in) {
  d_in = Activation(in.channels, in.batch, in.height, in.width);
  const std::size_t plane = in.plane();
  for (int c = 0; c < in.channels; ++c) {
    const float* x = in.channel(c);
    const float* y = out.channel(c);
    const float* dy = d_out.channel(c);
    float* dx = d_in.channel(c);
    double ds = 0.0;
    double db = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const float g = (relu && y[i] <= 0.0f) ? 0.0f : dy[i];
      ds += static_cast<double>(g) * x[i];
      db += g;
      dx[i] = g * scale[c];
    }
    d_scale[c] += static_cast<float>(ds);
    d_shift[c] += static_cast<float>(db);
  }
}

void MaxPoolForward(const Activation& in, int kernel, int stride, int pad,
                    Activation& out, std::vector<int>& argmax) {
  const int out_h = (in.height + 2 * pad - kernel) / stride + 1;
  const int out_w = (in.width + 2 * pad - kernel) / stride + 1;
  out = Activation(in.channels, in.batch, out_h, out_w);
  argmax.assign(out.data.size(), -1);
  std::size_t o = 0;
  for (int c = 0; c < in.channels; ++c) {
    for (int n = 0; n < in.batch; ++n) {
      const std::size_t base = c * in.plane() + n * in.image_plane();
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          int best_i = -1;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= in.width) continue;
              const int idx = static_cast<int>(base + static_cast<std::size_t>(iy) * in.width + ix);
              if (in.data[idx] > best) {
                best = in.data[idx];
                best_i = idx;
              }
            }
          }
          out.data[o] = best;
          argmax[o] = best_i;
        }
      }
    }
  }
}

void MaxPoolBackward(const Activation& d_out, const std::vector<int>& argmax,
                     Activation& d_in) {
  std::fill(d_in.data.begin(), d_in.data.end(), 0.0f);
  for (std::size_t o = 0; o < d_out.data.size(); ++o) {
    if (argmax[o] >= 0) d_in.data[argmax[o]] += d_out.data[o];
  }
}

}  // namespace gldet::nn
