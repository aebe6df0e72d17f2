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

#include "gldet/backbone.hpp"

#include <cmath>

#include "gldet/error.hpp"

namespace gldet {

namespace {

constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};

struct StageSpec {
  int blocks;
  int width;  // bottleneck inner width; ignored by basic blocks
  int out;
  int stride;
};

}  // namespace

void BackboneConfig::Validate() const {
  if (architecture != kResNet50 && architecture != kResNetLite) {
    throw ArgumentError("unknown backbone architecture '" + architecture + "'");
  }
  if (embedding_dim != kEmbeddingDim) {
    throw ArgumentError("embedding_dim must be " + std::to_string(kEmbeddingDim));
  }
}

Backbone::Unit Backbone::AddUnit(const std::string& name, nn::ConvGeometry geom,
                                 bool relu, float scale_init, Rng& rng) {
  Unit u;
  u.name = name;
  u.geom = geom;
  u.relu = relu;
  u.weight = params_.Add(name + ".weight",
                         {geom.out_channels, geom.in_channels, geom.kernel, geom.kernel});
  u.scale = params_.Add(name + ".scale", {geom.out_channels});
  u.shift = params_.Add(name + ".shift", {geom.out_channels});
  // He-normal fan-in initialisation.
  const double fan_in = static_cast<double>(geom.in_channels) * geom.kernel * geom.kernel;
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  float* w = params_.data() + u.weight;
  for (std::size_t i = 0; i < geom.weight_size(); ++i) w[i] = static_cast<float>(normal(rng));
  std::fill_n(params_.data() + u.scale, geom.out_channels, scale_init);
  return u;
}

Backbone::Backbone(BackboneConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.Validate();
  Rng rng = MakeRng(seed, {0x6b62});

  std::vector<StageSpec> stages;
  bool bottleneck = false;
  int channels = 0;
  if (config_.architecture == kResNet50) {
    stem_ = AddUnit("stem", {3, 64, 7, 2, 3}, true, 1.0f, rng);
    stem_pool_ = true;
    downsampling_ = 4;
    channels = 64;
    bottleneck = true;
    stages = {{3, 64, 256, 1}, {4, 128, 512, 2}, {6, 256, 1024, 2}, {3, 512, 2048, 2}};
  } else {
    stem_ = AddUnit("stem", {3, 8, 4, 4, 0}, true, 1.0f, rng);
    downsampling_ = 4;
    channels = 8;
    stages = {{1, 0, 16, 2}, {1, 0, 32, 2}, {1, 0, 32, 2}};
  }

  // Stages are numbered from 2 so the last one matches the conventional
  // "conv5" stage of a residual network.
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const StageSpec& st = stages[s];
    for (int b = 0; b < st.blocks; ++b) {
      const int stride = b == 0 ? st.stride : 1;
      const std::string prefix =
          "stage" + std::to_string(s + 2) + ".block" + std::to_string(b + 1);
      Block block;
      // The last affine of each residual branch starts at zero so every block
      // is the identity (or its projection) at initialisation.
      if (bottleneck) {
        block.main.push_back(AddUnit(prefix + ".conv1", {channels, st.width, 1, 1, 0}, true, 1.0f, rng));
        block.main.push_back(AddUnit(prefix + ".conv2", {st.width, st.width, 3, stride, 1}, true, 1.0f, rng));
        block.main.push_back(AddUnit(prefix + ".conv3", {st.width, st.out, 1, 1, 0}, false, 0.0f, rng));
      } else {
        block.main.push_back(AddUnit(prefix + ".conv1", {channels, st.out, 3, stride, 1}, true, 1.0f, rng));
        block.main.push_back(AddUnit(prefix + ".conv2", {st.out, st.out, 3, 1, 1}, false, 0.0f, rng));
      }
      if (channels != st.out || stride != 1) {
        block.shortcut = AddUnit(prefix + ".shortcut", {channels, st.out, 1, stride, 0}, false, 1.0f, rng);
      }
      blocks_.push_back(std::move(block));
      block_names_.push_back(prefix);
      channels = st.out;
    }
    downsampling_ *= st.stride;
  }
  feature_channels_ = channels;

  head_weight_ = params_.Add("head.weight", {config_.embedding_dim, channels});
  head_bias_ = params_.Add("head.bias", {config_.embedding_dim});
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  float* hw = params_.data() + head_weight_;
  for (int i = 0; i < config_.embedding_dim * channels; ++i) {
    hw[i] = static_cast<float>(uniform(rng));
  }
}

std::string Backbone::feature_layer() const { return block_names_.back(); }

void Backbone::RunUnit(const Unit& u, const nn::Activation& in,
                       BackboneTrace::Unit& t) const {
  nn::Conv2dForward(in, u.geom, params_.data() + u.weight, t.conv_out);
  nn::AffineForward(t.conv_out, params_.data() + u.scale, params_.data() + u.shift,
                    u.relu, t.out);
}

void Backbone::UnitBackward(const Unit& u, const nn::Activation& in,
                            const BackboneTrace::Unit& t,
                            const nn::Activation& d_out, std::span<float> grad,
                            nn::Activation* d_in) const {
  nn::Activation d_conv;
  nn::AffineBackward(t.conv_out, t.out, params_.data() + u.scale, u.relu, d_out,
                     grad.data() + u.scale, grad.data() + u.shift, d_conv);
  nn::Conv2dBackward(in, u.geom, params_.data() + u.weight, d_conv,
                     grad.data() + u.weight, d_in);
}

std::vector<BackboneOutput> Backbone::Forward(std::span<const Image* const> images,
                                              EmbeddingKind kind,
                                              BackboneTrace* trace) const {
  if (images.empty()) return {};
  for (const Image* img : images) {
    if (img->width() != kInputSize || img->height() != kInputSize) {
      throw ArgumentError("backbone input must be 3x224x224, got 3x" +
                          std::to_string(img->height()) + "x" +
                          std::to_string(img->width()));
    }
  }
  BackboneTrace local;
  BackboneTrace& t = trace != nullptr ? *trace : local;
  const int n = static_cast<int>(images.size());

  t.input = nn::Activation(3, n, kInputSize, kInputSize);
  const std::size_t plane = static_cast<std::size_t>(kInputSize) * kInputSize;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < n; ++i) {
      const float* src = images[i]->channel(c).data();
      float* dst = t.input.channel(c) + i * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = (src[p] - kMean[c]) / kStd[c];
    }
  }

  RunUnit(stem_, t.input, t.stem);
  const nn::Activation* x = &t.stem.out;
  if (stem_pool_) {
    nn::MaxPoolForward(t.stem.out, 3, 2, 1, t.pooled_stem, t.pool_argmax);
    x = &t.pooled_stem;
  }

  t.blocks.assign(blocks_.size(), {});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& block = blocks_[b];
    BackboneTrace::Block& bt = t.blocks[b];
    bt.main.resize(block.main.size());
    const nn::Activation* h = x;
    for (std::size_t u = 0; u < block.main.size(); ++u) {
      RunUnit(block.main[u], *h, bt.main[u]);
      h = &bt.main[u].out;
    }
    const nn::Activation* skip = x;
    if (block.shortcut) {
      bt.shortcut.emplace();
      RunUnit(*block.shortcut, *x, *bt.shortcut);
      skip = &bt.shortcut->out;
    }
    bt.out = *h;
    for (std::size_t i = 0; i < bt.out.data.size(); ++i) {
      bt.out.data[i] = std::max(0.0f, bt.out.data[i] + skip->data[i]);
    }
    x = &bt.out;
  }

  const nn::Activation& f = *x;
  const int c_out = f.channels;
  const std::size_t fplane = f.image_plane();
  t.pooled.assign(static_cast<std::size_t>(c_out) * n, 0.0f);
  for (int c = 0; c < c_out; ++c) {
    for (int i = 0; i < n; ++i) {
      const float* src = f.channel(c) + i * fplane;
      double acc = 0.0;
      for (std::size_t p = 0; p < fplane; ++p) acc += src[p];
      t.pooled[static_cast<std::size_t>(c) * n + i] = static_cast<float>(acc / fplane);
    }
  }

  const int e_dim = config_.embedding_dim;
  const float* hw = params_.data() + head_weight_;
  const float* hb = params_.data() + head_bias_;
  std::vector<BackboneOutput> out(n);
  for (int i = 0; i < n; ++i) {
    BackboneOutput& o = out[i];
    o.feature_map.channels = c_out;
    o.feature_map.height = f.height;
    o.feature_map.width = f.width;
    o.feature_map.source = feature_layer();
    o.feature_map.data.resize(static_cast<std::size_t>(c_out) * fplane);
    for (int c = 0; c < c_out; ++c) {
      std::copy_n(f.channel(c) + i * fplane, fplane, o.feature_map.data.data() + c * fplane);
    }
    o.embedding.kind = kind;
    o.embedding.values.resize(e_dim);
    for (int e = 0; e < e_dim; ++e) {
      double acc = hb[e];
      for (int c = 0; c < c_out; ++c) {
        acc += static_cast<double>(hw[static_cast<std::size_t>(e) * c_out + c]) *
               t.pooled[static_cast<std::size_t>(c) * n + i];
      }
      o.embedding.values[e] = static_cast<float>(acc);
    }
  }
  return out;
}

BackboneOutput Backbone::Extract(const Image& image, EmbeddingKind kind) const {
  const Image* p = &image;
  return std::move(Forward(std::span<const Image* const>(&p, 1), kind, nullptr).front());
}

std::vector<BackboneOutput> Backbone::ExtractBatch(std::span<const Image> images,
                                                   EmbeddingKind kind) const {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const Image& img : images) ptrs.push_back(&img);
  return Forward(ptrs, kind, nullptr);
}

void Backbone::Backward(const BackboneTrace& t, std::span<const float> d_embeddings,
                        std::span<float> grad,
                        std::vector<std::vector<float>>* d_inputs) const {
  if (grad.size() != params_.size()) throw ArgumentError("gradient buffer size mismatch");
  const nn::Activation& f = t.blocks.empty() ? t.stem.out : t.blocks.back().out;
  const int n = f.batch;
  const int c_out = f.channels;
  const int e_dim = config_.embedding_dim;
  if (d_embeddings.size() != static_cast<std::size_t>(n) * e_dim) {
    throw ArgumentError("embedding gradient has the wrong size");
  }

  const float* hw = params_.data() + head_weight_;
  float* d_hw = grad.data() + head_weight_;
  float* d_hb = grad.data() + head_bias_;
  std::vector<float> d_pooled(static_cast<std::size_t>(c_out) * n, 0.0f);
  for (int i = 0; i < n; ++i) {
    const float* de = d_embeddings.data() + static_cast<std::size_t>(i) * e_dim;
    for (int e = 0; e < e_dim; ++e) {
      d_hb[e] += de[e];
      for (int c = 0; c < c_out; ++c) {
        d_hw[static_cast<std::size_t>(e) * c_out + c] +=
            de[e] * t.pooled[static_cast<std::size_t>(c) * n + i];
        d_pooled[static_cast<std::size_t>(c) * n + i] +=
            hw[static_cast<std::size_t>(e) * c_out + c] * de[e];
      }
    }
  }

  nn::Activation d_x(c_out, n, f.height, f.width);
  const std::size_t fplane = f.image_plane();
  for (int c = 0; c < c_out; ++c) {
    for (int i = 0; i < n; ++i) {
      const float g = d_pooled[static_cast<std::size_t>(c) * n + i] / static_cast<float>(fplane);
      std::fill_n(d_x.channel(c) + i * fplane, fplane, g);
    }
  }

  for (std::size_t b = blocks_.size(); b-- > 0;) {
    const Block& block = blocks_[b];
    const BackboneTrace::Block& bt = t.blocks[b];
    const nn::Activation& block_in =
        b > 0 ? t.blocks[b - 1].out : (stem_pool_ ? t.pooled_stem : t.stem.out);
    nn::Activation d_sum = d_x;
    for (std::size_t i = 0; i < d_sum.data.size(); ++i) {
      if (bt.out.data[i] <= 0.0f) d_sum.data[i] = 0.0f;
    }
    nn::Activation d_h = d_sum;
    for (std::size_t u = block.main.size(); u-- > 0;) {
      const nn::Activation& in = u > 0 ? bt.main[u - 1].out : block_in;
      nn::Activation d_in;
      UnitBackward(block.main[u], in, bt.main[u], d_h, grad, &d_in);
      d_h = std::move(d_in);
    }
    if (block.shortcut) {
      nn::Activation d_skip;
      UnitBackward(*block.shortcut, block_in, *bt.shortcut, d_sum, grad, &d_skip);
      for (std::size_t i = 0; i < d_h.data.size(); ++i) d_h.data[i] += d_skip.data[i];
    } else {
      for (std::size_t i = 0; i < d_h.data.size(); ++i) d_h.data[i] += d_sum.data[i];
    }
    d_x = std::move(d_h);
  }

  if (stem_pool_) {
    nn::Activation d_stem(t.stem.out.channels, n, t.stem.out.height, t.stem.out.width);
    nn::MaxPoolBackward(d_x, t.pool_argmax, d_stem);
    d_x = std::move(d_stem);
  }
  nn::Activation d_input;
  UnitBackward(stem_, t.input, t.stem, d_x, grad, d_inputs != nullptr ? &d_input : nullptr);

  if (d_inputs != nullptr) {
    const std::size_t plane = static_cast<std::size_t>(kInputSize) * kInputSize;
    d_inputs->assign(n, std::vector<float>(3 * plane));
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) {
        const float* src = d_input.channel(c) + i * plane;
        float* dst = (*d_inputs)[i].data() + c * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] / kStd[c];
      }
    }
  }
}

}  // namespace gldet
