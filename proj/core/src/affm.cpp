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

#include "gldet/affm.hpp"

#include <cmath>

#include "gldet/error.hpp"
#include "gldet/rng.hpp"

namespace gldet {

namespace {

constexpr double kLayerNormEps = 1e-5;

void RequireFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " is not finite");
}

}  // namespace

const char* ToString(FusionPooling pooling) {
  switch (pooling) {
    case FusionPooling::kFlatten:
      return "flatten";
    case FusionPooling::kMean:
      return "mean";
    case FusionPooling::kGlobalToken:
      return "global_token";
  }
  return "flatten";
}

FusionPooling ParseFusionPooling(const std::string& name) {
  if (name == "flatten") return FusionPooling::kFlatten;
  if (name == "mean") return FusionPooling::kMean;
  if (name == "global_token") return FusionPooling::kGlobalToken;
  throw ArgumentError("unknown fusion pooling '" + name + "'");
}

void FusionConfig::Validate() const {
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw ArgumentError("fusion heads must divide d_model");
  }
  if (layers < 1 || tokens < 1) {
    throw ArgumentError("fusion needs at least one layer and one token");
  }
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Matrix AttentionHead(const ConstMatrixRef& q, const ConstMatrixRef& k,
                     const ConstMatrixRef& v, const ConstMatrixRef& w_q,
                     const ConstMatrixRef& w_k, const ConstMatrixRef& w_v,
                     double scale_dim, Matrix* weights) {
  if (q.rows() < 1) throw ArgumentError("attention needs at least one token");
  if (!q.allFinite() || !k.allFinite() || !v.allFinite()) {
    throw NumericError("attention input is not finite");
  }
  const Matrix qp = q * w_q;
  const Matrix kp = k * w_k;
  const Matrix vp = v * w_v;
  const Matrix p = SoftmaxRows(qp * kp.transpose() / std::sqrt(scale_dim));
  if (weights != nullptr) *weights = p;
  return p * vp;
}

Matrix MultiHeadAttention(const Matrix& tokens, const AttentionLayerParams& layer,
                          double scale_dim) {
  const Eigen::Index d_model = layer.w_q.rows();
  if (tokens.cols() != d_model || layer.w_o.cols() != d_model ||
      layer.w_q.cols() % layer.heads != 0) {
    throw ArgumentError("token matrix does not match attention layer shape");
  }
  const Eigen::Index dh = layer.w_q.cols() / layer.heads;
  Matrix concat(tokens.rows(), layer.w_q.cols());
  for (int i = 0; i < layer.heads; ++i) {
    concat.middleCols(i * dh, dh) =
        AttentionHead(tokens, tokens, tokens, layer.w_q.middleCols(i * dh, dh),
                      layer.w_k.middleCols(i * dh, dh),
                      layer.w_v.middleCols(i * dh, dh), scale_dim);
  }
  return concat * layer.w_o;
}

FusionStack::FusionStack(FusionConfig config, std::uint64_t seed)
    : config_(config) {
  config_.Validate();
  Rng rng = MakeRng(seed, {0xaff});
  const int d = config_.d_model;
  const int inner = config_.heads * config_.d_head();
  auto xavier = [&](std::size_t offset, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    double* p = params_.data() + offset;
    for (int i = 0; i < fan_in * fan_out; ++i) p[i] = u(rng);
  };
  for (int l = 0; l < config_.layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    LayerOffsets o;
    o.w_q = params_.Add(prefix + ".w_q", {d, inner});
    o.w_k = params_.Add(prefix + ".w_k", {d, inner});
    o.w_v = params_.Add(prefix + ".w_v", {d, inner});
    o.w_o = params_.Add(prefix + ".w_o", {inner, d});
    if (config_.residual_norm) {
      o.gamma = params_.Add(prefix + ".norm.gamma", {d});
      o.beta = params_.Add(prefix + ".norm.beta", {d});
    }
    layers_.push_back(o);
  }
  const int n_in = config_.classifier_inputs();
  cls_weight_ = params_.Add("classifier.weight", {1, n_in});
  cls_bias_ = params_.Add("classifier.bias", {1});

  for (const LayerOffsets& o : layers_) {
    xavier(o.w_q, d, inner);
    xavier(o.w_k, d, inner);
    xavier(o.w_v, d, inner);
    xavier(o.w_o, inner, d);
    if (config_.residual_norm) std::fill_n(params_.data() + o.gamma, d, 1.0);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (int i = 0; i < n_in; ++i) params_.data()[cls_weight_ + i] = u(rng);
}

AttentionLayerParams FusionStack::layer(int index) const {
  const LayerOffsets& o = layers_.at(index);
  const int d = config_.d_model;
  const int inner = config_.heads * config_.d_head();
  const double* p = params_.data();
  return {ConstMatrixMap(p + o.w_q, d, inner), ConstMatrixMap(p + o.w_k, d, inner),
          ConstMatrixMap(p + o.w_v, d, inner), ConstMatrixMap(p + o.w_o, inner, d),
          config_.heads};
}

std::span<const double> FusionStack::classifier_weight() const {
  return std::span<const double>(params_.data() + cls_weight_,
                                 config_.classifier_inputs());
}

double FusionStack::classifier_bias() const { return params_.data()[cls_bias_]; }

Matrix FusionStack::Fuse(const Matrix& tokens, FusionTrace* trace) const {
  if (tokens.rows() != config_.tokens || tokens.cols() != config_.d_model) {
    throw ArgumentError("fusion expects a " + std::to_string(config_.tokens) + "x" +
                        std::to_string(config_.d_model) + " token matrix");
  }
  RequireFinite(tokens, "fusion input");
  const int dh = config_.d_head();
  const double inv_scale = 1.0 / std::sqrt(config_.scale_dim());
  if (trace != nullptr) trace->layers.assign(layers_.size(), {});

  Matrix x = tokens;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const AttentionLayerParams p = layer(static_cast<int>(l));
    FusionTrace::Layer local;
    FusionTrace::Layer& t = trace != nullptr ? trace->layers[l] : local;
    t.input = x;
    t.q = x * p.w_q;
    t.k = x * p.w_k;
    t.v = x * p.w_v;
    t.heads.resize(x.rows(), p.w_q.cols());
    t.attention.resize(config_.heads);
    for (int i = 0; i < config_.heads; ++i) {
      t.attention[i] = SoftmaxRows(t.q.middleCols(i * dh, dh) *
                                   t.k.middleCols(i * dh, dh).transpose() * inv_scale);
      t.heads.middleCols(i * dh, dh) = t.attention[i] * t.v.middleCols(i * dh, dh);
    }
    t.mha = t.heads * p.w_o;
    if (!config_.residual_norm) {
      x = t.mha;
      continue;
    }
    const LayerOffsets& o = layers_[l];
    const Matrix z = t.input + t.mha;
    t.normed.resize(z.rows(), z.cols());
    t.inv_std.resize(z.rows());
    x.resize(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double mean = z.row(r).mean();
      const double var = (z.row(r).array() - mean).square().mean();
      t.inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
      t.normed.row(r) = (z.row(r).array() - mean) * t.inv_std[r];
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        x(r, c) = params_.data()[o.gamma + c] * t.normed(r, c) + params_.data()[o.beta + c];
      }
    }
  }
  if (trace != nullptr) trace->output = x;
  return x;
}

double FusionStack::Logit(const Matrix& tokens, FusionTrace* trace) const {
  FusionTrace local;
  FusionTrace& t = trace != nullptr ? *trace : local;
  const Matrix out = Fuse(tokens, &t);
  switch (config_.pooling) {
    case FusionPooling::kFlatten:
      t.features = ConstMatrixMap(out.data(), 1, out.size());
      break;
    case FusionPooling::kMean:
      t.features = out.colwise().mean();
      break;
    case FusionPooling::kGlobalToken:
      t.features = out.row(0);
      break;
  }
  const auto w = classifier_weight();
  double z = classifier_bias();
  for (Eigen::Index i = 0; i < t.features.cols(); ++i) z += w[i] * t.features(0, i);
  t.logit = z;
  if (!std::isfinite(z)) throw NumericError("fusion logit is not finite");
  return z;
}

double FusionStack::Classify(const Matrix& tokens) const {
  return Sigmoid(Logit(tokens));
}

void FusionStack::Backward(const FusionTrace& t, double d_logit,
                           std::span<double> grad, Matrix* d_tokens) const {
  if (grad.size() != params_.size()) throw ArgumentError("gradient buffer size mismatch");
  const int d = config_.d_model;
  const int inner = config_.heads * config_.d_head();
  const int dh = config_.d_head();
  const int T = config_.tokens;
  const double inv_scale = 1.0 / std::sqrt(config_.scale_dim());
  double* g = grad.data();

  const auto w = classifier_weight();
  const int n_in = config_.classifier_inputs();
  for (int i = 0; i < n_in; ++i) g[cls_weight_ + i] += d_logit * t.features(0, i);
  g[cls_bias_] += d_logit;

  Matrix dx = Matrix::Zero(T, d);
  switch (config_.pooling) {
    case FusionPooling::kFlatten:
      for (int i = 0; i < n_in; ++i) dx.data()[i] = d_logit * w[i];
      break;
    case FusionPooling::kMean:
      for (int r = 0; r < T; ++r) {
        for (int c = 0; c < d; ++c) dx(r, c) = d_logit * w[c] / T;
      }
      break;
    case FusionPooling::kGlobalToken:
      for (int c = 0; c < d; ++c) dx(0, c) = d_logit * w[c];
      break;
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const FusionTrace::Layer& tl = t.layers[l];
    const LayerOffsets& o = layers_[l];
    const AttentionLayerParams p = layer(static_cast<int>(l));

    Matrix d_mha;
    Matrix d_residual;
    if (config_.residual_norm) {
      const double* gamma = params_.data() + o.gamma;
      Matrix dz(T, d);
      for (int r = 0; r < T; ++r) {
        Eigen::RowVectorXd dxhat(d);
        for (int c = 0; c < d; ++c) {
          g[o.gamma + c] += dx(r, c) * tl.normed(r, c);
          g[o.beta + c] += dx(r, c);
          dxhat(c) = dx(r, c) * gamma[c];
        }
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat = (dxhat.array() * tl.normed.row(r).array()).mean();
        dz.row(r) = tl.inv_std[r] *
                    (dxhat.array() - mean_dxhat - tl.normed.row(r).array() * mean_dxhat_xhat)
                        .matrix();
      }
      d_mha = dz;
      d_residual = dz;
    } else {
      d_mha = dx;
    }

    MatrixMap(g + o.w_o, inner, d).noalias() += tl.heads.transpose() * d_mha;
    const Matrix d_heads = d_mha * p.w_o.transpose();
    Matrix dq(T, inner), dk(T, inner), dv(T, inner);
    for (int i = 0; i < config_.heads; ++i) {
      const Matrix& a = tl.attention[i];
      const auto d_hi = d_heads.middleCols(i * dh, dh);
      const Matrix d_a = d_hi * tl.v.middleCols(i * dh, dh).transpose();
      dv.middleCols(i * dh, dh) = a.transpose() * d_hi;
      Matrix d_s(T, T);
      for (int r = 0; r < T; ++r) {
        const double dot = a.row(r).dot(d_a.row(r));
        d_s.row(r) = a.row(r).array() * (d_a.row(r).array() - dot);
      }
      d_s *= inv_scale;
      dq.middleCols(i * dh, dh) = d_s * tl.k.middleCols(i * dh, dh);
      dk.middleCols(i * dh, dh) = d_s.transpose() * tl.q.middleCols(i * dh, dh);
    }
    MatrixMap(g + o.w_q, d, inner).noalias() += tl.input.transpose() * dq;
    MatrixMap(g + o.w_k, d, inner).noalias() += tl.input.transpose() * dk;
    MatrixMap(g + o.w_v, d, inner).noalias() += tl.input.transpose() * dv;
    dx = dq * p.w_q.transpose() + dk * p.w_k.transpose() + dv * p.w_v.transpose();
    if (config_.residual_norm) dx += d_residual;
  }
  if (d_tokens != nullptr) *d_tokens = std::move(dx);
}

Matrix TokensFromEmbeddings(const EmbeddingSet& embeddings) {
  const int n = 1 + static_cast<int>(embeddings.patches.size());
  Matrix tokens(n, kEmbeddingDim);
  auto put = [&](int row, const Embedding& e) {
    e.Validate();
    for (int c = 0; c < kEmbeddingDim; ++c) tokens(row, c) = e.values[c];
  };
  put(0, embeddings.global);
  for (int i = 1; i < n; ++i) put(i, embeddings.patches[i - 1]);
  return tokens;
}

double FuseAndClassify(const EmbeddingSet& embeddings, const FusionStack& stack) {
  const int n = 1 + static_cast<int>(embeddings.patches.size());
  if (n != stack.config().tokens) {
    throw ArgumentError("expected " + std::to_string(stack.config().tokens) +
                        " embeddings, got " + std::to_string(n));
  }
  return stack.Classify(TokensFromEmbeddings(embeddings));
}

}  // namespace gldet
