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

#ifndef GLDET_AFFM_HPP_
#define GLDET_AFFM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gldet/parameters.hpp"
#include "gldet/types.hpp"

namespace gldet {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

// How the final [tokens, d_model] matrix becomes the classifier input.
enum class FusionPooling { kFlatten, kMean, kGlobalToken };

const char* ToString(FusionPooling pooling);
FusionPooling ParseFusionPooling(const std::string& name);

struct FusionConfig {
  int d_model = kEmbeddingDim;
  int heads = 4;
  int layers = 3;
  int tokens = 7;
  FusionPooling pooling = FusionPooling::kFlatten;
  // Wraps every attention layer as LayerNorm(x + MHA(x)).
  bool residual_norm = false;
  // Softmax temperature uses sqrt(d_head) when set, sqrt(d_model) otherwise.
  bool scale_by_head_dim = true;

  int d_head() const { return d_model / heads; }
  double scale_dim() const { return scale_by_head_dim ? d_head() : d_model; }
  int classifier_inputs() const {
    return pooling == FusionPooling::kFlatten ? tokens * d_model : d_model;
  }
  void Validate() const;
  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

// softmax((q Wq)(k Wk)^T / sqrt(scale_dim)) (v Wv) for one head, using the
// row-vector convention: q, k, v are [T, d_model] and the projections are
// [d_model, d_head]. `weights` receives the [T, T] attention matrix.
Matrix AttentionHead(const ConstMatrixRef& q, const ConstMatrixRef& k,
                     const ConstMatrixRef& v, const ConstMatrixRef& w_q,
                     const ConstMatrixRef& w_k, const ConstMatrixRef& w_v,
                     double scale_dim, Matrix* weights = nullptr);

// Row-wise softmax with max subtraction.
Matrix SoftmaxRows(const Matrix& logits);

// Non-owning view of one attention layer. Head i owns column block
// [i * d_head, (i + 1) * d_head) of w_q, w_k, w_v and the matching row block
// of w_o.
struct AttentionLayerParams {
  ConstMatrixMap w_q;  // [d_model, heads * d_head]
  ConstMatrixMap w_k;
  ConstMatrixMap w_v;
  ConstMatrixMap w_o;  // [heads * d_head, d_model]
  int heads;
};

// Self-attention: Concat_i(h_i) W_o with Q = K = V = tokens.
Matrix MultiHeadAttention(const Matrix& tokens, const AttentionLayerParams& layer,
                          double scale_dim);

struct FusionTrace {
  struct Layer {
    Matrix input;
    Matrix q, k, v;  // [T, heads * d_head]
    std::vector<Matrix> attention;
    Matrix heads;    // concatenated head outputs
    Matrix mha;      // heads * W_o
    Matrix normed;   // LayerNorm output of (input + mha) when enabled
    std::vector<double> inv_std;
  };
  std::vector<Layer> layers;
  Matrix output;
  Matrix features;  // classifier input as a 1 x n row
  double logit = 0.0;
};

// Stack of bare multi-head self-attention layers followed by a linear
// classifier on the pooled token matrix.
class FusionStack {
 public:
  FusionStack(FusionConfig config, std::uint64_t seed);

  const FusionConfig& config() const { return config_; }
  AttentionLayerParams layer(int index) const;
  std::span<const double> classifier_weight() const;
  double classifier_bias() const;

  Matrix Fuse(const Matrix& tokens, FusionTrace* trace = nullptr) const;
  double Logit(const Matrix& tokens, FusionTrace* trace = nullptr) const;
  double Classify(const Matrix& tokens) const;

  // Accumulates d(logit)/d(params) * d_logit into `grad`; writes the token
  // gradient when d_tokens is non-null.
  void Backward(const FusionTrace& trace, double d_logit, std::span<double> grad,
                Matrix* d_tokens = nullptr) const;

  ParameterSet<double>& parameters() { return params_; }
  const ParameterSet<double>& parameters() const { return params_; }

 private:
  struct LayerOffsets {
    std::size_t w_q, w_k, w_v, w_o;
    std::size_t gamma = 0, beta = 0;
  };

  FusionConfig config_;
  ParameterSet<double> params_;
  std::vector<LayerOffsets> layers_;
  std::size_t cls_weight_ = 0;
  std::size_t cls_bias_ = 0;
};

double Sigmoid(double x);

// Stacks [global, patches...] into a [tokens, d_model] matrix.
Matrix TokensFromEmbeddings(const EmbeddingSet& embeddings);

// Fake-probability for one embedding set. Requires 1 + 6 embeddings for the
// default configuration.
double FuseAndClassify(const EmbeddingSet& embeddings, const FusionStack& stack);

}  // namespace gldet

#endif  // GLDET_AFFM_HPP_
