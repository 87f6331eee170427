#pragma once

#include <cstdint>
#include <vector>

#include "parcel/matrix.hpp"
#include "parcel/rng.hpp"

namespace parcel {

// Projection weights for one multi-head attention block. No biases.
struct AttentionParams {
  int width = 0;     // model dim, = heads * head_dim
  int heads = 0;
  int head_dim = 0;
  Matrix wq;  // width x width
  Matrix wk;
  Matrix wv;
  Matrix wo;
};

// Seeded uniform init in [-1/sqrt(width), +1/sqrt(width)].
AttentionParams make_attention_params(int width, int heads, Rng& rng);

struct AttentionOutput {
  Matrix output;    // n_q x width
  Matrix weights;   // n_q x n_kv, head-averaged post-softmax
};

// Everything the backward pass needs, captured during forward.
struct AttentionCache {
  Matrix queries;      // inputs
  Matrix keys_values;
  Matrix q_proj;       // n_q x width
  Matrix k_proj;       // n_kv x width
  Matrix v_proj;
  std::vector<Matrix> head_weights;  // per head: n_q x n_kv, post-softmax
};

// Scaled dot-product attention, heads concatenated then output-projected.
// Scale is 1/sqrt(head_dim). No positional terms.
AttentionOutput multi_head_attention(const AttentionParams& params,
                                     const Matrix& queries,
                                     const Matrix& keys_values,
                                     AttentionCache* cache = nullptr);

struct AttentionGrads {
  Matrix d_queries;
  Matrix d_keys_values;
};

// Backward of multi_head_attention with respect to both inputs,
// given d(output). Parameter gradients are not produced.
AttentionGrads multi_head_attention_backward(const AttentionParams& params,
                                             const AttentionCache& cache,
                                             const Matrix& d_output);

// Per-token zero-mean/unit-variance normalization with a learned scale.
struct LayerNorm {
  std::vector<double> gamma;  // one scale per channel
  double eps = 1e-6;
};

LayerNorm make_layer_norm(int width);

struct LayerNormCache {
  Matrix input;
  std::vector<double> mean;     // per row
  std::vector<double> inv_std;  // per row
};

Matrix layer_norm_forward(const LayerNorm& ln, const Matrix& x, LayerNormCache* cache = nullptr);
Matrix layer_norm_backward(const LayerNorm& ln, const LayerNormCache& cache, const Matrix& d_out);

double gelu(double x);
double gelu_grad(double x);

// Two-layer token MLP: gelu(x W1) W2. No biases.
struct Mlp {
  Matrix w1;  // width x hidden
  Matrix w2;  // hidden x width
};

Mlp make_mlp(int width, int hidden, Rng& rng);

struct MlpCache {
  Matrix input;
  Matrix pre_act;  // x W1
};

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache = nullptr);
Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& d_out);

}  // namespace parcel
