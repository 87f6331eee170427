#include "parcel/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace parcel {

static Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

AttentionParams make_attention_params(int width, int heads, Rng& rng) {
  if (width <= 0 || heads <= 0 || width % heads != 0) {
    throw std::invalid_argument("make_attention_params: width " + std::to_string(width) +
                                " not divisible by heads " + std::to_string(heads));
  }
  AttentionParams p;
  p.width = width;
  p.heads = heads;
  p.head_dim = width / heads;
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  p.wq = uniform_matrix(width, width, bound, rng);
  p.wk = uniform_matrix(width, width, bound, rng);
  p.wv = uniform_matrix(width, width, bound, rng);
  p.wo = uniform_matrix(width, width, bound, rng);
  return p;
}

static Matrix head_slice(const Matrix& m, int head, int head_dim) {
  Matrix out(m.rows, head_dim);
  const int off = head * head_dim;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < head_dim; ++j) out.at(i, j) = m.at(i, off + j);
  return out;
}

static void head_place(Matrix& dst, const Matrix& src, int head, int head_dim) {
  const int off = head * head_dim;
  for (int i = 0; i < src.rows; ++i)
    for (int j = 0; j < head_dim; ++j) dst.at(i, off + j) = src.at(i, j);
}

static void head_accumulate(Matrix& dst, const Matrix& src, int head, int head_dim) {
  const int off = head * head_dim;
  for (int i = 0; i < src.rows; ++i)
    for (int j = 0; j < head_dim; ++j) dst.at(i, off + j) += src.at(i, j);
}

AttentionOutput multi_head_attention(const AttentionParams& params,
                                     const Matrix& queries,
                                     const Matrix& keys_values,
                                     AttentionCache* cache) {
  if (queries.cols != params.width || keys_values.cols != params.width) {
    throw std::invalid_argument("multi_head_attention: token width " +
                                std::to_string(queries.cols) + "/" +
                                std::to_string(keys_values.cols) + " != params width " +
                                std::to_string(params.width));
  }
  const int n_q = queries.rows;
  const int n_kv = keys_values.rows;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));

  const Matrix q_proj = matmul(queries, params.wq);
  const Matrix k_proj = matmul(keys_values, params.wk);
  const Matrix v_proj = matmul(keys_values, params.wv);

  Matrix mixed(n_q, params.width);
  Matrix avg_weights(n_q, n_kv);
  std::vector<Matrix> head_weights;
  head_weights.reserve(params.heads);

  for (int h = 0; h < params.heads; ++h) {
    const Matrix qh = head_slice(q_proj, h, params.head_dim);
    const Matrix kh = head_slice(k_proj, h, params.head_dim);
    const Matrix vh = head_slice(v_proj, h, params.head_dim);
    const Matrix scores = scale(matmul(qh, transpose(kh)), inv_scale);
    const Matrix probs = softmax_rows(scores);
    head_place(mixed, matmul(probs, vh), h, params.head_dim);
    for (std::size_t i = 0; i < probs.data.size(); ++i) avg_weights.data[i] += probs.data[i];
    head_weights.push_back(probs);
  }
  for (double& w : avg_weights.data) w /= params.heads;

  AttentionOutput out;
  out.output = matmul(mixed, params.wo);
  out.weights = std::move(avg_weights);
  if (cache != nullptr) {
    cache->queries = queries;
    cache->keys_values = keys_values;
    cache->q_proj = q_proj;
    cache->k_proj = k_proj;
    cache->v_proj = v_proj;
    cache->head_weights = std::move(head_weights);
  }
  return out;
}

AttentionGrads multi_head_attention_backward(const AttentionParams& params,
                                             const AttentionCache& cache,
                                             const Matrix& d_output) {
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  const Matrix d_mixed = matmul(d_output, transpose(params.wo));

  Matrix d_q_proj(cache.q_proj.rows, params.width);
  Matrix d_k_proj(cache.k_proj.rows, params.width);
  Matrix d_v_proj(cache.v_proj.rows, params.width);

  for (int h = 0; h < params.heads; ++h) {
    const Matrix qh = head_slice(cache.q_proj, h, params.head_dim);
    const Matrix kh = head_slice(cache.k_proj, h, params.head_dim);
    const Matrix vh = head_slice(cache.v_proj, h, params.head_dim);
    const Matrix& probs = cache.head_weights[h];
    const Matrix d_out_h = head_slice(d_mixed, h, params.head_dim);

    const Matrix d_probs = matmul(d_out_h, transpose(vh));
    const Matrix d_vh = matmul(transpose(probs), d_out_h);
    const Matrix d_scores = scale(softmax_rows_backward(probs, d_probs), inv_scale);
    const Matrix d_qh = matmul(d_scores, kh);
    const Matrix d_kh = matmul(transpose(d_scores), qh);

    head_accumulate(d_q_proj, d_qh, h, params.head_dim);
    head_accumulate(d_k_proj, d_kh, h, params.head_dim);
    head_accumulate(d_v_proj, d_vh, h, params.head_dim);
  }

  AttentionGrads grads;
  grads.d_queries = matmul(d_q_proj, transpose(params.wq));
  grads.d_keys_values =
      add(matmul(d_k_proj, transpose(params.wk)), matmul(d_v_proj, transpose(params.wv)));
  return grads;
}

LayerNorm make_layer_norm(int width) {
  LayerNorm ln;
  ln.gamma.assign(width, 1.0);
  return ln;
}

Matrix layer_norm_forward(const LayerNorm& ln, const Matrix& x, LayerNormCache* cache) {
  if (static_cast<int>(ln.gamma.size()) != x.cols) {
    throw std::invalid_argument("layer_norm: width mismatch");
  }
  Matrix out(x.rows, x.cols);
  std::vector<double> means(x.rows), inv_stds(x.rows);
  for (int i = 0; i < x.rows; ++i) {
    long double sum = 0.0L;
    for (int j = 0; j < x.cols; ++j) sum += x.at(i, j);
    const double mean = static_cast<double>(sum / x.cols);
    long double var = 0.0L;
    for (int j = 0; j < x.cols; ++j) {
      const double d = x.at(i, j) - mean;
      var += static_cast<long double>(d) * d;
    }
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(var / x.cols) + ln.eps);
    for (int j = 0; j < x.cols; ++j) {
      out.at(i, j) = (x.at(i, j) - mean) * inv_std * ln.gamma[j];
    }
    means[i] = mean;
    inv_stds[i] = inv_std;
  }
  if (cache != nullptr) {
    cache->input = x;
    cache->mean = std::move(means);
    cache->inv_std = std::move(inv_stds);
  }
  return out;
}

Matrix layer_norm_backward(const LayerNorm& ln, const LayerNormCache& cache,
                           const Matrix& d_out) {
  const Matrix& x = cache.input;
  Matrix dx(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double mean = cache.mean[i];
    const double inv_std = cache.inv_std[i];
    // d_hat = d_out * gamma; dx = inv_std * (d_hat - mean(d_hat) - xhat * mean(d_hat*xhat))
    long double sum_dh = 0.0L, sum_dh_xhat = 0.0L;
    for (int j = 0; j < x.cols; ++j) {
      const double xhat = (x.at(i, j) - mean) * inv_std;
      const double dh = d_out.at(i, j) * ln.gamma[j];
      sum_dh += dh;
      sum_dh_xhat += static_cast<long double>(dh) * xhat;
    }
    const double mean_dh = static_cast<double>(sum_dh / x.cols);
    const double mean_dh_xhat = static_cast<double>(sum_dh_xhat / x.cols);
    for (int j = 0; j < x.cols; ++j) {
      const double xhat = (x.at(i, j) - mean) * inv_std;
      const double dh = d_out.at(i, j) * ln.gamma[j];
      dx.at(i, j) = inv_std * (dh - mean_dh - xhat * mean_dh_xhat);
    }
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475));
  const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014327;
  return cdf + x * pdf;
}

Mlp make_mlp(int width, int hidden, Rng& rng) {
  Mlp mlp;
  mlp.w1 = uniform_matrix(width, hidden, 1.0 / std::sqrt(static_cast<double>(width)), rng);
  mlp.w2 = uniform_matrix(hidden, width, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return mlp;
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache) {
  Matrix pre = matmul(x, mlp.w1);
  Matrix act = pre;
  for (double& v : act.data) v = gelu(v);
  Matrix out = matmul(act, mlp.w2);
  if (cache != nullptr) {
    cache->input = x;
    cache->pre_act = std::move(pre);
  }
  return out;
}

Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& d_out) {
  Matrix d_act = matmul(d_out, transpose(mlp.w2));
  for (std::size_t i = 0; i < d_act.data.size(); ++i) {
    d_act.data[i] *= gelu_grad(cache.pre_act.data[i]);
  }
  return matmul(d_act, transpose(mlp.w1));
}

}  // namespace parcel
