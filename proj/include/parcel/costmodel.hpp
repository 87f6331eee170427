#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parcel/routing.hpp"

namespace parcel {

// PaliGemma-2 3B constants: SigLIP-So400M encoder + Gemma-2 2B decoder.
// One multiply-add counts as two FLOPs; norms, activations, positional ops
// and softmax normalization are omitted. All arithmetic is exact integers.
struct ModelConfig {
  std::int64_t vit_layers = 27;      // L_v
  std::int64_t vit_width = 1152;     // D_v
  std::int64_t vit_mlp = 4304;       // M_v
  std::int64_t vit_tokens = 256;     // N_v per frame
  std::int64_t llm_layers = 26;      // L_l
  std::int64_t llm_width = 2304;     // D_l
  std::int64_t llm_mlp = 9216;       // M_l
  std::int64_t query_heads = 8;      // H_q
  std::int64_t kv_heads = 4;         // H_kv
  std::int64_t head_dim = 256;       // d_h
  std::int64_t vocab = 257152;       // V
  std::int64_t cache_bytes_per_scalar = 2;  // bfloat16
};

// One (frames, budget, text-prefix) configuration. route is present for
// parcel-mode reports; baselines do not need it.
struct Workload {
  std::int64_t frames = 1;       // T
  std::int64_t budget = 0;       // B per frame
  std::optional<BudgetRoute> route;
  std::int64_t text_prefix = 0;  // N_t

  std::int64_t visual_tokens() const { return frames * budget; }          // N_img
  std::int64_t total_tokens() const { return visual_tokens() + text_prefix; }  // N_tot
};

// Text prefix defaults: 128+1 for single images, 64+1 for video.
std::int64_t default_text_prefix(std::int64_t frames);

Workload make_workload(std::int64_t frames, std::int64_t budget, Regime regime,
                       SamplingMethod mode,
                       std::optional<std::int64_t> text_prefix = std::nullopt);

struct ConnectorCost {
  std::int64_t qp = 0;     // Query <-> Pool self-attention
  std::int64_t qv = 0;     // Query -> ViT cross-attention
  std::int64_t mlp = 0;    // query-token MLP
  std::int64_t total = 0;
};

struct LlmCost {
  std::int64_t gqa_proj = 0;
  std::int64_t gqa_attn = 0;
  std::int64_t ffn = 0;
  std::int64_t total = 0;
};

struct KvCache {
  std::int64_t bytes_per_token = 0;
  std::int64_t bytes = 0;
  double mb_exact = 0.0;
  std::int64_t mb_rounded = 0;  // half-up
};

struct CostReport {
  std::int64_t vit = 0;
  ConnectorCost connector;
  std::int64_t projection = 0;
  LlmCost llm;
  std::int64_t head = 0;
  std::int64_t total = 0;
  KvCache kv;
  std::int64_t tflops_tenths = 0;  // round(total / 1e11), half-up
  std::string tflops_string() const;  // e.g. "24.3"
};

// L_v (8 N_v D_v^2 + 4 N_v^2 D_v + 4 N_v D_v M_v) per frame, times T.
std::int64_t vit_flops(const ModelConfig& cfg, std::int64_t frames);

// PARCEL connector: T * 1[N_q>0] * (C_QP + C_QV + C_QMLP) with
//   C_QP  = 8 B D_v^2 + 4 B^2 D_v
//   C_QV  = 4 (N_q + N_v) D_v^2 + 4 N_q N_v D_v
//   C_QMLP = 4 N_q D_v M_v
ConnectorCost connector_flops(const ModelConfig& cfg, const BudgetRoute& route,
                              std::int64_t frames);

// MQT connector: one cross-attention + query MLP with all B tokens as
// queries. M3 has no connector FLOPs.
ConnectorCost mqt_connector_flops(const ModelConfig& cfg, std::int64_t budget,
                                  std::int64_t frames);

// 2 T B D_v D_l.
std::int64_t projection_flops(const ModelConfig& cfg, std::int64_t budget,
                              std::int64_t frames);

// L_l (4 N D_l d_h (H_q + H_kv) + 4 N^2 H_q d_h + 6 N D_l M_l).
LlmCost llm_flops(const ModelConfig& cfg, std::int64_t total_tokens);

// 2 N_t D_l V.
std::int64_t head_flops(const ModelConfig& cfg, std::int64_t text_prefix);

// bytes/token = 2 * 2 * L_l * H_kv * d_h (= 106496 for Gemma-2 2B);
// MB rounded half-up for presentation. Connector-independent.
KvCache kv_cache_mb(const ModelConfig& cfg, std::int64_t total_tokens);

CostReport total_report(const ModelConfig& cfg, const Workload& workload,
                        SamplingMethod mode = SamplingMethod::Parcel);

struct Figure1Row {
  std::int64_t budget;
  std::string image_tflops;
  std::string video_tflops;
  std::int64_t image_kv_mb;
  std::int64_t video_kv_mb;
};

// Budgets 16/64/256: image (T=1, N_t=129) and video (T=16, N_t=65).
std::vector<Figure1Row> figure1_table(const ModelConfig& cfg);

}  // namespace parcel
