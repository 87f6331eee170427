#include "parcel/costmodel.hpp"

#include <stdexcept>
#include <string>

namespace parcel {

std::int64_t default_text_prefix(std::int64_t frames) {
  // PaliGemma eval prefixes: 128+1 for single images, 64+1 for video.
  return frames == 1 ? 129 : 65;
}

Workload make_workload(std::int64_t frames, std::int64_t budget, Regime regime,
                       SamplingMethod mode, std::optional<std::int64_t> text_prefix) {
  if (frames < 1) throw std::invalid_argument("workload: frames must be >= 1");
  if (budget < 1) throw std::invalid_argument("workload: budget must be >= 1");
  Workload w;
  w.frames = frames;
  w.budget = budget;
  w.text_prefix = text_prefix.value_or(default_text_prefix(frames));
  if (mode == SamplingMethod::Parcel) {
    w.route = route_budget(static_cast<int>(budget), regime);
  }
  return w;
}

std::string CostReport::tflops_string() const {
  return std::to_string(tflops_tenths / 10) + "." + std::to_string(tflops_tenths % 10);
}

std::int64_t vit_flops(const ModelConfig& cfg, std::int64_t frames) {
  const std::int64_t nv = cfg.vit_tokens, dv = cfg.vit_width;
  const std::int64_t per_frame =
      cfg.vit_layers * (8 * nv * dv * dv + 4 * nv * nv * dv + 4 * nv * dv * cfg.vit_mlp);
  return frames * per_frame;
}

ConnectorCost connector_flops(const ModelConfig& cfg, const BudgetRoute& route,
                              std::int64_t frames) {
  ConnectorCost c;
  if (route.queries <= 0) return c;  // query pathway inactive
  const std::int64_t b = route.budget, nq = route.queries;
  const std::int64_t dv = cfg.vit_width, nv = cfg.vit_tokens;
  c.qp = frames * (8 * b * dv * dv + 4 * b * b * dv);
  c.qv = frames * (4 * (nq + nv) * dv * dv + 4 * nq * nv * dv);
  c.mlp = frames * (4 * nq * dv * cfg.vit_mlp);
  c.total = c.qp + c.qv + c.mlp;
  return c;
}

ConnectorCost mqt_connector_flops(const ModelConfig& cfg, std::int64_t budget,
                                  std::int64_t frames) {
  ConnectorCost c;
  if (budget <= 0) return c;
  const std::int64_t dv = cfg.vit_width, nv = cfg.vit_tokens;
  c.qv = frames * (4 * (budget + nv) * dv * dv + 4 * budget * nv * dv);
  c.mlp = frames * (4 * budget * dv * cfg.vit_mlp);
  c.total = c.qv + c.mlp;
  return c;
}

std::int64_t projection_flops(const ModelConfig& cfg, std::int64_t budget,
                              std::int64_t frames) {
  return 2 * frames * budget * cfg.vit_width * cfg.llm_width;
}

LlmCost llm_flops(const ModelConfig& cfg, std::int64_t total_tokens) {
  if (total_tokens < 1) throw std::invalid_argument("llm_flops: N_tot must be >= 1");
  LlmCost c;
  const std::int64_t n = total_tokens;
  c.gqa_proj = cfg.llm_layers * 4 * n * cfg.llm_width * cfg.head_dim *
               (cfg.query_heads + cfg.kv_heads);
  c.gqa_attn = cfg.llm_layers * 4 * n * n * cfg.query_heads * cfg.head_dim;
  c.ffn = cfg.llm_layers * 6 * n * cfg.llm_width * cfg.llm_mlp;
  c.total = c.gqa_proj + c.gqa_attn + c.ffn;
  return c;
}

std::int64_t head_flops(const ModelConfig& cfg, std::int64_t text_prefix) {
  return 2 * text_prefix * cfg.llm_width * cfg.vocab;
}

KvCache kv_cache_mb(const ModelConfig& cfg, std::int64_t total_tokens) {
  if (total_tokens < 0) throw std::invalid_argument("kv_cache_mb: N_tot must be >= 0");
  KvCache kv;
  kv.bytes_per_token =
      cfg.cache_bytes_per_scalar * 2 * cfg.llm_layers * cfg.kv_heads * cfg.head_dim;
  kv.bytes = total_tokens * kv.bytes_per_token;
  kv.mb_exact = static_cast<double>(kv.bytes) / (1024.0 * 1024.0);
  kv.mb_rounded = (kv.bytes + (1 << 19)) >> 20;  // half-up in integer arithmetic
  return kv;
}

CostReport total_report(const ModelConfig& cfg, const Workload& workload,
                        SamplingMethod mode) {
  CostReport report;
  report.vit = vit_flops(cfg, workload.frames);
  switch (mode) {
    case SamplingMethod::Parcel:
      if (!workload.route.has_value()) {
        throw std::invalid_argument("total_report: parcel workload needs a route");
      }
      report.connector = connector_flops(cfg, *workload.route, workload.frames);
      break;
    case SamplingMethod::Mqt:
      report.connector = mqt_connector_flops(cfg, workload.budget, workload.frames);
      break;
    case SamplingMethod::M3:
      break;  // pure pooling, no connector FLOPs counted
  }
  report.projection = projection_flops(cfg, workload.budget, workload.frames);
  report.llm = llm_flops(cfg, workload.total_tokens());
  report.head = head_flops(cfg, workload.text_prefix);
  report.total = report.vit + report.connector.total + report.projection +
                 report.llm.total + report.head;
  report.kv = kv_cache_mb(cfg, workload.total_tokens());
  // tenths of a TFLOP, rounded half-up; exact integer arithmetic throughout
  report.tflops_tenths = (report.total * 10 + 500000000000LL) / 1000000000000LL;
  return report;
}

std::vector<Figure1Row> figure1_table(const ModelConfig& cfg) {
  std::vector<Figure1Row> rows;
  for (const std::int64_t budget : {16, 64, 256}) {
    const Workload image = make_workload(1, budget, Regime::Default224, SamplingMethod::Parcel);
    const Workload video = make_workload(16, budget, Regime::Default224, SamplingMethod::Parcel);
    const CostReport ri = total_report(cfg, image);
    const CostReport rv = total_report(cfg, video);
    rows.push_back({budget, ri.tflops_string(), rv.tflops_string(), ri.kv.mb_rounded,
                    rv.kv.mb_rounded});
  }
  return rows;
}

}  // namespace parcel
