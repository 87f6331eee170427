#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "parcel/baselines.hpp"
#include "parcel/connector.hpp"
#include "parcel/costmodel.hpp"
#include "parcel/iofmt.hpp"
#include "parcel/routing.hpp"
#include "parcel/spectral.hpp"
#include "parcel/synth.hpp"
#include "parcel/verify.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kConfigEnvVar = "PARCEL_CONFIG";

struct CliConfig {
  std::uint64_t seed = 0;
  std::string regime = "default-224";
  std::string mode = "parcel";
  double epsilon = parcel::kSpectralEpsilon;
  std::string format = "json";
};

// Defaults may come from a JSON file named by PARCEL_CONFIG; explicit flags
// still win.
CliConfig load_env_config() {
  CliConfig cfg;
  const char* path = std::getenv(kConfigEnvVar);
  if (path == nullptr || *path == '\0') return cfg;
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError(std::string(kConfigEnvVar) + ": cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CLI::ValidationError(std::string(kConfigEnvVar) + ": " + e.what());
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.regime = j.value("regime", cfg.regime);
  cfg.mode = j.value("mode", cfg.mode);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.format = j.value("format", cfg.format);
  return cfg;
}

std::string format_value(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// Shared report shape: {tool, version, inputs, outputs}.
json make_envelope() {
  json j;
  j["tool"] = "parcel";
  j["version"] = 1;
  j["inputs"] = json::object();
  j["outputs"] = json::object();
  return j;
}

struct RouteArgs {
  int budget = 0;
  bool table = false;
};

std::string route_row(int budget, parcel::SamplingMethod method, parcel::Regime regime) {
  int anchors = 0, queries = 0, kernel = 0;
  switch (method) {
    case parcel::SamplingMethod::Parcel: {
      const parcel::BudgetRoute r = parcel::route_budget(budget, regime);
      anchors = r.anchors;
      queries = r.queries;
      kernel = r.kernel;
      break;
    }
    case parcel::SamplingMethod::Mqt:
      // All-query compressor: nothing is pooled.
      queries = budget;
      break;
    case parcel::SamplingMethod::M3: {
      const int side = parcel::source_side(regime);
      int b_side = 1;
      while (b_side * b_side < budget) ++b_side;
      anchors = budget;
      kernel = side / b_side;
      break;
    }
  }
  return std::to_string(budget) + "," + std::to_string(anchors) + "," +
         std::to_string(queries) + "," + std::to_string(kernel);
}

int cmd_route(const RouteArgs& args, const CliConfig& cfg) {
  const parcel::Regime regime = parcel::parse_regime(cfg.regime);
  const parcel::SamplingMethod method = parcel::parse_method(cfg.mode);
  std::vector<std::string> rows;
  if (args.table) {
    for (const int b : parcel::budget_menu(method, regime))
      rows.push_back(route_row(b, method, regime));
  } else {
    rows.push_back(route_row(args.budget, method, regime));
  }
  std::cout << "budget,anchors,queries,kernel\n";
  for (const std::string& row : rows) std::cout << row << "\n";
  return 0;
}

struct CostArgs {
  int budget = 0;
  std::int64_t frames = 1;
  bool figure1 = false;
  std::optional<std::int64_t> text_prefix;
};

int cmd_cost(const CostArgs& args, const CliConfig& cfg) {
  const parcel::ModelConfig model;
  if (args.figure1) {
    std::cout << "budget,image_tflops,video_tflops,image_kv_mb,video_kv_mb\n";
    for (const parcel::Figure1Row& row : parcel::figure1_table(model)) {
      std::cout << row.budget << "," << row.image_tflops << "," << row.video_tflops << ","
                << row.image_kv_mb << "," << row.video_kv_mb << "\n";
    }
    return 0;
  }
  const parcel::Regime regime = parcel::parse_regime(cfg.regime);
  const parcel::SamplingMethod mode = parcel::parse_method(cfg.mode);
  if (mode != parcel::SamplingMethod::Parcel) {
    const std::vector<int> menu = parcel::budget_menu(mode, regime);
    if (std::find(menu.begin(), menu.end(), args.budget) == menu.end())
      throw CLI::ValidationError("cost: budget " + std::to_string(args.budget) +
                                 " is not in the " + cfg.mode + " menu");
  }
  const parcel::Workload w =
      parcel::make_workload(args.frames, args.budget, regime, mode, args.text_prefix);
  const parcel::CostReport r = parcel::total_report(model, w, mode);

  if (cfg.format == "csv") {
    std::cout << "key,value\n"
              << "vit," << r.vit << "\n"
              << "connector_qp," << r.connector.qp << "\n"
              << "connector_qv," << r.connector.qv << "\n"
              << "connector_mlp," << r.connector.mlp << "\n"
              << "connector," << r.connector.total << "\n"
              << "projection," << r.projection << "\n"
              << "llm_gqa_proj," << r.llm.gqa_proj << "\n"
              << "llm_gqa_attn," << r.llm.gqa_attn << "\n"
              << "llm_ffn," << r.llm.ffn << "\n"
              << "llm," << r.llm.total << "\n"
              << "head," << r.head << "\n"
              << "total," << r.total << "\n"
              << "tflops," << r.tflops_string() << "\n"
              << "kv_bytes_per_token," << r.kv.bytes_per_token << "\n"
              << "kv_bytes," << r.kv.bytes << "\n"
              << "kv_mb," << r.kv.mb_rounded << "\n";
    return 0;
  }
  json out = make_envelope();
  out["inputs"] = {{"mode", cfg.mode},
                   {"regime", cfg.regime},
                   {"budget", w.budget},
                   {"frames", w.frames},
                   {"text_prefix", w.text_prefix}};
  out["outputs"]["visual_tokens"] = w.visual_tokens();
  out["outputs"]["total_tokens"] = w.total_tokens();
  out["outputs"]["flops"] = {
      {"vit", r.vit},
      {"connector",
       {{"qp", r.connector.qp},
        {"qv", r.connector.qv},
        {"mlp", r.connector.mlp},
        {"total", r.connector.total}}},
      {"projection", r.projection},
      {"llm",
       {{"gqa_proj", r.llm.gqa_proj},
        {"gqa_attn", r.llm.gqa_attn},
        {"ffn", r.llm.ffn},
        {"total", r.llm.total}}},
      {"head", r.head},
      {"total", r.total},
  };
  out["outputs"]["tflops"] = r.tflops_string();
  out["outputs"]["kv"] = {{"bytes_per_token", r.kv.bytes_per_token},
                          {"bytes", r.kv.bytes},
                          {"mb", r.kv.mb_rounded}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SpectralArgs {
  std::string in;
  std::string synth;
  std::string attn;
  std::string out;
  std::string analysis = "radial";
  int height = 16;
  int width = 16;
  int channels = 4;
  int freq_h = 0;
  int freq_w = 3;
  double value = 1.0;
};

int cmd_spectral(const SpectralArgs& args, const CliConfig& cfg) {
  if (args.in.empty() == args.synth.empty())
    throw CLI::ValidationError("spectral: give exactly one of --in and --synth");
  if (args.analysis == "footprint" && args.attn.empty())
    throw CLI::ValidationError("spectral: footprint needs --attn");

  parcel::FeatureGrid grid(1, 1, 1);
  std::string source;
  if (!args.in.empty()) {
    grid = parcel::read_fgrid(args.in);
    source = "file:" + args.in;
  } else {
    parcel::SynthSpec spec;
    spec.kind = parcel::parse_synth_kind(args.synth);
    spec.height = args.height;
    spec.width = args.width;
    spec.channels = args.channels;
    spec.seed = cfg.seed;
    spec.freq_h = args.freq_h;
    spec.freq_w = args.freq_w;
    spec.value = args.value;
    grid = parcel::make_synthetic_grid(spec);
    source = "synth:" + args.synth;
  }

  parcel::RadialProfile profile;
  if (args.analysis == "footprint") {
    const parcel::AttentionWeightsFile attw = parcel::read_attw(args.attn);
    if (attw.height != grid.height || attw.width != grid.width)
      throw CLI::ValidationError("spectral: weights tile " + std::to_string(attw.height) +
                                 "x" + std::to_string(attw.width) +
                                 " does not match the grid");
    profile = parcel::attention_footprint(grid, attw.weights, cfg.epsilon);
  } else {
    profile = parcel::grid_radial_profile(grid, cfg.epsilon);
  }
  // A degenerate input (no AC power anywhere) normalizes to ~0 instead of 1.
  const bool zero_energy = profile.total() < 0.5;
  if (args.analysis == "concentration") profile = parcel::cumulative_concentration(profile);

  std::ofstream csv(args.out);
  if (!csv) throw CLI::ValidationError("spectral: cannot write " + args.out);
  csv << "r,value\n";
  if (!zero_energy) {
    for (std::size_t i = 0; i < profile.radii.size(); ++i)
      csv << profile.radii[i] << "," << format_value(profile.values[i]) << "\n";
  }
  csv.close();

  json meta = make_envelope();
  meta["inputs"] = {{"analysis", args.analysis},
                    {"source", source},
                    {"height", grid.height},
                    {"width", grid.width},
                    {"channels", grid.channels},
                    {"epsilon", cfg.epsilon}};
  if (!args.attn.empty()) meta["inputs"]["attn"] = args.attn;
  meta["outputs"] = {{"csv", args.out},
                     {"r_max", profile.r_max},
                     {"zero_energy", zero_energy},
                     {"rows", zero_energy ? 0 : profile.radii.size()}};
  std::cout << meta.dump(2) << "\n";
  return 0;
}

struct PcqrArgs {
  std::string in;
  std::string out;
  int budget = 0;
  int dv = 1152;
  int heads = 12;
  int mlp_hidden = 4304;
};

int cmd_pcqr(const PcqrArgs& args, const CliConfig& cfg) {
  const parcel::Regime regime = parcel::parse_regime(cfg.regime);
  const parcel::FeatureGrid grid = parcel::read_fgrid(args.in);
  if (grid.channels != args.dv)
    throw CLI::ValidationError("pcqr: grid has " + std::to_string(grid.channels) +
                               " channels but --dv is " + std::to_string(args.dv));
  const parcel::BudgetRoute route = parcel::route_budget(args.budget, regime);

  parcel::ConnectorConfig connector{args.dv, args.heads, args.mlp_hidden};
  parcel::Rng rng(cfg.seed);
  const parcel::QueryBank bank =
      parcel::make_query_bank(parcel::default_bank_capacity(regime), args.dv, rng);
  const parcel::PcqrParams params = parcel::make_pcqr_params(connector, rng.next_u64());
  const parcel::ConnectorOutput result = parcel::pcqr_forward(grid, route, bank, params);

  const std::string tokens_path = args.out + ".tokens.fgrd";
  parcel::FeatureGrid tokens(1, route.budget, args.dv);
  tokens.values = result.assembled.data;
  parcel::write_fgrid(tokens, tokens_path);

  json meta = make_envelope();
  meta["inputs"] = {{"grid", args.in},
                    {"budget", route.budget},
                    {"seed", cfg.seed},
                    {"regime", cfg.regime},
                    {"dv", args.dv},
                    {"heads", args.heads}};
  meta["outputs"]["anchors"] = route.anchors;
  meta["outputs"]["queries"] = route.queries;
  meta["outputs"]["tokens"] = tokens_path;
  if (route.queries > 0) {
    const std::string weights_path = args.out + ".weights.attw";
    parcel::write_attw(result.cross_weights, grid.height, grid.width, weights_path);
    meta["outputs"]["weights"] = weights_path;
  } else {
    meta["outputs"]["weights"] = nullptr;
    meta["outputs"]["note"] = "anchor-only budget: no query rows, so no weights file";
  }
  std::cout << meta.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& suite) {
  std::vector<parcel::CheckResult> checks;
  if (suite == "parseval") checks = parcel::verify_parseval();
  else if (suite == "gradcheck") checks = parcel::verify_gradcheck();
  else if (suite == "prefix") checks = parcel::verify_prefix();
  else if (suite == "figure1") checks = parcel::verify_figure1();
  else if (suite == "menus") checks = parcel::verify_menus();
  else checks = parcel::verify_all();

  json out = make_envelope();
  out["inputs"]["suite"] = suite;
  out["outputs"]["pass"] = parcel::all_pass(checks);
  out["outputs"]["checks"] = json::array();
  for (const parcel::CheckResult& c : checks) {
    std::cerr << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    out["outputs"]["checks"].push_back(
        {{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  std::cout << out.dump(2) << "\n";
  return parcel::all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CliConfig config;
  CLI::App app{"Elastic visual-token connector toolkit"};
  app.require_subcommand(1);

  try {
    config = load_env_config();
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  app.add_option("--seed", config.seed, "Seed for every stochastic choice");
  app.add_option("--regime", config.regime, "Source resolution regime")
      ->check(CLI::IsMember({"default-224", "high-448"}));
  app.add_option("--mode", config.mode, "Token compressor")
      ->check(CLI::IsMember({"parcel", "mqt", "m3"}));
  app.add_option("--epsilon", config.epsilon, "Normalization epsilon");
  app.add_option("--format", config.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));

  RouteArgs route_args;
  CLI::App* route = app.add_subcommand("route", "Budget -> (anchors, queries, kernel)");
  route->fallthrough();
  CLI::Option* route_budget_opt =
      route->add_option("--budget", route_args.budget, "Token budget");
  route->add_flag("--table", route_args.table, "Emit the full menu");

  CostArgs cost_args;
  CLI::App* cost = app.add_subcommand("cost", "Prefill FLOPs and KV-cache size");
  cost->fallthrough();
  CLI::Option* cost_budget_opt = cost->add_option("--budget", cost_args.budget, "Token budget");
  cost->add_option("--frames", cost_args.frames, "Frame count T")->check(CLI::PositiveNumber);
  cost->add_flag("--figure1", cost_args.figure1, "Emit the 3x4 efficiency table");
  std::int64_t prefix_arg = 0;
  CLI::Option* prefix_opt =
      cost->add_option("--text-prefix", prefix_arg, "Override the text prefix length");

  SpectralArgs spectral_args;
  CLI::App* spectral = app.add_subcommand("spectral", "Radial power analyses");
  spectral->fallthrough();
  spectral->add_option("--in", spectral_args.in, "Input feature grid (.fgrd)");
  spectral->add_option("--synth", spectral_args.synth, "Synthetic grid kind")
      ->check(CLI::IsMember({"gaussian", "cosine", "impulse", "constant"}));
  spectral->add_option("--attn", spectral_args.attn, "Attention weights (.attw)");
  spectral->add_option("--out", spectral_args.out, "Profile CSV path")->required();
  spectral->add_option("--analysis", spectral_args.analysis, "Profile kind")
      ->check(CLI::IsMember({"radial", "concentration", "footprint"}));
  spectral->add_option("--height", spectral_args.height)->check(CLI::PositiveNumber);
  spectral->add_option("--width", spectral_args.width)->check(CLI::PositiveNumber);
  spectral->add_option("--channels", spectral_args.channels)->check(CLI::PositiveNumber);
  spectral->add_option("--freq-h", spectral_args.freq_h);
  spectral->add_option("--freq-w", spectral_args.freq_w);
  spectral->add_option("--value", spectral_args.value);

  PcqrArgs pcqr_args;
  CLI::App* pcqr = app.add_subcommand("pcqr", "Run the connector on a grid");
  pcqr->fallthrough();
  pcqr->add_option("--in", pcqr_args.in, "Input feature grid (.fgrd)")->required();
  pcqr->add_option("--budget", pcqr_args.budget, "Token budget")->required();
  pcqr->add_option("--out", pcqr_args.out, "Output path prefix")->required();
  pcqr->add_option("--dv", pcqr_args.dv, "Connector width")->check(CLI::PositiveNumber);
  pcqr->add_option("--heads", pcqr_args.heads, "Attention heads")->check(CLI::PositiveNumber);
  pcqr->add_option("--mlp-hidden", pcqr_args.mlp_hidden, "Query MLP hidden width")
      ->check(CLI::PositiveNumber);

  std::string suite;
  CLI::App* verify = app.add_subcommand("verify", "Run shipped self-checks");
  verify->fallthrough();
  verify->add_option("--suite", suite, "Which property family to check")
      ->required()
      ->check(CLI::IsMember({"parseval", "gradcheck", "prefix", "figure1", "menus", "all"}));

  try {
    app.parse(argc, argv);

    if (route->parsed()) {
      if (route_args.table == (route_budget_opt->count() > 0))
        throw CLI::ValidationError("route: give exactly one of --budget and --table");
      return cmd_route(route_args, config);
    }
    if (cost->parsed()) {
      if (cost_args.figure1 == (cost_budget_opt->count() > 0))
        throw CLI::ValidationError("cost: give exactly one of --budget and --figure1");
      if (prefix_opt->count() > 0) cost_args.text_prefix = prefix_arg;
      return cmd_cost(cost_args, config);
    }
    if (spectral->parsed()) return cmd_spectral(spectral_args, config);
    if (pcqr->parsed()) return cmd_pcqr(pcqr_args, config);
    if (verify->parsed()) return cmd_verify(suite);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const parcel::IoError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << "\n";
    return 1;
  }
}
