#include "relight/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>

#include "relight/edit_history.hpp"
#include "relight/error.hpp"
#include "relight/pipeline.hpp"
#include "relight/service.hpp"

namespace relight {

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string source = "proxy";
  std::string edits;
  bool clamp = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

PipelineConfig resolve_config(const Options& o, bool fresh) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = load_pipeline_config(o.config);
  } else if (!fresh) {
    const std::filesystem::path saved = std::filesystem::path(o.out.empty() ? cfg.output_root : o.out) / layout::kConfig;
    if (std::filesystem::exists(saved)) cfg = load_pipeline_config(saved);
  }
  if (!o.out.empty()) cfg.output_root = o.out;
  if (o.seed) cfg.apply_seed(*o.seed);
  cfg.validate();
  return cfg;
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "replay/%s_%03zu.%s", stem, i, ext);
  return buf;
}

StageResult replay_edits(const PipelineConfig& cfg, const Options& o) {
  const std::filesystem::path root = cfg.output_root;
  const SceneCatalog catalog = SceneCatalog::load(root);
  const ServiceOptions opts{o.clamp ? RangePolicy::clamp : RangePolicy::strict, cfg.eval_exposure, {}};
  const std::vector<EditState> states = import_edit_states(read_text(o.edits));
  Json log = Json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EditResult r = apply_scene_edit(catalog, states[i].to_request(), opts);
    write_file(root / numbered("edit", i, "png"), r.png);
    if (r.mask_png) write_file(root / numbered("mask", i, "png"), *r.mask_png);
    log.push_back({{"index", i}, {"request", states[i].to_request().to_json()}, {"delta_l", to_json(r.delta)},
                   {"clamped", r.clamped}});
  }
  write_text(root / "replay/replay.json", log.dump(2) + "\n");
  return {"relight: replayed " + std::to_string(states.size()) + " edits into " + (root / "replay").string()};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Light-edit relighting pipeline", "relight_cli"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Override the config seed");
  app.add_option("--out", o.out, "Override the output root");

  using Stage = std::function<StageResult(const PipelineConfig&, const std::filesystem::path&)>;
  struct Entry {
    const char* name;
    const char* help;
    Stage run;
  };
  const std::vector<Entry> stages{
      {"gen", "Render the synthetic dataset", stage_gen},
      {"pairs", "Sample relighting pairs", stage_pairs},
      {"mask-gt", "Compute ground-truth lighting masks", stage_mask_gt},
      {"train-mask", "Train the mask predictor", stage_train_mask},
      {"fit-proxy", "Fit the intrinsic encoder", stage_fit_proxy},
      {"dpo", "Refine the encoder with preference optimization", stage_dpo},
      {"eval", "Score predictions against targets", stage_eval},
  };
  for (const auto& s : stages) app.add_subcommand(s.name, s.help);
  CLI::App* relight_cmd = app.add_subcommand("relight", "Relight eval pairs or replay an edit history");
  relight_cmd->add_option("--source", o.source, "Prediction source")->check(CLI::IsMember({"proxy", "gbuffer", "oracle"}));
  relight_cmd->add_option("--edits", o.edits, "Exported edit history to replay")->check(CLI::ExistingFile);
  relight_cmd->add_flag("--clamp", o.clamp, "Clamp out-of-range edits instead of failing");
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve the /v1 relighting API");
  serve_cmd->add_option("--host", o.host, "Bind address");
  serve_cmd->add_option("--port", o.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--static", o.static_dir, "Explorer assets mounted at /")->check(CLI::ExistingDirectory);
  serve_cmd->add_flag("--clamp", o.clamp, "Clamp out-of-range edits instead of rejecting them");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const PipelineConfig cfg = resolve_config(o, name == "gen");
    const std::filesystem::path root = cfg.output_root;
    StageResult r;
    if (name == "serve") {
      const SceneCatalog catalog = SceneCatalog::load(root);
      serve(catalog, {o.clamp ? RangePolicy::clamp : RangePolicy::strict, cfg.eval_exposure, o.static_dir}, o.host, o.port);
      return 0;
    } else if (name == "relight") {
      r = o.edits.empty() ? stage_relight(cfg, root, prediction_source_from_name(o.source)) : replay_edits(cfg, o);
    } else {
      for (const auto& s : stages)
        if (name == s.name) r = s.run(cfg, root);
    }
    out << r.summary << "\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace relight
