#include "relight/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "relight/error.hpp"
#include "relight/image_io.hpp"
#include "relight/random.hpp"
#include "relight/serialize.hpp"

namespace relight {

namespace {

// Reads keys from one JSON object and rejects any it was not asked about.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  StrictObject child(const std::string& key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return StrictObject(j_.contains(key) ? j_.at(key) : empty, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where_ + "." + key + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string numbered(const char* dir, int id, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/pair_%05d.%s", dir, id, ext);
  return buf;
}

const char* style_name(ObjectStyle s) { return s == ObjectStyle::sphere ? "sphere" : "composite"; }

ObjectStyle style_from_name(const std::string& s) {
  if (s == "sphere") return ObjectStyle::sphere;
  if (s == "composite") return ObjectStyle::composite;
  throw ConfigError("unknown object style '" + s + "'");
}

const SampleRecord& train_source(const Manifest& m, const PairRecord& p) { return find_record(m, p.source); }

LinearImage load_image(const std::filesystem::path& root, const SampleRecord& rec) {
  return load_raw_f32(root / rec.image_path);
}

ProxyMaps record_maps(const std::filesystem::path& root, const SampleRecord& rec) {
  if (rec.gbuffer) return ProxyMaps::from_gbuffer(load_gbuffer(root, *rec.gbuffer));
  return ProxyMaps::from_gbuffer(render_record(rec).gbuffer);
}

Json descent_log(const DescentTrace& t) {
  return {{"loss", t.loss}, {"halvings", t.halvings}, {"final_learning_rate", t.final_learning_rate}};
}

}  // namespace

namespace layout {
std::string mask_raw(int id) { return numbered("masks", id, "raw"); }
std::string mask_png(int id) { return numbered("masks", id, "png"); }
std::string prediction_raw(int id) { return numbered("predictions", id, "raw"); }
std::string prediction_png(int id) { return numbered("predictions", id, "png"); }
}  // namespace layout

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  StrictObject root(j, "config");
  root.get("seed", c.seed);
  root.get("output_root", c.output_root);

  StrictObject d = root.child("dataset");
  DatasetConfig& ds = c.dataset;
  d.get("objects", ds.objects);
  d.get("views", ds.views);
  d.get("lights", ds.lights);
  d.get("width", ds.camera.width);
  d.get("height", ds.camera.height);
  d.get("vfov_rad", ds.camera.vfov_rad);
  d.get("radius_min", ds.radius_min);
  d.get("radius_max", ds.radius_max);
  d.get("supervision_fraction", ds.supervision_fraction);
  d.get("eval_objects", ds.eval_objects);
  std::string style = style_name(ds.style);
  d.get("style", style);
  ds.style = style_from_name(style);
  d.get("ground_plane", ds.ground_plane);
  d.get("point_light_fraction", ds.point_light_fraction);
  d.get("shadows", ds.render.shadows);
  d.get("specular", ds.render.specular);
  d.get("previews", ds.write_previews);
  StrictObject r = d.child("ranges");
  r.get("yaw_deg", ds.ranges.yaw_deg);
  r.get("pitch_deg", ds.ranges.pitch_deg);
  r.get("log_energy", ds.ranges.log_energy);
  r.get("temperature_k", ds.ranges.temperature_k);
  r.get("allow_mixed", ds.ranges.allow_mixed);
  r.finish();
  d.finish();

  StrictObject p = root.child("pairs");
  p.get("per_view", c.pairs_per_view);
  p.finish();

  StrictObject m = root.child("mask");
  m.get("alpha", c.mask.gt.alpha);
  m.get("sigmas", c.mask.gt.sigmas);
  m.get("percentile", c.mask.gt.percentile);
  m.get("gamma", c.mask.gt.gamma);
  m.get("hidden", c.mask.train.hidden);
  m.get("learning_rate", c.mask.train.descent.learning_rate);
  m.get("iterations", c.mask.train.descent.iterations);
  m.get("pixel_stride", c.mask.train.pixel_stride);
  m.get("max_examples", c.mask.max_examples);
  m.finish();

  StrictObject x = root.child("proxy");
  std::vector<double> lambda{c.proxy_weights.albedo, c.proxy_weights.normal, c.proxy_weights.roughness,
                             c.proxy_weights.metallic};
  x.get("lambda", lambda);
  if (lambda.size() != 4) throw ConfigError("config.proxy.lambda must hold 4 weights");
  c.proxy_weights = {lambda[0], lambda[1], lambda[2], lambda[3]};
  x.get("hidden", c.proxy_fit.hidden);
  x.get("learning_rate", c.proxy_fit.descent.learning_rate);
  x.get("iterations", c.proxy_fit.descent.iterations);
  x.finish();

  StrictObject o = root.child("dpo");
  o.get("beta", c.dpo.beta);
  o.get("sigma_lik", c.dpo.sigma_lik);
  o.get("learning_rate", c.dpo.learning_rate);
  o.get("iterations", c.dpo.iterations);
  o.finish();

  StrictObject e = root.child("eval");
  e.get("exposure", c.eval_exposure);
  e.finish();
  root.finish();

  c.apply_seed(c.seed);
  c.validate();
  return c;
}

std::string PipelineConfig::to_json() const {
  const DatasetConfig& ds = dataset;
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["dataset"] = {{"objects", ds.objects},
                  {"views", ds.views},
                  {"lights", ds.lights},
                  {"width", ds.camera.width},
                  {"height", ds.camera.height},
                  {"vfov_rad", ds.camera.vfov_rad},
                  {"radius_min", ds.radius_min},
                  {"radius_max", ds.radius_max},
                  {"supervision_fraction", ds.supervision_fraction},
                  {"eval_objects", ds.eval_objects},
                  {"style", style_name(ds.style)},
                  {"ground_plane", ds.ground_plane},
                  {"point_light_fraction", ds.point_light_fraction},
                  {"shadows", ds.render.shadows},
                  {"specular", ds.render.specular},
                  {"previews", ds.write_previews},
                  {"ranges",
                   {{"yaw_deg", ds.ranges.yaw_deg},
                    {"pitch_deg", ds.ranges.pitch_deg},
                    {"log_energy", ds.ranges.log_energy},
                    {"temperature_k", ds.ranges.temperature_k},
                    {"allow_mixed", ds.ranges.allow_mixed}}}};
  j["pairs"] = {{"per_view", pairs_per_view}};
  j["mask"] = {{"alpha", mask.gt.alpha},
               {"sigmas", mask.gt.sigmas},
               {"percentile", mask.gt.percentile},
               {"gamma", mask.gt.gamma},
               {"hidden", mask.train.hidden},
               {"learning_rate", mask.train.descent.learning_rate},
               {"iterations", mask.train.descent.iterations},
               {"pixel_stride", mask.train.pixel_stride},
               {"max_examples", mask.max_examples}};
  j["proxy"] = {{"lambda", {proxy_weights.albedo, proxy_weights.normal, proxy_weights.roughness, proxy_weights.metallic}},
                {"hidden", proxy_fit.hidden},
                {"learning_rate", proxy_fit.descent.learning_rate},
                {"iterations", proxy_fit.descent.iterations}};
  j["dpo"] = {{"beta", dpo.beta}, {"sigma_lik", dpo.sigma_lik}, {"learning_rate", dpo.learning_rate},
              {"iterations", dpo.iterations}};
  j["eval"] = {{"exposure", eval_exposure}};
  return j.dump(2) + "\n";
}

void PipelineConfig::apply_seed(std::uint64_t s) {
  seed = s;
  dataset.seed = s;
  mask.train.seed = mix_seed(s, 11);
  proxy_fit.seed = mix_seed(s, 12);
}

void PipelineConfig::validate() const {
  dataset.validate();
  dpo.validate();
  if (pairs_per_view < 1) throw ConfigError("pairs.per_view must be >= 1");
  if (!(mask.gt.alpha > 0.0)) throw ConfigError("mask.alpha must be > 0");
  if (mask.gt.sigmas.empty()) throw ConfigError("mask.sigmas must not be empty");
  for (double s : mask.gt.sigmas)
    if (!(s > 0.0)) throw ConfigError("mask.sigmas must be positive");
  if (!(mask.gt.percentile > 0.0 && mask.gt.percentile <= 100.0)) throw ConfigError("mask.percentile must lie in (0, 100]");
  if (!(mask.gt.gamma >= 0.0)) throw ConfigError("mask.gamma must be >= 0");
  if (mask.train.hidden < 1 || mask.train.pixel_stride < 1 || mask.max_examples < 1)
    throw ConfigError("mask.hidden, mask.pixel_stride and mask.max_examples must be >= 1");
  if (!(mask.train.descent.learning_rate > 0.0) || mask.train.descent.iterations < 0)
    throw ConfigError("mask descent settings are invalid");
  for (double w : {proxy_weights.albedo, proxy_weights.normal, proxy_weights.roughness, proxy_weights.metallic})
    if (!(w >= 0.0)) throw ConfigError("proxy.lambda weights must be >= 0");
  if (proxy_fit.hidden < 1 || !(proxy_fit.descent.learning_rate > 0.0) || proxy_fit.descent.iterations < 0)
    throw ConfigError("proxy descent settings are invalid");
  if (!(eval_exposure > 0.0)) throw ConfigError("eval.exposure must be > 0");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return PipelineConfig::from_json(read_text(path));
}

Manifest load_manifest(const std::filesystem::path& root) {
  return manifest_from_jsonl(read_text(root / layout::kManifest));
}

std::vector<PairRecord> load_pairs(const std::filesystem::path& root) {
  return pairs_from_jsonl(read_text(root / layout::kPairs));
}

std::vector<PairRecord> eval_pairs(const Manifest& manifest, const std::vector<PairRecord>& pairs) {
  std::vector<PairRecord> out;
  for (const auto& p : pairs)
    if (find_record(manifest, p.source).split == "eval") out.push_back(p);
  return out;
}

std::vector<ProxyExample> supervised_examples(const Manifest& manifest, const std::filesystem::path& root) {
  std::vector<ProxyExample> out;
  for (const auto& rec : manifest) {
    if (!rec.has_pbr_supervision || rec.split != "train" || !rec.gbuffer) continue;
    out.push_back(make_proxy_example(load_image(root, rec), ProxyMaps::from_gbuffer(load_gbuffer(root, *rec.gbuffer))));
  }
  if (out.empty()) throw ConfigError("manifest has no supervised train records");
  return out;
}

StageResult stage_gen(const PipelineConfig& cfg, const std::filesystem::path& root) {
  cfg.validate();
  const Manifest m = generate_dataset(cfg.dataset, root);
  write_text(root / layout::kConfig, cfg.to_json());
  std::size_t supervised = 0, eval = 0;
  for (const auto& r : m) {
    supervised += r.has_pbr_supervision ? 1 : 0;
    eval += r.split == "eval" ? 1 : 0;
  }
  return {"gen: " + std::to_string(m.size()) + " records (" + std::to_string(cfg.dataset.objects) + " objects x " +
          std::to_string(cfg.dataset.views) + " views x " + std::to_string(cfg.dataset.lights) + " lights), " +
          std::to_string(supervised) + " supervised, " + std::to_string(eval) + " eval"};
}

StageResult stage_pairs(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const Manifest m = load_manifest(root);
  const PairSampling s = sample_pairs(m, cfg.pairs_per_view, mix_seed(cfg.seed, 13));
  write_text(root / layout::kPairs, pairs_to_jsonl(s.pairs));
  return {"pairs: " + std::to_string(s.pairs.size()) + " pairs, " + std::to_string(s.warnings) + " views skipped"};
}

StageResult stage_mask_gt(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const Manifest m = load_manifest(root);
  std::vector<PairRecord> pairs = load_pairs(root);
  double mean_mass = 0.0;
  for (auto& p : pairs) {
    const SampleRecord& s = find_record(m, p.source);
    const SampleRecord& t = find_record(m, p.target);
    const Coverage cov = load_raw_u8(root / s.coverage_path);
    const SoftMask mask = gt_mask(load_image(root, s), load_image(root, t), cfg.mask.gt, cov);
    write_file(root / layout::mask_raw(p.pair_id), write_raw_f32(mask.values));
    write_file(root / layout::mask_png(p.pair_id), encode_map_png(mask.values));
    p.mask_path = layout::mask_raw(p.pair_id);
    double sum = 0.0;
    for (double v : mask.values.data()) sum += v;
    mean_mass += sum / static_cast<double>(mask.values.size());
  }
  write_text(root / layout::kPairs, pairs_to_jsonl(pairs));
  char buf[96];
  std::snprintf(buf, sizeof buf, ", mean mask value %.4f", pairs.empty() ? 0.0 : mean_mass / static_cast<double>(pairs.size()));
  return {"mask-gt: " + std::to_string(pairs.size()) + " masks" + buf};
}

StageResult stage_train_mask(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const Manifest m = load_manifest(root);
  std::vector<PairRecord> train;
  for (const auto& p : load_pairs(root))
    if (find_record(m, p.source).split == "train") train.push_back(p);
  if (train.empty()) throw ConfigError("no train-split pairs to learn the mask from");

  const std::size_t n = std::min(train.size(), static_cast<std::size_t>(cfg.mask.max_examples));
  std::vector<MaskTrainingExample> examples;
  for (std::size_t k = 0; k < n; ++k) {
    const PairRecord& p = train[k * train.size() / n];
    if (!p.mask_path) throw ConfigError("pair " + std::to_string(p.pair_id) + " has no mask; run mask-gt first");
    const SampleRecord& s = train_source(m, p);
    examples.push_back({mask_features(load_image(root, s), record_maps(root, s), s.camera, s.light, p.delta),
                        SoftMask{load_raw_f32(root / *p.mask_path)}});
  }
  const MaskTrainResult r = train_mask_predictor(examples, cfg.mask.train);
  write_text(root / layout::kMaskModel, r.params.to_json());
  write_text(root / layout::kMaskLog, Json{{"examples", n}, {"descent", descent_log(r.trace)}}.dump(2) + "\n");
  char buf[128];
  std::snprintf(buf, sizeof buf, "train-mask: %zu examples, loss %.5f -> %.5f", n, r.trace.loss.front(), r.trace.loss.back());
  return {buf};
}

StageResult stage_fit_proxy(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const std::vector<ProxyExample> examples = supervised_examples(load_manifest(root), root);
  const EncoderFitResult r = fit_encoder(examples, cfg.proxy_weights, cfg.proxy_fit);
  write_text(root / layout::kEncoder, r.params.to_json());
  write_text(root / layout::kProxyLog, Json{{"examples", examples.size()}, {"descent", descent_log(r.trace)}}.dump(2) + "\n");
  char buf[128];
  std::snprintf(buf, sizeof buf, "fit-proxy: %zu supervised records, loss %.5f -> %.5f", examples.size(),
                r.trace.loss.front(), r.trace.loss.back());
  return {buf};
}

StageResult stage_dpo(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const std::vector<ProxyExample> examples = supervised_examples(load_manifest(root), root);
  const EncoderParams start = EncoderParams::from_json(read_text(root / layout::kEncoder));
  const DpoResult r = dpo_refine(start, examples, cfg.dpo);
  write_text(root / layout::kEncoderDpo, r.params.to_json());
  Json log = Json::array();
  for (const auto& e : r.log)
    log.push_back({{"iteration", e.iteration}, {"loss", e.loss}, {"mean_reward", e.mean_reward}, {"pairs", e.pairs}});
  write_text(root / layout::kDpoLog, Json{{"log", log}}.dump(2) + "\n");
  char buf[128];
  std::snprintf(buf, sizeof buf, "dpo: %zu iterations logged, mean reward %.5f -> %.5f", r.log.size() - 1,
                r.log.front().mean_reward, mean_reward(r.params, examples));
  return {buf};
}

PredictionSource prediction_source_from_name(const std::string& s) {
  if (s == "proxy") return PredictionSource::proxy;
  if (s == "gbuffer") return PredictionSource::gbuffer;
  if (s == "oracle") return PredictionSource::oracle;
  throw ConfigError("unknown prediction source '" + s + "'");
}

StageResult stage_relight(const PipelineConfig& cfg, const std::filesystem::path& root, PredictionSource source) {
  (void)cfg;
  const Manifest m = load_manifest(root);
  const std::vector<PairRecord> pairs = eval_pairs(m, load_pairs(root));
  std::optional<EncoderParams> encoder;
  if (source == PredictionSource::proxy) encoder = EncoderParams::from_json(read_text(root / layout::kEncoderDpo));

  for (const auto& p : pairs) {
    const SampleRecord& s = find_record(m, p.source);
    const LinearImage src = load_image(root, s);
    LinearImage out;
    if (source == PredictionSource::oracle) {
      out = load_image(root, find_record(m, p.target));
    } else {
      RelightRequest req;
      req.camera = s.camera;
      req.source_light = s.light;
      req.delta = p.delta;
      req.source_image = &src;
      req.specular = s.render.specular;
      if (source == PredictionSource::proxy) {
        req.intrinsics = encode(*encoder, src, load_raw_u8(root / s.coverage_path));
      } else {
        if (!s.gbuffer) throw ConfigError("record " + s.key() + " has no stored G-buffer");
        const GBuffer g = load_gbuffer(root, *s.gbuffer);
        req.intrinsics = ProxyMaps::from_gbuffer(g);
        req.depth = g.depth;
        req.mode = s.render.shadows ? RelightMode::geometric : RelightMode::local;
        req.scene = &s.scene;
      }
      out = relight(req).image;
    }
    write_file(root / layout::prediction_raw(p.pair_id), write_raw_f32(out));
    write_file(root / layout::prediction_png(p.pair_id), encode_srgb_png(out));
  }
  static const char* names[] = {"proxy", "gbuffer", "oracle"};
  return {"relight: " + std::to_string(pairs.size()) + " eval pairs predicted from " + names[static_cast<int>(source)]};
}

StageResult stage_eval(const PipelineConfig& cfg, const std::filesystem::path& root) {
  const Manifest m = load_manifest(root);
  const std::vector<PairRecord> pairs = eval_pairs(m, load_pairs(root));
  std::vector<EvalItem> items;
  for (const auto& p : pairs) {
    EvalItem item{std::to_string(p.pair_id), variation_name(p.variation), load_image(root, find_record(m, p.target)), {}};
    const auto pred = root / layout::prediction_raw(p.pair_id);
    if (std::filesystem::exists(pred)) item.prediction = load_raw_f32(pred);
    items.push_back(std::move(item));
  }
  EvalReport report = evaluate_items(items, cfg.eval_exposure);
  report.manifest_hash = sha256_hex(read_text(root / layout::kManifest));
  report.config_hash = sha256_hex(cfg.to_json());
  write_text(root / layout::kReportCsv, report.to_csv());
  write_text(root / layout::kReportJson, report.to_json());
  char buf[160];
  std::snprintf(buf, sizeof buf, "eval: %zu pairs, psnr %.2f dB, ssim %.4f, rmse %.5f, %zu errors", report.overall.n_pairs,
                report.overall.psnr, report.overall.ssim, report.overall.rmse, report.errors.size());
  return {buf, report.complete() ? 0 : 1};
}

}  // namespace relight
