#include "relight/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <set>

#include <httplib.h>

#include "relight/error.hpp"
#include "relight/metrics.hpp"
#include "relight/relight.hpp"

namespace relight {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Per-field tolerance when matching an edited light against manifest lights.
constexpr double kLightMatchTol = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_bound(const char* name, double v, double lo, double hi) {
  if (!std::isfinite(v)) throw RequestError(422, std::string(name) + " must be finite");
  if (v < lo || v > hi)
    throw RequestError(422, std::string(name) + " = " + fmt(v) + " is outside [" + fmt(lo) + ", " + fmt(hi) + "]");
}

double number_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw RequestError(400, std::string("missing field '") + key + "'");
  if (!j.at(key).is_number()) throw RequestError(400, std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

bool lights_match(const LightParams& a, const LightParams& b) {
  if (a.kind != b.kind) return false;
  const Vec3 da = a.direction(), db = b.direction();
  return std::abs(da.x - db.x) <= kLightMatchTol && std::abs(da.y - db.y) <= kLightMatchTol &&
         std::abs(da.z - db.z) <= kLightMatchTol &&
         std::abs(a.energy_lux - b.energy_lux) <= kLightMatchTol * b.energy_lux &&
         std::abs(a.temperature_k - b.temperature_k) <= kLightMatchTol * b.temperature_k &&
         length(a.position - b.position) <= kLightMatchTol * std::max(1.0, length(b.position));
}

Json error_json(int status, const std::string& msg) { return {{"status", status}, {"error", msg}}; }

HttpReply error_reply(int status, const std::string& msg) { return {status, "application/json", error_json(status, msg).dump()}; }

}  // namespace

double EditRequest::dlog_energy() const {
  if (dlux_log) return *dlux_log;
  if (denergy_factor) return std::log(*denergy_factor);
  return 0.0;
}

Json EditRequest::to_json() const {
  Json j = {{"scene_id", scene_id}, {"dyaw_deg", dyaw_deg}, {"dpitch_deg", dpitch_deg}, {"dtemp_k", dtemp_k},
            {"show_mask", show_mask}};
  if (dlux_log) j["dlux_log"] = *dlux_log;
  if (denergy_factor) j["denergy_factor"] = *denergy_factor;
  return j;
}

EditRequest edit_request_from_json(const Json& j) {
  if (!j.is_object()) throw RequestError(400, "request body must be a JSON object");
  static const std::set<std::string> known{"scene_id", "dyaw_deg", "dpitch_deg", "dlux_log",
                                           "denergy_factor", "dtemp_k", "show_mask"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw RequestError(400, "unknown field '" + key + "'");
  EditRequest r;
  if (!j.contains("scene_id") || !j.at("scene_id").is_string()) throw RequestError(400, "field 'scene_id' must be a string");
  r.scene_id = j.at("scene_id").get<std::string>();
  r.dyaw_deg = number_field(j, "dyaw_deg");
  r.dpitch_deg = number_field(j, "dpitch_deg");
  r.dtemp_k = number_field(j, "dtemp_k");
  if (j.contains("dlux_log")) r.dlux_log = number_field(j, "dlux_log");
  if (j.contains("denergy_factor")) r.denergy_factor = number_field(j, "denergy_factor");
  if (!j.contains("show_mask") || !j.at("show_mask").is_boolean()) throw RequestError(400, "field 'show_mask' must be a boolean");
  r.show_mask = j.at("show_mask").get<bool>();

  check_bound("dyaw_deg", r.dyaw_deg, -kMaxYawEditDeg, kMaxYawEditDeg);
  check_bound("dpitch_deg", r.dpitch_deg, -kMaxPitchEditDeg, kMaxPitchEditDeg);
  check_bound("dtemp_k", r.dtemp_k, -kMaxTempEditK, kMaxTempEditK);
  if (r.dlux_log && r.denergy_factor) throw RequestError(422, "give at most one of dlux_log and denergy_factor");
  if (r.dlux_log) check_bound("dlux_log", *r.dlux_log, std::log(kMinEnergyFactor), std::log(kMaxEnergyFactor));
  if (r.denergy_factor) check_bound("denergy_factor", *r.denergy_factor, kMinEnergyFactor, kMaxEnergyFactor);
  return r;
}

EditRequest parse_edit_request(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(400, std::string("malformed JSON: ") + e.what());
  }
  return edit_request_from_json(j);
}

SceneCatalog SceneCatalog::load(const std::filesystem::path& root) {
  SceneCatalog c;
  c.manifest_ = manifest_from_jsonl(read_text(root / "manifest.jsonl"));
  for (const auto& rec : c.manifest_) {
    if (rec.split == "eval") c.truth_[rec.key()] = load_raw_f32(root / rec.image_path);
    if (rec.split != "eval" || rec.light_id != 0) continue;
    SceneEntry e{rec.key(), rec, c.truth_.at(rec.key()), {}};
    e.gbuffer = rec.gbuffer ? load_gbuffer(root, *rec.gbuffer) : render_record(rec).gbuffer;
    c.index_[e.id] = c.scenes_.size();
    c.scenes_.push_back(std::move(e));
  }
  if (c.scenes_.empty()) throw ConfigError("manifest under " + root.string() + " has no eval scenes");
  const auto mask_path = root / "models/mask.json";
  if (std::filesystem::exists(mask_path)) c.mask_model_ = MaskPredictorParams::from_json(read_text(mask_path));
  return c;
}

const LinearImage* SceneCatalog::ground_truth(const std::string& key) const {
  const auto it = truth_.find(key);
  return it == truth_.end() ? nullptr : &it->second;
}

const SceneEntry* SceneCatalog::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &scenes_[it->second];
}

EditResult apply_scene_edit(const SceneCatalog& catalog, const EditRequest& req, const ServiceOptions& opts) {
  const SceneEntry* scene = catalog.find(req.scene_id);
  if (!scene) throw RequestError(404, "unknown scene '" + req.scene_id + "'");
  if (req.show_mask && !catalog.mask_model()) throw RequestError(422, "show_mask needs a trained mask model");
  const SampleRecord& rec = scene->record;

  RelightRequest rr;
  rr.intrinsics = ProxyMaps::from_gbuffer(scene->gbuffer);
  rr.depth = scene->gbuffer.depth;
  rr.camera = rec.camera;
  rr.source_light = rec.light;
  rr.mode = rec.render.shadows ? RelightMode::geometric : RelightMode::local;
  rr.scene = &rec.scene;
  rr.source_image = &scene->source;
  rr.specular = rec.render.specular;
  rr.range_policy = opts.range_policy;
  EditResult out;
  try {
    DeltaL requested;
    requested.edit = {req.dyaw_deg * kDegToRad, req.dpitch_deg * kDegToRad};
    requested.delta_log_e = req.dlog_energy();
    requested.delta_tau = req.dtemp_k / kTemperatureScaleK;
    out.clamped = apply_delta(rec.light, requested, opts.range_policy).clamped;
    rr.delta = make_edit(rec.light, req.dyaw_deg * kDegToRad, req.dpitch_deg * kDegToRad, req.dlog_energy(), req.dtemp_k,
                         opts.range_policy);
  } catch (const RangeError& e) {
    throw RequestError(422, e.what());
  }

  RelightResult relit;
  if (req.show_mask) {
    RelightWithMask both = relight_with_mask(rr, *catalog.mask_model(), scene->source);
    relit = std::move(both.relit);
    out.mask_png = encode_map_png(both.mask.values);
  } else {
    relit = relight(rr);
  }
  out.png = encode_srgb_png(relit.image, opts.exposure);
  out.delta = rr.delta;
  out.target_light = relit.target_light;

  for (const auto& cand : catalog.manifest()) {
    if (cand.object_id != rec.object_id || cand.view_id != rec.view_id || !lights_match(relit.target_light, cand.light))
      continue;
    const LinearImage* truth = catalog.ground_truth(cand.key());
    if (!truth) break;
    const Image<double> a = normalize_pm1(relit.image, opts.exposure), b = normalize_pm1(*truth, opts.exposure);
    out.metrics = EditMetrics{cand.key(), rmse(a, b), ssim(a, b), psnr(a, b)};
    break;
  }
  return out;
}

Bytes scene_preview(const SceneCatalog& catalog, const std::string& scene_id, const ServiceOptions& opts) {
  EditRequest zero;
  zero.scene_id = scene_id;
  return apply_scene_edit(catalog, zero, opts).png;
}

Json scenes_listing(const SceneCatalog& catalog) {
  Json list = Json::array();
  for (const auto& s : catalog.scenes())
    list.push_back({{"id", s.id},
                    {"object_id", s.record.object_id},
                    {"view_id", s.record.view_id},
                    {"width", s.source.width()},
                    {"height", s.source.height()},
                    {"source_light", to_json(s.record.light)}});
  return {{"scenes", list}};
}

Json edit_response_json(const EditResult& r, double timing_ms) {
  Json j = {{"png_base64", base64_encode_bytes(r.png)},
            {"delta_l", to_json(r.delta)},
            {"target_light", to_json(r.target_light)},
            {"clamped", r.clamped},
            {"timing_ms", timing_ms}};
  if (r.mask_png) j["mask_png_base64"] = base64_encode_bytes(*r.mask_png);
  if (r.metrics)
    j["metrics"] = {{"target_id", r.metrics->target_id}, {"rmse", r.metrics->rmse}, {"ssim", r.metrics->ssim},
                    {"psnr", r.metrics->psnr}};
  return j;
}

HttpReply handle_request(const SceneCatalog& catalog, const ServiceOptions& opts, const std::string& method,
                         const std::string& path, const std::string& body) {
  try {
    if (path == "/v1/scenes") {
      if (method != "GET") return error_reply(405, "use GET for " + path);
      return {200, "application/json", scenes_listing(catalog).dump()};
    }
    const std::string prefix = "/v1/scenes/", suffix = "/preview";
    if (path.rfind(prefix, 0) == 0 && path.size() > prefix.size() + suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (method != "GET") return error_reply(405, "use GET for " + path);
      const std::string id = path.substr(prefix.size(), path.size() - prefix.size() - suffix.size());
      const std::string png = [&] {
        const Bytes b = scene_preview(catalog, id, opts);
        return std::string(b.begin(), b.end());
      }();
      return {200, "image/png", png};
    }
    if (path == "/v1/relight") {
      if (method != "POST") return error_reply(405, "use POST for " + path);
      const auto start = std::chrono::steady_clock::now();
      const EditResult r = apply_scene_edit(catalog, parse_edit_request(body), opts);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      return {200, "application/json", edit_response_json(r, ms).dump()};
    }
    return error_reply(404, "no route for " + path);
  } catch (const RequestError& e) {
    return error_reply(e.status(), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

struct HttpService::Impl {
  const SceneCatalog& catalog;
  ServiceOptions opts;
  httplib::Server server;
  std::atomic<bool> stopping{false};
};

HttpService::HttpService(const SceneCatalog& catalog, ServiceOptions opts) : impl_(new Impl{catalog, std::move(opts), {}, {}}) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    const HttpReply reply = handle_request(impl_->catalog, impl_->opts, req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::cerr << Json{{"event", "request"}, {"method", req.method}, {"path", req.path}, {"status", reply.status}, {"ms", ms}}.dump()
              << std::endl;
  };
  impl_->server.Get(R"(/v1/.*)", route);
  impl_->server.Post(R"(/v1/.*)", route);
  if (!impl_->opts.static_dir.empty() && !impl_->server.set_mount_point("/", impl_->opts.static_dir))
    throw ConfigError("static asset directory " + impl_->opts.static_dir + " does not exist");
}

HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  std::cerr << Json{{"event", "listening"}, {"host", host}, {"port", bound}, {"scenes", impl_->catalog.scenes().size()}}.dump()
            << std::endl;
  return bound;
}

void HttpService::run() {
  if (!impl_->server.listen_after_bind() && !impl_->stopping) throw IoError("HTTP listener stopped unexpectedly");
}

void HttpService::stop() {
  impl_->stopping = true;
  impl_->server.stop();
}

void serve(const SceneCatalog& catalog, const ServiceOptions& opts, const std::string& host, int port) {
  HttpService service(catalog, opts);
  service.bind(host, port);
  service.run();
}

}  // namespace relight
