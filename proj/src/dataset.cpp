#include "relight/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>

#include "relight/error.hpp"
#include "relight/random.hpp"
#include "relight/serialize.hpp"

namespace relight {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

Material random_material(Rng& rng) {
  Material m;
  m.albedo = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
  m.roughness = rng.uniform(0.2, 0.9);
  m.metallic = rng.uniform() < 0.2 ? 1.0 : 0.0;
  return m;
}

std::uint64_t object_hash(int object_id) { return mix_seed(0x6f626a656374ULL, static_cast<std::uint64_t>(object_id)); }

}  // namespace

const char* variation_name(Variation v) {
  switch (v) {
    case Variation::base: return "base";
    case Variation::temperature: return "temperature";
    case Variation::position: return "position";
    case Variation::energy: return "energy";
    case Variation::mixed: return "mixed";
  }
  return "mixed";
}

Variation variation_from_name(const std::string& s) {
  for (Variation v : {Variation::base, Variation::temperature, Variation::position, Variation::energy, Variation::mixed})
    if (s == variation_name(v)) return v;
  throw IoError("unknown variation '" + s + "'");
}

CameraPose sample_camera_hemisphere(std::uint64_t seed, double radius_min, double radius_max,
                                    const Vec3& target, const CameraIntrinsics& intr) {
  if (!(radius_min > 0.0 && radius_max >= radius_min)) throw ConfigError("camera radius range must be positive");
  Rng rng(seed);
  // Uniform cos(polar) gives uniform area on the hemisphere.
  const double cos_polar = rng.uniform();
  const double azimuth = 2.0 * kPi * rng.uniform();
  const double radius = rng.uniform(radius_min, radius_max);
  const double sin_polar = std::sqrt(std::max(0.0, 1.0 - cos_polar * cos_polar));
  CameraPose cam;
  cam.position = target + Vec3{std::cos(azimuth) * sin_polar, std::sin(azimuth) * sin_polar, cos_polar} * radius;
  cam.look_at = target;
  cam.up = sin_polar < 1e-3 ? Vec3{0.0, 1.0, 0.0} : Vec3{0.0, 0.0, 1.0};
  cam.vfov_rad = intr.vfov_rad;
  cam.width = intr.width;
  cam.height = intr.height;
  cam.validate();
  return cam;
}

Variation classify_variation(const LightParams& a, const LightParams& b) {
  const bool temp = a.temperature_k != b.temperature_k;
  const bool pos = a.yaw_rad != b.yaw_rad || a.pitch_rad != b.pitch_rad || !(a.position == b.position) || a.kind != b.kind;
  const bool energy = a.energy_lux != b.energy_lux;
  const int count = int(temp) + int(pos) + int(energy);
  if (count == 0) return Variation::base;
  if (count > 1) return Variation::mixed;
  return temp ? Variation::temperature : (pos ? Variation::position : Variation::energy);
}

std::vector<LightVariation> sample_light_variations(const LightParams& base, const LightRanges& r, int n,
                                                    std::uint64_t seed) {
  base.validate();
  if (n < 1) throw ConfigError("need at least one light variation");
  if (r.yaw_deg < 0 || r.pitch_deg < 0 || r.log_energy < 0 || r.temperature_k < 0)
    throw ConfigError("perturbation ranges must be nonnegative");
  if (!(base.pitch_rad - r.pitch_deg * kDeg > 0.0 && base.pitch_rad + r.pitch_deg * kDeg < kPi))
    throw ConfigError("pitch range leaves (0, pi) around the base light");
  if (!(base.temperature_k - r.temperature_k >= kMinTemperatureK &&
        base.temperature_k + r.temperature_k <= kMaxTemperatureK))
    throw ConfigError("temperature range leaves [1000, 12000] K around the base light");

  std::vector<Variation> kinds;
  if (r.temperature_k > 0) kinds.push_back(Variation::temperature);
  if (r.yaw_deg > 0 || r.pitch_deg > 0) kinds.push_back(Variation::position);
  if (r.log_energy > 0) kinds.push_back(Variation::energy);
  if (kinds.empty()) throw ConfigError("all perturbation ranges are zero");
  if (r.allow_mixed && kinds.size() > 1) kinds.push_back(Variation::mixed);

  Rng rng(seed);
  std::vector<LightVariation> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    const Variation kind = kinds[rng.below(kinds.size())];
    const bool all = kind == Variation::mixed;
    DeltaL d;
    if (kind == Variation::temperature || all) d.delta_tau = rng.uniform(-1, 1) * r.temperature_k / kTemperatureScaleK;
    if (kind == Variation::position || all) {
      d.edit.dyaw_rad = rng.uniform(-1, 1) * r.yaw_deg * kDeg;
      d.edit.dpitch_rad = rng.uniform(-1, 1) * r.pitch_deg * kDeg;
    }
    if (kind == Variation::energy || all) d.delta_log_e = rng.uniform(-1, 1) * r.log_energy;
    LightParams light = apply_delta(base, d).light;
    const Variation got = classify_variation(base, light);
    if (got == Variation::base) continue;
    out.push_back({light, got});
  }
  return out;
}

void DatasetConfig::validate() const {
  if (objects < 1 || views < 1 || lights < 1) throw ConfigError("objects, views and lights must be >= 1");
  if (camera.width <= 0 || camera.height <= 0) throw ConfigError("image size must be positive");
  if (!(supervision_fraction >= 0.0 && supervision_fraction <= 1.0))
    throw ConfigError("supervision fraction must lie in [0, 1]");
  if (eval_objects < 0 || eval_objects >= objects) throw ConfigError("eval_objects must be in [0, objects)");
  if (!(point_light_fraction >= 0.0 && point_light_fraction <= 1.0))
    throw ConfigError("point light fraction must lie in [0, 1]");
  if (!(radius_min > 0.0 && radius_max >= radius_min)) throw ConfigError("camera radius range must be positive");
}

Vec3 object_target(ObjectStyle style) { return style == ObjectStyle::sphere ? Vec3{} : Vec3{0.0, 0.0, 0.4}; }

SceneSpec make_object(std::uint64_t seed, ObjectStyle style, bool ground_plane) {
  Rng rng(seed);
  SceneSpec scene;
  const double bg = rng.uniform(0.02, 0.08);
  scene.background = {bg, bg, bg};
  if (style == ObjectStyle::sphere) {
    Primitive p;
    p.shape = Shape::sphere;
    const double radius = rng.uniform(0.7, 1.0);
    p.transform.scale = {radius, radius, radius};
    p.material = random_material(rng);
    scene.primitives.push_back(p);
    return scene;
  }
  const int count = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < count; ++i) {
    Primitive p;
    p.shape = rng.uniform() < 0.5 ? Shape::sphere : Shape::box;
    if (p.shape == Shape::sphere) {
      const double s = rng.uniform(0.25, 0.55);
      p.transform.scale = {s, s, s};
    } else {
      p.transform.scale = {rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5)};
      p.transform.rotation = Mat3::rotation({0.0, 0.0, 1.0}, rng.uniform(0.0, kPi));
    }
    p.transform.translation = {rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), p.transform.scale.z};
    p.material = random_material(rng);
    scene.primitives.push_back(p);
  }
  if (ground_plane) {
    Primitive g;
    g.shape = Shape::plane;
    g.transform.scale = {3.0, 3.0, 1.0};
    const double a = rng.uniform(0.3, 0.8);
    g.material = {{a, a, a}, rng.uniform(0.6, 1.0), 0.0};
    scene.primitives.push_back(g);
  }
  return scene;
}

std::string record_key(int object_id, int view_id, int light_id) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "o%04d_v%02d_l%02d", object_id, view_id, light_id);
  return buf;
}

std::string SampleRecord::key() const { return record_key(object_id, view_id, light_id); }

RenderResult render_record(const SampleRecord& rec) { return render(rec.scene, rec.camera, rec.light, rec.render); }

Manifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& root) {
  cfg.validate();
  Manifest manifest;
  const std::uint64_t seed = cfg.seed;

  // Eval objects: the highest object hashes.
  std::vector<int> by_hash(static_cast<std::size_t>(cfg.objects));
  for (int i = 0; i < cfg.objects; ++i) by_hash[static_cast<std::size_t>(i)] = i;
  std::sort(by_hash.begin(), by_hash.end(), [](int a, int b) { return object_hash(a) > object_hash(b); });
  std::vector<bool> is_eval(static_cast<std::size_t>(cfg.objects), false);
  for (int i = 0; i < cfg.eval_objects; ++i) is_eval[static_cast<std::size_t>(by_hash[static_cast<std::size_t>(i)])] = true;

  for (int o = 0; o < cfg.objects; ++o) {
    const SceneSpec scene = make_object(mix_seed(seed, static_cast<std::uint64_t>(o), 1), cfg.style, cfg.ground_plane);
    const Vec3 target = object_target(cfg.style);
    for (int v = 0; v < cfg.views; ++v) {
      const CameraPose cam = sample_camera_hemisphere(mix_seed(seed, static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(v), 2),
                                                      cfg.radius_min, cfg.radius_max, target, cfg.camera);
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(v), 3));
      const double yaw = rng.uniform(0.0, 2.0 * kPi);
      const double pitch = rng.uniform(25.0, 65.0) * kDeg;
      const double energy = rng.uniform(600.0, 1400.0);
      const double temp = rng.uniform(3500.0, 7500.0);
      const bool point = rng.uniform() < cfg.point_light_fraction;
      const LightParams base = point ? LightParams::point(yaw, pitch, rng.uniform(3.0, 5.0), energy, temp)
                                     : LightParams::directional(yaw, pitch, energy, temp);
      std::vector<LightVariation> lights{{base, Variation::base}};
      if (cfg.lights > 1) {
        auto more = sample_light_variations(base, cfg.ranges, cfg.lights - 1,
                                            mix_seed(seed, static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(v), 4));
        lights.insert(lights.end(), more.begin(), more.end());
      }
      for (int l = 0; l < cfg.lights; ++l) {
        SampleRecord rec;
        rec.object_id = o;
        rec.view_id = v;
        rec.light_id = l;
        rec.split = is_eval[static_cast<std::size_t>(o)] ? "eval" : "train";
        rec.camera = cam;
        rec.light = lights[static_cast<std::size_t>(l)].light;
        rec.variation = lights[static_cast<std::size_t>(l)].kind;
        rec.scene = scene;
        rec.render = cfg.render;
        const std::string key = rec.key();
        rec.image_path = "images/" + key + ".raw";
        rec.coverage_path = "coverage/" + key + ".raw";
        if (cfg.write_previews) rec.preview_path = "previews/" + key + ".png";
        manifest.push_back(std::move(rec));
      }
    }
  }

  // Supervised subset: floor(fraction * N) train records, ordered by object hash.
  const auto wanted = static_cast<std::size_t>(std::floor(cfg.supervision_fraction * static_cast<double>(manifest.size()) + 1e-9));
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    if (manifest[i].split == "train") order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = manifest[a];
    const auto& rb = manifest[b];
    return std::make_tuple(object_hash(ra.object_id), ra.view_id, ra.light_id) <
           std::make_tuple(object_hash(rb.object_id), rb.view_id, rb.light_id);
  });
  for (std::size_t i = 0; i < std::min(wanted, order.size()); ++i) manifest[order[i]].has_pbr_supervision = true;
  for (auto& rec : manifest)
    if (rec.has_pbr_supervision || rec.split == "eval") rec.gbuffer = gbuffer_paths("gbuffers/" + rec.key());

  // Records are independent; workers claim them by index.
  std::atomic<std::size_t> next{0};
  std::vector<std::string> failures(manifest.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      const SampleRecord& rec = manifest[i];
      try {
        const RenderResult r = render_record(rec);
        write_file(root / rec.image_path, write_raw_f32(r.image));
        write_file(root / rec.coverage_path, write_raw_u8(r.gbuffer.coverage));
        if (!rec.preview_path.empty()) write_file(root / rec.preview_path, encode_srgb_png(r.image));
        if (rec.gbuffer) save_gbuffer(root, *rec.gbuffer, r.gbuffer);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < manifest.size(); ++i)
    if (!failures[i].empty()) throw IoError("record " + manifest[i].key() + ": " + failures[i]);

  write_text(root / "manifest.jsonl", manifest_to_jsonl(manifest));
  return manifest;
}

std::string manifest_to_jsonl(const Manifest& m) {
  std::ostringstream os;
  for (const auto& r : m) {
    Json j = {{"schema", kManifestSchema},
              {"type", "sample"},
              {"key", r.key()},
              {"object_id", r.object_id},
              {"view_id", r.view_id},
              {"light_id", r.light_id},
              {"split", r.split},
              {"camera", to_json(r.camera)},
              {"light", to_json(r.light)},
              {"variation", variation_name(r.variation)},
              {"scene", to_json(r.scene)},
              {"render", to_json(r.render)},
              {"image_path", r.image_path},
              {"coverage_path", r.coverage_path},
              {"preview_path", r.preview_path},
              {"has_pbr_supervision", r.has_pbr_supervision}};
    if (r.gbuffer)
      j["gbuffer_paths"] = {{"albedo", r.gbuffer->albedo},       {"normal", r.gbuffer->normal},
                            {"roughness", r.gbuffer->roughness}, {"metallic", r.gbuffer->metallic},
                            {"depth", r.gbuffer->depth},         {"coverage", r.gbuffer->coverage}};
    os << j.dump() << '\n';
  }
  return os.str();
}

Manifest manifest_from_jsonl(const std::string& text) {
  Manifest m;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (j.at("schema").get<std::string>() != kManifestSchema) throw IoError("unsupported schema");
      if (j.at("type").get<std::string>() != "sample") continue;
      SampleRecord r;
      r.object_id = j.at("object_id").get<int>();
      r.view_id = j.at("view_id").get<int>();
      r.light_id = j.at("light_id").get<int>();
      r.split = j.at("split").get<std::string>();
      r.camera = camera_from_json(j.at("camera"));
      r.light = light_from_json(j.at("light"));
      r.variation = variation_from_name(j.at("variation").get<std::string>());
      r.scene = scene_from_json(j.at("scene"));
      r.render = render_options_from_json(j.at("render"));
      r.image_path = j.at("image_path").get<std::string>();
      r.coverage_path = j.at("coverage_path").get<std::string>();
      r.preview_path = j.value("preview_path", "");
      r.has_pbr_supervision = j.at("has_pbr_supervision").get<bool>();
      if (j.contains("gbuffer_paths")) {
        const Json& g = j.at("gbuffer_paths");
        r.gbuffer = GBufferPaths{g.at("albedo"), g.at("normal"), g.at("roughness"),
                                 g.at("metallic"), g.at("depth"), g.at("coverage")};
      }
      m.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw IoError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

std::string pairs_to_jsonl(const std::vector<PairRecord>& pairs) {
  std::ostringstream os;
  for (const auto& p : pairs) {
    Json j = {{"schema", kManifestSchema}, {"type", "pair"},         {"pair_id", p.pair_id},
              {"source", p.source},        {"target", p.target},     {"object_id", p.object_id},
              {"view_id", p.view_id},      {"delta", to_json(p.delta)}, {"variation", variation_name(p.variation)}};
    if (p.mask_path) j["mask_path"] = *p.mask_path;
    os << j.dump() << '\n';
  }
  return os.str();
}

std::vector<PairRecord> pairs_from_jsonl(const std::string& text) {
  std::vector<PairRecord> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (j.at("schema").get<std::string>() != kManifestSchema) throw IoError("unsupported schema");
      if (j.at("type").get<std::string>() != "pair") continue;
      PairRecord p;
      p.pair_id = j.at("pair_id").get<int>();
      p.source = j.at("source").get<std::string>();
      p.target = j.at("target").get<std::string>();
      p.object_id = j.at("object_id").get<int>();
      p.view_id = j.at("view_id").get<int>();
      p.delta = delta_from_json(j.at("delta"));
      p.variation = variation_from_name(j.at("variation").get<std::string>());
      if (j.contains("mask_path")) p.mask_path = j.at("mask_path").get<std::string>();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw IoError("pairs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

const SampleRecord& find_record(const Manifest& m, const std::string& key) {
  for (const auto& r : m)
    if (r.key() == key) return r;
  throw IoError("manifest has no record " + key);
}

PairSampling sample_pairs(const Manifest& manifest, int per_view, std::uint64_t seed) {
  if (per_view < 1) throw ConfigError("pairs per view must be >= 1");
  std::map<std::pair<int, int>, std::vector<const SampleRecord*>> views;
  for (const auto& r : manifest) views[{r.object_id, r.view_id}].push_back(&r);

  PairSampling out;
  for (auto& [key, recs] : views) {
    if (recs.size() < 2) {
      ++out.warnings;
      continue;
    }
    std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->light_id < b->light_id; });
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t s = 0; s < recs.size(); ++s)
      for (std::size_t t = 0; t < recs.size(); ++t)
        if (s != t && !(recs[s]->light == recs[t]->light)) candidates.emplace_back(s, t);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second), 5));
    for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[rng.below(i)]);
    const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(per_view));
    for (std::size_t i = 0; i < take; ++i) {
      const SampleRecord& s = *recs[candidates[i].first];
      const SampleRecord& t = *recs[candidates[i].second];
      PairRecord p;
      p.pair_id = static_cast<int>(out.pairs.size());
      p.source = s.key();
      p.target = t.key();
      p.object_id = s.object_id;
      p.view_id = s.view_id;
      p.delta = delta_illumination(s.light, t.light);
      p.variation = classify_variation(s.light, t.light);
      out.pairs.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace relight
