#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relight/image_io.hpp"
#include "relight/light_model.hpp"
#include "relight/renderer.hpp"

namespace relight {

inline const std::string kManifestSchema = "scalight-mini/1";

struct CameraIntrinsics {
  double vfov_rad = 0.75;
  int width = 128;
  int height = 128;
};

// Uniform over the upper hemisphere around target, radius uniform in range.
CameraPose sample_camera_hemisphere(std::uint64_t seed, double radius_min, double radius_max,
                                    const Vec3& target, const CameraIntrinsics& intr = {});

enum class Variation { base, temperature, position, energy, mixed };
const char* variation_name(Variation v);
Variation variation_from_name(const std::string& s);

// Symmetric perturbation half-widths; a zero disables that attribute.
struct LightRanges {
  double yaw_deg = 90.0;
  double pitch_deg = 20.0;
  double log_energy = 0.7;
  double temperature_k = 2000.0;
  bool allow_mixed = false;
};

struct LightVariation {
  LightParams light;
  Variation kind = Variation::base;
};

std::vector<LightVariation> sample_light_variations(const LightParams& base, const LightRanges& ranges,
                                                    int n, std::uint64_t seed);

// Which attributes differ between two lights.
Variation classify_variation(const LightParams& a, const LightParams& b);

enum class ObjectStyle { composite, sphere };

struct DatasetConfig {
  std::uint64_t seed = 1234;
  int objects = 16;
  int views = 4;
  int lights = 8;
  CameraIntrinsics camera{};
  double radius_min = 3.0;
  double radius_max = 4.0;
  double supervision_fraction = 0.03;
  int eval_objects = 2;
  ObjectStyle style = ObjectStyle::composite;
  bool ground_plane = true;
  double point_light_fraction = 0.25;
  LightRanges ranges{};
  RenderOptions render{};
  bool write_previews = true;

  void validate() const;
};

SceneSpec make_object(std::uint64_t seed, ObjectStyle style, bool ground_plane);
Vec3 object_target(ObjectStyle style);

struct SampleRecord {
  int object_id = 0;
  int view_id = 0;
  int light_id = 0;
  std::string split = "train";  // "train" or "eval"
  CameraPose camera;
  LightParams light;
  Variation variation = Variation::base;  // relative to light 0 of the view
  SceneSpec scene;
  RenderOptions render;
  std::string image_path;
  std::string coverage_path;
  std::string preview_path;  // empty when previews are off
  std::optional<GBufferPaths> gbuffer;
  bool has_pbr_supervision = false;

  std::string key() const;
};

struct PairRecord {
  int pair_id = 0;
  std::string source;  // SampleRecord key
  std::string target;
  int object_id = 0;
  int view_id = 0;
  DeltaL delta;
  Variation variation = Variation::mixed;
  std::optional<std::string> mask_path;
};

using Manifest = std::vector<SampleRecord>;

std::string record_key(int object_id, int view_id, int light_id);

std::string manifest_to_jsonl(const Manifest& m);
Manifest manifest_from_jsonl(const std::string& text);
std::string pairs_to_jsonl(const std::vector<PairRecord>& pairs);
std::vector<PairRecord> pairs_from_jsonl(const std::string& text);

const SampleRecord& find_record(const Manifest& m, const std::string& key);

// Renders every (object, view, light) tuple under root and returns the manifest
// (also written to root/manifest.jsonl).
Manifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& root);

// Re-render a record from its own metadata.
RenderResult render_record(const SampleRecord& rec);

struct PairSampling {
  std::vector<PairRecord> pairs;
  int warnings = 0;  // views skipped for having fewer than two lights
};

PairSampling sample_pairs(const Manifest& manifest, int per_view, std::uint64_t seed);

}  // namespace relight
