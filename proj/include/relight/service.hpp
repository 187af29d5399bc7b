#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relight/dataset.hpp"
#include "relight/image_io.hpp"
#include "relight/mask.hpp"
#include "relight/serialize.hpp"

namespace relight {

// Slider bounds shared by request validation and the edit history.
inline constexpr double kMaxYawEditDeg = 180.0;
inline constexpr double kMaxPitchEditDeg = 80.0;
inline constexpr double kMinEnergyFactor = 0.1;
inline constexpr double kMaxEnergyFactor = 10.0;
inline constexpr double kMaxTempEditK = 5000.0;

// An edit in human units, as posted to /v1/relight.
struct EditRequest {
  std::string scene_id;
  double dyaw_deg = 0.0;
  double dpitch_deg = 0.0;
  std::optional<double> dlux_log;        // natural-log energy change
  std::optional<double> denergy_factor;  // multiplicative energy change
  double dtemp_k = 0.0;
  bool show_mask = false;

  double dlog_energy() const;
  Json to_json() const;
};

// Carries the HTTP status a failure maps to.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& msg)
      : Error(status == 400 ? Kind::io : Kind::range, msg), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Parses and range-checks a request body: 400 for malformed JSON or types,
// 422 for values outside the slider bounds.
EditRequest parse_edit_request(const std::string& body);
EditRequest edit_request_from_json(const Json& j);

struct SceneEntry {
  std::string id;
  SampleRecord record;
  LinearImage source;
  GBuffer gbuffer;
};

// Read-only snapshot of the eval scenes under an output root. Built once;
// every request reads it concurrently without locking.
class SceneCatalog {
 public:
  static SceneCatalog load(const std::filesystem::path& root);

  const std::vector<SceneEntry>& scenes() const { return scenes_; }
  const SceneEntry* find(const std::string& id) const;
  const Manifest& manifest() const { return manifest_; }
  // Stored render of any eval record, or null.
  const LinearImage* ground_truth(const std::string& key) const;
  const std::optional<MaskPredictorParams>& mask_model() const { return mask_model_; }

 private:
  Manifest manifest_;
  std::vector<SceneEntry> scenes_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, LinearImage> truth_;
  std::optional<MaskPredictorParams> mask_model_;
};

struct ServiceOptions {
  RangePolicy range_policy = RangePolicy::strict;
  double exposure = 1.0;
  std::string static_dir;  // explorer assets mounted at / when set
};

struct EditMetrics {
  std::string target_id;
  double rmse = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

struct EditResult {
  Bytes png;
  std::optional<Bytes> mask_png;
  DeltaL delta;
  LightParams target_light;
  bool clamped = false;
  std::optional<EditMetrics> metrics;
};

// The single relight path behind both the service and CLI replay.
EditResult apply_scene_edit(const SceneCatalog& catalog, const EditRequest& req, const ServiceOptions& opts = {});
Bytes scene_preview(const SceneCatalog& catalog, const std::string& scene_id, const ServiceOptions& opts = {});

Json scenes_listing(const SceneCatalog& catalog);
Json edit_response_json(const EditResult& r, double timing_ms);

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Routes one request under /v1 without any network I/O.
HttpReply handle_request(const SceneCatalog& catalog, const ServiceOptions& opts, const std::string& method,
                         const std::string& path, const std::string& body);

// HTTP/1.1 front end over handle_request.
class HttpService {
 public:
  HttpService(const SceneCatalog& catalog, ServiceOptions opts);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Binds and serves until the process stops.
void serve(const SceneCatalog& catalog, const ServiceOptions& opts, const std::string& host, int port);

}  // namespace relight
