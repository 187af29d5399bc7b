#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relight/dataset.hpp"
#include "relight/dpo.hpp"
#include "relight/mask.hpp"
#include "relight/metrics.hpp"
#include "relight/proxy.hpp"
#include "relight/relight.hpp"

namespace relight {

struct MaskStageConfig {
  MaskConfig gt{};
  MaskTrainConfig train{};
  // Cap on training pairs, taken evenly across the train-split pair list.
  int max_examples = 48;
};

struct PipelineConfig {
  std::uint64_t seed = 1234;
  std::string output_root = "out";
  DatasetConfig dataset{};
  int pairs_per_view = 4;
  MaskStageConfig mask{};
  ProxyLossWeights proxy_weights{};
  EncoderFitConfig proxy_fit{};
  DpoConfig dpo{};
  double eval_exposure = 1.0;

  // Unknown keys anywhere in the document raise ConfigError.
  static PipelineConfig from_json(const std::string& text);
  // Omits output_root so artifacts do not depend on where they are written.
  std::string to_json() const;
  // Propagates the top-level seed into every stage.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Fixed artifact layout under the output root.
namespace layout {
inline const std::string kManifest = "manifest.jsonl";
inline const std::string kPairs = "pairs.jsonl";
inline const std::string kConfig = "config.json";
inline const std::string kMaskModel = "models/mask.json";
inline const std::string kEncoder = "models/encoder.json";
inline const std::string kEncoderDpo = "models/encoder_dpo.json";
inline const std::string kMaskLog = "logs/mask_train.json";
inline const std::string kProxyLog = "logs/proxy_fit.json";
inline const std::string kDpoLog = "logs/dpo.json";
inline const std::string kReportCsv = "report.csv";
inline const std::string kReportJson = "report.json";
std::string mask_raw(int pair_id);
std::string mask_png(int pair_id);
std::string prediction_raw(int pair_id);
std::string prediction_png(int pair_id);
}  // namespace layout

struct StageResult {
  std::string summary;
  int exit_code = 0;
};

StageResult stage_gen(const PipelineConfig& cfg, const std::filesystem::path& root);
StageResult stage_pairs(const PipelineConfig& cfg, const std::filesystem::path& root);
StageResult stage_mask_gt(const PipelineConfig& cfg, const std::filesystem::path& root);
StageResult stage_train_mask(const PipelineConfig& cfg, const std::filesystem::path& root);
StageResult stage_fit_proxy(const PipelineConfig& cfg, const std::filesystem::path& root);
StageResult stage_dpo(const PipelineConfig& cfg, const std::filesystem::path& root);

enum class PredictionSource {
  proxy,    // refined encoder maps, local mode
  gbuffer,  // stored G-buffer, geometric mode against the recorded scene
  oracle,   // the stored target render
};
PredictionSource prediction_source_from_name(const std::string& s);

StageResult stage_relight(const PipelineConfig& cfg, const std::filesystem::path& root,
                          PredictionSource source = PredictionSource::proxy);
// Nonzero exit code when any eval pair lacks a prediction.
StageResult stage_eval(const PipelineConfig& cfg, const std::filesystem::path& root);

// Eval-split pairs in pair-id order.
std::vector<PairRecord> eval_pairs(const Manifest& manifest, const std::vector<PairRecord>& pairs);

// Supervised train-split records as encoder training examples.
std::vector<ProxyExample> supervised_examples(const Manifest& manifest, const std::filesystem::path& root);

Manifest load_manifest(const std::filesystem::path& root);
std::vector<PairRecord> load_pairs(const std::filesystem::path& root);

}  // namespace relight
