#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relight/image.hpp"
#include "relight/light_model.hpp"
#include "relight/nn.hpp"
#include "relight/renderer.hpp"
#include "relight/surface_maps.hpp"

namespace relight {

inline constexpr double kLuminanceFloor = 1e-6;

// Soft lighting-aware mask with values in [0, 1].
struct SoftMask {
  Map values;
  bool operator==(const SoftMask&) const = default;
};

// Loss weights W = 1 + γ·M, all >= 1.
struct WeightMap {
  Map values;
};

struct MaskConfig {
  double alpha = 0.7;
  std::vector<double> sigmas{1.0, 2.0, 4.0};
  double percentile = 99.0;
  double gamma = 1.0;
};

// Rec. 709 luminance, floored at kLuminanceFloor.
Map luminance(const LinearImage& img);

// Separable Gaussian blur; kernel radius ceil(3σ), edge pixels replicated.
Map gaussian_blur(const Map& map, double sigma);

// |Y_t/med(Y_t) − Y_s/med(Y_s)| on the foreground, averaged over blurs at
// each σ. coverage may be empty (every pixel counts as foreground).
Map robust_distance(const Map& ys, const Map& yt, const Coverage& coverage = {},
                    const std::vector<double>& sigmas = {1.0, 2.0, 4.0});

// Divide by the foreground percentile and clamp to [0, 1].
SoftMask normalize_mask(const Map& raw, const Coverage& coverage = {}, double percentile = 99.0);

Map raw_mask(const LinearImage& xs, const LinearImage& xt, double alpha,
             const Coverage& coverage = {}, const std::vector<double>& sigmas = {1.0, 2.0, 4.0});

SoftMask gt_mask(const LinearImage& xs, const LinearImage& xt, const MaskConfig& cfg = {},
                 const Coverage& coverage = {});

WeightMap mask_to_weight(const SoftMask& mask, double gamma = 1.0);

// mean over pixels of W² · Σ_c (pred − target)².
double weighted_mse(const WeightMap& w, const Image<double>& pred, const Image<double>& target);

// (1 − M) ⊙ base + M ⊙ full, M broadcast over channels.
Image<double> masked_blend(const SoftMask& mask, const Image<double>& base,
                           const Image<double>& full);

inline constexpr int kMaskFeatures = 6;

// Channels: log-luminance, luminance gradient magnitude, predicted diffuse
// shading change, |ΔlogE|, |Δτ|, coverage.
Image<double> mask_features(const LinearImage& xs, const ProxyMaps& intrinsics,
                            const CameraPose& cam, const LightParams& source, const DeltaL& delta);

inline const std::string kMaskSchema = "relight-mask-predictor/1";

struct MaskPredictorParams {
  TwoLayerNet net;

  static MaskPredictorParams init(int hidden, std::uint64_t seed);
  std::string to_json() const { return net_to_json(net, kMaskSchema); }
  static MaskPredictorParams from_json(const std::string& text) {
    return {net_from_json(text, kMaskSchema)};
  }
};

SoftMask predict_mask(const MaskPredictorParams& params, const Image<double>& features);

struct BceDice {
  double bce = 0.0;
  double dice = 0.0;
  double total() const { return bce + dice; }
};

// BCE averaged over pixels plus the soft Dice loss 1 − (2Σpg + ε)/(Σp² + Σg² + ε).
BceDice bce_dice_loss(const SoftMask& pred, const SoftMask& gt);

struct MaskTrainingExample {
  Image<double> features;
  SoftMask target;
};

struct MaskTrainConfig {
  int hidden = 16;
  std::uint64_t seed = 7;
  DescentConfig descent{0.5, 150, 30, 1e3};
  // Train on every stride-th row and column.
  int pixel_stride = 2;
};

struct MaskTrainResult {
  MaskPredictorParams params;
  DescentTrace trace;
};

// Mean BCE+Dice over examples and its gradient with respect to the net.
double mask_objective(const TwoLayerNet& net, const std::vector<MaskTrainingExample>& examples,
                      int pixel_stride, std::vector<double>* grad);

MaskTrainResult train_mask_predictor(const std::vector<MaskTrainingExample>& examples,
                                     const MaskTrainConfig& cfg = {});

}  // namespace relight
