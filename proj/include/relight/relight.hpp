#pragma once

#include <optional>

#include "relight/image.hpp"
#include "relight/light_model.hpp"
#include "relight/mask.hpp"
#include "relight/renderer.hpp"
#include "relight/surface_maps.hpp"

namespace relight {

enum class RelightMode {
  local,      // shading only; cast shadows are not recomputed
  geometric,  // also re-traces visibility against the supplied scene
};

struct RelightRequest {
  ProxyMaps intrinsics;
  std::optional<Map> depth;  // ray distance per pixel, needed for geometric mode
  CameraPose camera;
  LightParams source_light;
  DeltaL delta;
  RelightMode mode = RelightMode::local;
  const SceneSpec* scene = nullptr;  // geometric mode only
  // Background pixels are copied from here when present, else filled with background.
  const LinearImage* source_image = nullptr;
  Vec3 background{};
  bool specular = true;
  RangePolicy range_policy = RangePolicy::strict;
};

struct RelightResult {
  LinearImage image;
  LightParams target_light;
  bool clamped = false;
};

RelightResult relight(const RelightRequest& req);

struct RelightWithMask {
  RelightResult relit;
  SoftMask mask;
};

RelightWithMask relight_with_mask(const RelightRequest& req, const MaskPredictorParams& mask_params,
                                  const LinearImage& source_image);

}  // namespace relight
