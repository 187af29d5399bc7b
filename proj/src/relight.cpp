#include "relight/relight.hpp"

#include <cmath>

#include "relight/error.hpp"

namespace relight {

RelightResult relight(const RelightRequest& req) {
  req.intrinsics.check_shape();
  req.camera.validate();
  const int h = req.intrinsics.height(), w = req.intrinsics.width();
  require_same_extent(req.camera.height, req.camera.width, h, w, "relight camera");
  if (req.depth) require_same_extent(req.depth->height(), req.depth->width(), h, w, "relight depth");
  if (req.source_image) require_same_extent(req.source_image->height(), req.source_image->width(), h, w, "relight source");
  if (req.mode == RelightMode::geometric) {
    if (!req.depth) throw DomainError("geometric relight needs a depth map");
    if (!req.scene) throw DomainError("geometric relight needs the scene");
  }

  const AppliedLight target = apply_delta(req.source_light, req.delta, req.range_policy);
  const LightParams& lt = target.light;
  RelightResult out{LinearImage(h, w, 3), lt, target.clamped};
  const CameraFrame frame(req.camera);
  const ProxyMaps& in = req.intrinsics;

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!in.coverage(y, x)) {
        for (int c = 0; c < 3; ++c)
          out.image(y, x, c) = req.source_image ? (*req.source_image)(y, x, c) : req.background[c];
        continue;
      }
      const Vec3 dir = primary_ray(req.camera, frame, x, y);
      const Vec3 n = frame.to_world({in.normal(y, x, 0), in.normal(y, x, 1), in.normal(y, x, 2)});
      const Material mat{{in.albedo(y, x, 0), in.albedo(y, x, 1), in.albedo(y, x, 2)},
                         in.roughness(y, x),
                         in.metallic(y, x)};

      const bool has_depth = req.depth && std::isfinite((*req.depth)(y, x));
      const Vec3 p = has_depth ? req.camera.position + dir * (*req.depth)(y, x) : Vec3{};
      // Without depth a point light is evaluated at the object origin.
      const IncidentLight light = incident_light(lt, p);
      Vec3 radiance = shade_pixel(mat, n, -dir, light.direction, light.irradiance, req.specular);
      if (req.mode == RelightMode::geometric && dot(n, light.direction) > 0.0 &&
          visibility(*req.scene, p, n, lt) == 0)
        radiance = {};
      for (int c = 0; c < 3; ++c) out.image(y, x, c) = radiance[c];
    }
  return out;
}

RelightWithMask relight_with_mask(const RelightRequest& req, const MaskPredictorParams& mask_params,
                                  const LinearImage& source_image) {
  RelightWithMask out{relight(req), {}};
  const Image<double> features =
      mask_features(source_image, req.intrinsics, req.camera, req.source_light, req.delta);
  out.mask = predict_mask(mask_params, features);
  return out;
}

}  // namespace relight
