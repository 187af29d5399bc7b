#include "relight/surface_maps.hpp"

#include <algorithm>

namespace relight {

ProxyMaps::ProxyMaps(int h, int w)
    : albedo(h, w, 3), normal(h, w, 3), roughness(h, w, 1), metallic(h, w, 1), coverage(h, w, 1, 0) {}

ProxyMaps ProxyMaps::from_gbuffer(const GBuffer& g) {
  ProxyMaps p;
  p.albedo = g.albedo;
  p.normal = g.normal;
  p.roughness = g.roughness;
  p.metallic = g.metallic;
  p.coverage = g.coverage;
  p.check_shape();
  return p;
}

std::size_t ProxyMaps::foreground_count() const {
  return static_cast<std::size_t>(std::count(coverage.data().begin(), coverage.data().end(), 1));
}

void ProxyMaps::check_shape() const {
  const int h = height(), w = width();
  require_same_extent(albedo.height(), albedo.width(), h, w, "proxy albedo");
  require_same_extent(normal.height(), normal.width(), h, w, "proxy normal");
  require_same_extent(roughness.height(), roughness.width(), h, w, "proxy roughness");
  require_same_extent(metallic.height(), metallic.width(), h, w, "proxy metallic");
  if (albedo.channels() != 3 || normal.channels() != 3 || roughness.channels() != 1 ||
      metallic.channels() != 1)
    throw ShapeError("proxy maps must carry 3+3+1+1 channels");
}

}  // namespace relight
