#pragma once

#include "relight/image.hpp"
#include "relight/renderer.hpp"

namespace relight {

// Per-pixel intrinsics {a, n, r, m}: 8 channels in total, plus the
// foreground coverage they are defined on. Normals are camera-space, matching
// the G-buffer layout so either source feeds the same consumers.
struct ProxyMaps {
  Image<double> albedo;  // H x W x 3
  Image<double> normal;  // H x W x 3
  Map roughness;         // H x W
  Map metallic;          // H x W
  Coverage coverage;     // H x W

  ProxyMaps() = default;
  ProxyMaps(int h, int w);

  static ProxyMaps from_gbuffer(const GBuffer& g);

  int height() const { return coverage.height(); }
  int width() const { return coverage.width(); }
  std::size_t foreground_count() const;
  void check_shape() const;
  bool operator==(const ProxyMaps&) const = default;
};

inline constexpr int kProxyChannels = 8;

}  // namespace relight
