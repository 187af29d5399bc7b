#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "relight/random.hpp"
#include "relight/renderer.hpp"
#include "relight/surface_maps.hpp"

namespace fixtures {

using namespace relight;

inline SceneSpec unit_sphere(const Material& m = {{0.7, 0.5, 0.3}, 0.4, 0.0}) {
  SceneSpec s;
  Primitive p;
  p.shape = Shape::sphere;
  p.material = m;
  s.primitives.push_back(p);
  return s;
}

// Sphere of radius 0.5 resting on a large plane.
inline SceneSpec sphere_on_plane() {
  SceneSpec s;
  Primitive sphere;
  sphere.shape = Shape::sphere;
  sphere.transform.scale = {0.5, 0.5, 0.5};
  sphere.transform.translation = {0.0, 0.0, 0.5};
  sphere.material = {{0.8, 0.8, 0.8}, 0.6, 0.0};
  Primitive plane;
  plane.shape = Shape::plane;
  plane.transform.scale = {4.0, 4.0, 1.0};
  plane.material = {{0.6, 0.6, 0.6}, 0.8, 0.0};
  s.primitives = {sphere, plane};
  return s;
}

inline CameraPose small_camera(int size, const Vec3& pos = {0.0, -3.5, 1.5}) {
  CameraPose cam;
  cam.position = pos;
  cam.look_at = {0.0, 0.0, 0.3};
  cam.width = size;
  cam.height = size;
  return cam;
}

// Random convex single-primitive scene: a sphere or a box, sampled material.
inline SceneSpec random_convex(std::uint64_t seed) {
  Rng rng(seed);
  SceneSpec s;
  Primitive p;
  p.shape = rng.uniform() < 0.5 ? Shape::sphere : Shape::box;
  const double r = rng.uniform(0.5, 0.9);
  p.transform.scale = p.shape == Shape::sphere ? Vec3{r, r, r}
                                               : Vec3{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
  p.transform.rotation = Mat3::rotation(normalize(Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0}), rng.uniform(0.0, 3.0));
  p.material = {{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)},
                rng.uniform(0.1, 1.0),
                rng.uniform() < 0.3 ? 1.0 : rng.uniform(0.0, 0.5)};
  s.primitives.push_back(p);
  s.background = {0.03, 0.03, 0.03};
  return s;
}

// Random proxy maps with every pixel foreground.
inline ProxyMaps random_maps(int h, int w, std::uint64_t seed, bool binary_metal = false) {
  Rng rng(seed);
  ProxyMaps m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      m.coverage(y, x) = 1;
      for (int c = 0; c < 3; ++c) m.albedo(y, x, c) = rng.uniform(0.05, 0.95);
      Vec3 n = normalize(Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 1)});
      for (int c = 0; c < 3; ++c) m.normal(y, x, c) = n[c];
      m.roughness(y, x) = rng.uniform(0.05, 0.95);
      m.metallic(y, x) = binary_metal ? (rng.uniform() < 0.5 ? 0.0 : 1.0) : rng.uniform(0.05, 0.95);
    }
  return m;
}

inline LinearImage random_image(int h, int w, std::uint64_t seed, double lo = 0.05, double hi = 1.0) {
  Rng rng(seed);
  LinearImage img(h, w, 3);
  for (double& v : img.data()) v = rng.uniform(lo, hi);
  return img;
}

// Max relative error between analytic and central-difference gradients,
// |a − n| / max(|a|, |n|, floor).
inline double gradient_check(const std::function<double(const std::vector<double>&, std::vector<double>*)>& f,
                             std::vector<double> params, double h = 1e-5, double floor = 1e-6) {
  std::vector<double> grad(params.size(), 0.0);
  f(params, &grad);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f(params, nullptr);
    params[i] = keep - h;
    const double down = f(params, nullptr);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace fixtures

namespace fixtures {

// Sphere-on-plane pair where a yaw-only edit swings the cast shadow around.
// changed marks pixels whose lit status (facing the light and unoccluded)
// differs between the two lights, dilated by `dilate` pixels.
struct ShadowPair {
  SceneSpec scene;
  CameraPose camera;
  LightParams source, target;
  RenderResult src, tgt;
  Coverage changed;
};

inline ShadowPair moved_shadow_pair(int size = 64, int dilate = 2) {
  ShadowPair f;
  f.scene = sphere_on_plane();
  f.camera = small_camera(size, {0.0, -3.2, 2.6});
  f.source = LightParams::directional(0.2, 0.75, 1000.0, 5500.0);
  f.target = LightParams::directional(1.6, 0.75, 1000.0, 5500.0);
  f.src = render(f.scene, f.camera, f.source);
  f.tgt = render(f.scene, f.camera, f.target);
  const CameraFrame frame(f.camera);
  Coverage raw(size, size, 1, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      if (!f.src.gbuffer.coverage(y, x)) continue;
      const Vec3 dir = primary_ray(f.camera, frame, x, y);
      const Vec3 p = f.camera.position + dir * f.src.gbuffer.depth(y, x);
      const Vec3 n = frame.to_world({f.src.gbuffer.normal(y, x, 0), f.src.gbuffer.normal(y, x, 1),
                                     f.src.gbuffer.normal(y, x, 2)});
      auto lit = [&](const LightParams& l) { return dot(n, l.direction()) > 0 && visibility(f.scene, p, n, l) == 1; };
      raw(y, x) = lit(f.source) != lit(f.target);
    }
  f.changed = Coverage(size, size, 1, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      if (!raw(y, x)) continue;
      for (int dy = -dilate; dy <= dilate; ++dy)
        for (int dx = -dilate; dx <= dilate; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < size && xx >= 0 && xx < size) f.changed(yy, xx) = 1;
        }
    }
  return f;
}

inline double mass_fraction(const Map& mask, const Coverage& region) {
  double inside = 0, total = 0;
  for (std::size_t p = 0; p < mask.pixels(); ++p) {
    total += mask.at(p);
    if (region.at(p)) inside += mask.at(p);
  }
  return total > 0 ? inside / total : 0.0;
}

}  // namespace fixtures

namespace fixtures {

// Copies the samples so range-for over a temporary image stays valid.
template <class T>
std::vector<T> flat(const relight::Image<T>& img) {
  return img.data();
}

}  // namespace fixtures

#include "relight/dataset.hpp"
#include "relight/proxy.hpp"

namespace fixtures {

// Spheres with sampled materials seen from one camera under one light. Pixels
// are split on a checkerboard: `train` supervises the even squares, `held`
// scores the odd ones.
struct SphereSet {
  std::vector<ProxyExample> train;
  std::vector<ProxyExample> held;
  std::vector<relight::LinearImage> images;
};

inline SphereSet sphere_fixture_set(int count = 6, int size = 32, std::uint64_t seed = 2024) {
  SphereSet set;
  const CameraPose cam = small_camera(size, {0.0, -3.0, 0.8});
  const LightParams light = LightParams::directional(-1.9, 1.2, 1000.0, 6000.0);
  for (int i = 0; i < count; ++i) {
    SceneSpec scene = make_object(mix_seed(seed, static_cast<std::uint64_t>(i)), ObjectStyle::sphere, false);
    const RenderResult r = render(scene, CameraPose{cam.position, {0, 0, 0}, cam.up, cam.vfov_rad, size, size}, light);
    const ProxyMaps gt = ProxyMaps::from_gbuffer(r.gbuffer);
    Coverage even(size, size, 1, 0), odd(size, size, 1, 0);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        if (!gt.coverage(y, x)) continue;
        ((x + y) % 2 == 0 ? even : odd)(y, x) = 1;
      }
    set.train.push_back(make_proxy_example(r.image, gt, even));
    set.held.push_back(make_proxy_example(r.image, gt, odd));
    set.images.push_back(r.image);
  }
  return set;
}

// Mean per-channel |â − a| over each example's selected pixels.
inline double albedo_l1(const EncoderParams& params, const std::vector<ProxyExample>& examples) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    const ProxyMaps pred = encode_features(params, ex.features, ex.coverage);
    for (std::size_t p = 0; p < ex.pixels.pixels(); ++p) {
      if (!ex.pixels.at(p)) continue;
      for (int c = 0; c < 3; ++c) total += std::abs(pred.albedo.at(p, c) - ex.gt.albedo.at(p, c));
      n += 3;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace fixtures
