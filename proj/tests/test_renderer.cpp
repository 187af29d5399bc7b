#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "relight/dataset.hpp"
#include "relight/error.hpp"
#include "relight/image_io.hpp"
#include "relight/renderer.hpp"

using namespace relight;
using std::numbers::pi;

namespace {

// White Lambertian square turned to face +x, lit head-on from +x.
SceneSpec facing_plane() {
  SceneSpec s;
  Primitive p;
  p.shape = Shape::plane;
  p.transform.rotation = Mat3::rotation({0, 1, 0}, pi / 2);
  p.material = {{1, 1, 1}, 1.0, 0.0};
  s.primitives.push_back(p);
  return s;
}

CameraPose facing_camera() {
  CameraPose cam;
  cam.position = {3.0, 0.4, 0.3};
  cam.look_at = {0, 0, 0};
  cam.width = cam.height = 24;
  return cam;
}

bool in_sphere_shadow(const Vec3& p, const Vec3& l, const Vec3& center, double radius) {
  const Vec3 oc = center - p;
  const double t = dot(oc, l);
  if (t <= 0) return false;
  return length(oc - l * t) < radius;
}

// Fine ray march toward the light; a sample inside any sphere or box, or a
// sign change across a plane's extent, blocks.
int marched_visibility(const SceneSpec& s, const Vec3& p, const Vec3& n, const LightParams& light) {
  const Vec3 o = p + n * kShadowOffset;
  const IncidentLight in = incident_light(light, o);
  const double t_end = std::isfinite(in.distance) ? in.distance : 10.0;
  std::vector<double> prev_z(s.primitives.size(), 0.0);
  for (double t = 0.0; t <= t_end; t += 1e-3) {
    const Vec3 q = o + in.direction * t;
    for (std::size_t i = 0; i < s.primitives.size(); ++i) {
      const Primitive& prim = s.primitives[i];
      const Vec3 lq = prim.transform.point_to_local(q);
      switch (prim.shape) {
        case Shape::sphere:
          if (dot(lq, lq) < 1.0) return 0;
          break;
        case Shape::box:
          if (std::abs(lq.x) < 1 && std::abs(lq.y) < 1 && std::abs(lq.z) < 1) return 0;
          break;
        case Shape::plane:
          if (t > 0 && prev_z[i] * lq.z < 0 && std::abs(lq.x) < 1 && std::abs(lq.y) < 1) return 0;
          prev_z[i] = lq.z;
          break;
      }
    }
  }
  return 1;
}

}  // namespace

TEST_CASE("closed-form Lambertian plane") {
  const LightParams light = LightParams::directional(0.0, pi / 2, 1000.0, 5200.0);
  const RenderResult r = render(facing_plane(), facing_camera(), light, {true, false});
  const Vec3 rgb = temperature_to_rgb(5200.0);
  int fg = 0;
  for (int y = 0; y < r.image.height(); ++y)
    for (int x = 0; x < r.image.width(); ++x) {
      if (!r.gbuffer.coverage(y, x)) continue;
      ++fg;
      for (int c = 0; c < 3; ++c) CHECK(std::abs(r.image(y, x, c) - rgb[c] / pi) <= 1e-6);
    }
  CHECK(fg > 100);

  const LightParams behind = LightParams::directional(pi, pi / 2, 1000.0, 5200.0);
  const RenderResult dark = render(facing_plane(), facing_camera(), behind);
  for (int y = 0; y < dark.image.height(); ++y)
    for (int x = 0; x < dark.image.width(); ++x)
      if (dark.gbuffer.coverage(y, x))
        for (int c = 0; c < 3; ++c) CHECK(dark.image(y, x, c) == 0.0);
}

TEST_CASE("zero-area image is a config error") {
  CameraPose cam = facing_camera();
  cam.width = 0;
  CHECK_THROWS_AS(render(facing_plane(), cam, LightParams{LightKind::directional, 0, 1}), ConfigError);
}

TEST_CASE("shade_pixel examples") {
  const Vec3 n{0, 0, 1};
  const Vec3 irr{1.0, 0.8, 0.6};
  const Material m{{0.6, 0.4, 0.2}, 1.0, 0.0};
  const Vec3 diffuse_only = shade_pixel(m, n, n, n, irr, false);
  const Vec3 full = shade_pixel(m, n, n, n, irr);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(diffuse_only[c] - m.albedo[c] / pi * irr[c]) <= 1e-15);
    CHECK(full[c] > diffuse_only[c]);
    CHECK(full[c] - diffuse_only[c] < 0.05);
  }
  const Vec3 grazing = shade_pixel(m, n, n, Vec3{1, 0, 0}, irr);
  CHECK(grazing == Vec3{});
  // Metallic: only the specular lobe remains, which equals the full metallic response.
  const Material metal{{0.9, 0.1, 0.5}, 0.5, 1.0};
  const Vec3 l = normalize(Vec3{0.3, 0.1, 1.0});
  CHECK(shade_pixel(metal, n, n, l, irr, false) == Vec3{});
}

TEST_CASE("hard shadows of a sphere on a plane") {
  const SceneSpec s = fixtures::sphere_on_plane();
  const LightParams light = LightParams::directional(0.7, 0.5, 1000.0, 6000.0);
  const CameraPose cam = fixtures::small_camera(48, {0.5, -3.0, 3.0});
  const RenderResult r = render(s, cam, light);
  const CameraFrame frame(cam);
  int blocked = 0, open = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      if (!r.gbuffer.coverage(y, x)) continue;
      const Vec3 p = cam.position + primary_ray(cam, frame, x, y) * r.gbuffer.depth(y, x);
      if (std::abs(p.z) > 1e-9) continue;  // plane pixels only
      const bool shadowed = in_sphere_shadow(p, light.direction(), {0, 0, 0.5}, 0.5);
      const double lum = r.image(y, x, 0) + r.image(y, x, 1) + r.image(y, x, 2);
      if (shadowed) {
        ++blocked;
        CHECK(lum == 0.0);
      } else {
        ++open;
        CHECK(lum > 0.0);
      }
    }
  CHECK(blocked > 10);
  CHECK(open > 10);
}

TEST_CASE("visibility agrees with a ray march") {
  int agree = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const SceneSpec s = make_object(seed * 77, ObjectStyle::composite, true);
    const CameraPose cam = sample_camera_hemisphere(seed, 3.0, 4.0, {0, 0, 0.4}, {0.75, 16, 16});
    const LightParams light = seed % 2 ? LightParams::directional(seed * 1.3, 0.6, 1000, 5000)
                                       : LightParams::point(seed * 1.3, 0.7, 3.0, 1000, 5000);
    const RenderResult r = render(s, cam, light);
    const CameraFrame frame(cam);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        if (!r.gbuffer.coverage(y, x)) continue;
        const Vec3 dir = primary_ray(cam, frame, x, y);
        const Vec3 p = cam.position + dir * r.gbuffer.depth(y, x);
        const auto hit = intersect(s, cam.position, dir, 0.0, 1e30);
        REQUIRE(hit);
        ++total;
        agree += visibility(s, p, hit->normal, light) == marched_visibility(s, p, hit->normal, light);
      }
  }
  CHECK(total > 500);
  CHECK(agree >= total - total / 100);
}

TEST_CASE("convex primitive never shadows itself") {
  const SceneSpec s = fixtures::unit_sphere();
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = normalize(Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const LightParams l = LightParams::directional(rng.uniform(-pi, pi), rng.uniform(0.1, 3.0), 1000, 5000);
    if (dot(n, l.direction()) <= 0) continue;
    CHECK(visibility(s, n, n, l) == 1);
  }
  SceneSpec boxed = fixtures::unit_sphere();
  Primitive box;
  box.shape = Shape::box;
  box.transform.translation = {0, 0, 3};
  boxed.primitives.push_back(box);
  CHECK(visibility(boxed, {0, 0, 1}, {0, 0, 1}, LightParams::directional(0, 0.01, 1000, 5000)) == 0);
}

TEST_CASE("energy linearity") {
  const SceneSpec s = fixtures::sphere_on_plane();
  const CameraPose cam = fixtures::small_camera(32);
  const LightParams a = LightParams::directional(0.3, 0.8, 700, 4000);
  LightParams b = a;
  b.energy_lux *= 2;
  const RenderResult ra = render(s, cam, a), rb = render(s, cam, b);
  for (std::size_t i = 0; i < ra.image.data().size(); ++i) {
    if (!ra.gbuffer.coverage.data()[i / 3]) continue;
    CHECK(rb.image.data()[i] == 2.0 * ra.image.data()[i]);
  }
  LightParams c = a;
  c.energy_lux *= 1.7;
  const RenderResult rc = render(s, cam, c);
  for (std::size_t i = 0; i < ra.image.data().size(); ++i)
    if (ra.gbuffer.coverage.data()[i / 3]) CHECK(std::abs(rc.image.data()[i] - 1.7 * ra.image.data()[i]) <= 1e-14);
}

TEST_CASE("rotational consistency") {
  const SceneSpec s = fixtures::sphere_on_plane();
  const CameraPose cam = fixtures::small_camera(32);
  const LightParams l = LightParams::directional(0.3, 0.8, 1000, 5000);
  const double angle = 0.9;
  const Mat3 rot = Mat3::rotation({0, 0, 1}, angle);
  SceneSpec s2 = s;
  for (auto& p : s2.primitives) {
    p.transform.rotation = rot * p.transform.rotation;
    p.transform.translation = rot * p.transform.translation;
  }
  CameraPose cam2 = cam;
  cam2.position = rot * cam.position;
  cam2.look_at = rot * cam.look_at;
  cam2.up = rot * cam.up;
  LightParams l2 = l;
  l2.yaw_rad += angle;
  const RenderResult a = render(s, cam, l), b = render(s2, cam2, l2);
  for (std::size_t i = 0; i < a.image.data().size(); ++i) CHECK(std::abs(a.image.data()[i] - b.image.data()[i]) <= 1e-6);
}

TEST_CASE("gbuffer reshading reproduces the render") {
  const SceneSpec s = fixtures::sphere_on_plane();
  const CameraPose cam = fixtures::small_camera(32);
  const LightParams l = LightParams::point(2.0, 0.9, 4.0, 1200, 3500);
  const RenderResult r = render(s, cam, l, {false, true});
  const CameraFrame frame(cam);
  const GBuffer& g = r.gbuffer;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      if (!g.coverage(y, x)) continue;
      const Vec3 dir = primary_ray(cam, frame, x, y);
      const Vec3 p = cam.position + dir * g.depth(y, x);
      const Vec3 n = frame.to_world({g.normal(y, x, 0), g.normal(y, x, 1), g.normal(y, x, 2)});
      const Material m{{g.albedo(y, x, 0), g.albedo(y, x, 1), g.albedo(y, x, 2)}, g.roughness(y, x), g.metallic(y, x)};
      const IncidentLight in = incident_light(l, p);
      const Vec3 v = shade_pixel(m, n, -dir, in.direction, in.irradiance);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(v[c] - r.image(y, x, c)) <= 1e-6);
      CHECK(std::abs(length(n) - 1.0) < 1e-9);
    }
}

TEST_CASE("render determinism") {
  const SceneSpec s = make_object(5, ObjectStyle::composite, true);
  const CameraPose cam = fixtures::small_camera(32);
  const LightParams l = LightParams::directional(0.3, 0.8, 1000, 5000);
  CHECK(write_raw_f32(render(s, cam, l).image) == write_raw_f32(render(s, cam, l).image));
}
