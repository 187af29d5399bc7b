#include "relight/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "relight/error.hpp"

namespace relight {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Ray/primitive tests in local space; t is shared with world space because
// the local direction is not renormalized.
std::optional<double> hit_sphere(const Vec3& o, const Vec3& d, double t_min, double t_max) {
  const double a = dot(d, d);
  const double b = dot(o, d);
  const double c = dot(o, o) - 1.0;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / a, (-b + sq) / a})
    if (t > t_min && t < t_max) return t;
  return std::nullopt;
}

std::optional<double> hit_box(const Vec3& o, const Vec3& d, double t_min, double t_max) {
  double t0 = -kInf, t1 = kInf;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < -1.0 || o[i] > 1.0) return std::nullopt;
      continue;
    }
    double ta = (-1.0 - o[i]) / d[i];
    double tb = (1.0 - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  if (t0 > t_min && t0 < t_max) return t0;
  if (t1 > t_min && t1 < t_max) return t1;
  return std::nullopt;
}

std::optional<double> hit_plane(const Vec3& o, const Vec3& d, double t_min, double t_max) {
  if (d.z == 0.0) return std::nullopt;
  const double t = -o.z / d.z;
  if (!(t > t_min && t < t_max)) return std::nullopt;
  const double x = o.x + t * d.x, y = o.y + t * d.y;
  if (std::abs(x) > 1.0 || std::abs(y) > 1.0) return std::nullopt;
  return t;
}

Vec3 local_normal(Shape shape, const Vec3& p) {
  switch (shape) {
    case Shape::sphere:
      return p;
    case Shape::box: {
      const double ax = std::abs(p.x), ay = std::abs(p.y), az = std::abs(p.z);
      if (ax >= ay && ax >= az) return {p.x > 0 ? 1.0 : -1.0, 0.0, 0.0};
      if (ay >= az) return {0.0, p.y > 0 ? 1.0 : -1.0, 0.0};
      return {0.0, 0.0, p.z > 0 ? 1.0 : -1.0};
    }
    case Shape::plane:
      return {0.0, 0.0, 1.0};
  }
  return {0.0, 0.0, 1.0};
}

}  // namespace

void Material::validate() const {
  for (int c = 0; c < 3; ++c)
    if (!in_unit(albedo[c])) throw DomainError("material albedo must lie in [0, 1]");
  if (!(roughness >= kMinRoughness && roughness <= 1.0))
    throw DomainError("material roughness must lie in [0.02, 1], got " + std::to_string(roughness));
  if (!in_unit(metallic)) throw DomainError("material metallic must lie in [0, 1]");
}

Vec3 Transform::point_to_local(const Vec3& p) const {
  const Vec3 r = rotation.transposed() * (p - translation);
  return {r.x / scale.x, r.y / scale.y, r.z / scale.z};
}

Vec3 Transform::vector_to_local(const Vec3& v) const {
  const Vec3 r = rotation.transposed() * v;
  return {r.x / scale.x, r.y / scale.y, r.z / scale.z};
}

Vec3 Transform::normal_to_world(const Vec3& n) const {
  return normalize(rotation * Vec3{n.x / scale.x, n.y / scale.y, n.z / scale.z});
}

void SceneSpec::validate() const {
  if (primitives.empty()) throw ConfigError("scene needs at least one primitive");
  for (const auto& p : primitives) {
    p.material.validate();
    const Vec3& s = p.transform.scale;
    if (!(std::abs(s.x) > 0.0 && std::abs(s.y) > 0.0 && std::abs(s.z) > 0.0))
      throw ConfigError("primitive transform is not invertible (zero scale)");
    const Mat3 should_be_identity = p.transform.rotation * p.transform.rotation.transposed();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(should_be_identity(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
          throw ConfigError("primitive rotation is not orthonormal");
  }
  for (int c = 0; c < 3; ++c)
    if (!(background[c] >= 0.0)) throw ConfigError("background radiance must be nonnegative");
}

void CameraPose::validate() const {
  if (width <= 0 || height <= 0)
    throw ConfigError("image must have positive area, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  if (!(vfov_rad > 0.0 && vfov_rad < kPi)) throw ConfigError("vfov must lie in (0, pi)");
  const Vec3 view = look_at - position;
  if (length(view) == 0.0) throw ConfigError("camera position equals look_at");
  if (length(cross(normalize(view), normalize(up))) < 1e-9)
    throw ConfigError("camera up vector is parallel to the view axis");
}

CameraFrame::CameraFrame(const CameraPose& cam) {
  const Vec3 forward = normalize(cam.look_at - cam.position);
  right = normalize(cross(forward, cam.up));
  up = cross(right, forward);
  back = -forward;
}

Vec3 primary_ray(const CameraPose& cam, const CameraFrame& frame, int x, int y) {
  const double half = std::tan(0.5 * cam.vfov_rad);
  const double aspect = static_cast<double>(cam.width) / static_cast<double>(cam.height);
  const double sx = (2.0 * (x + 0.5) / cam.width - 1.0) * half * aspect;
  const double sy = (1.0 - 2.0 * (y + 0.5) / cam.height) * half;
  return normalize(frame.right * sx + frame.up * sy - frame.back);
}

GBuffer::GBuffer(int h, int w)
    : albedo(h, w, 3),
      normal(h, w, 3),
      roughness(h, w, 1),
      metallic(h, w, 1),
      depth(h, w, 1, kInf),
      coverage(h, w, 1, 0) {}

std::optional<Hit> intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& dir,
                             double t_min, double t_max) {
  std::optional<Hit> best;
  double closest = t_max;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& prim = scene.primitives[i];
    const Vec3 o = prim.transform.point_to_local(origin);
    const Vec3 d = prim.transform.vector_to_local(dir);
    std::optional<double> t;
    switch (prim.shape) {
      case Shape::sphere: t = hit_sphere(o, d, t_min, closest); break;
      case Shape::box: t = hit_box(o, d, t_min, closest); break;
      case Shape::plane: t = hit_plane(o, d, t_min, closest); break;
    }
    if (!t) continue;
    closest = *t;
    Vec3 n = prim.transform.normal_to_world(local_normal(prim.shape, o + d * *t));
    if (dot(n, dir) > 0.0) n = -n;
    best = Hit{*t, i, n};
  }
  return best;
}

IncidentLight incident_light(const LightParams& light, const Vec3& p) {
  const Vec3 color = temperature_to_rgb(light.temperature_k);
  const double scale = light.energy_lux / kReferenceLux;
  if (light.kind == LightKind::directional) return {light.direction(), color * scale, kInf};
  const Vec3 to_light = light.position - p;
  const double dist = length(to_light);
  return {to_light / dist, color * (scale / (dist * dist)), dist};
}

Vec3 shade_pixel(const Material& mat, const Vec3& n, const Vec3& v, const Vec3& l,
                 const Vec3& irradiance, bool specular) {
  const double ndl = dot(n, l);
  if (!(ndl > 0.0)) return {};

  const Vec3 diffuse = mat.albedo * ((1.0 - mat.metallic) / kPi);
  Vec3 brdf = diffuse;
  if (specular) {
    const double ndv = std::clamp(dot(n, v), 0.0, 1.0);
    const Vec3 h = normalize(v + l);
    const double ndh = std::clamp(dot(n, h), 0.0, 1.0);
    const double vdh = std::clamp(dot(v, h), 0.0, 1.0);
    const double rough = std::max(mat.roughness, kMinRoughness);
    const double a = rough * rough;
    const double a2 = a * a;
    const double denom = ndh * ndh * (a2 - 1.0) + 1.0;
    const double d = a2 / (kPi * denom * denom);
    // Height-correlated Smith visibility, G / (4 n.l n.v) folded in.
    const double gv = ndl * std::sqrt(ndv * ndv * (1.0 - a2) + a2);
    const double gl = ndv * std::sqrt(ndl * ndl * (1.0 - a2) + a2);
    const double vis = 0.5 / (gv + gl);
    const Vec3 f0 = Vec3{0.04, 0.04, 0.04} * (1.0 - mat.metallic) + mat.albedo * mat.metallic;
    const double fw = std::pow(1.0 - vdh, 5.0);
    const Vec3 fresnel = f0 + (Vec3{1.0, 1.0, 1.0} - f0) * fw;
    brdf += fresnel * (d * vis);
  }
  return hadamard(brdf, irradiance) * ndl;
}

int visibility(const SceneSpec& scene, const Vec3& p, const Vec3& n, const LightParams& light) {
  const Vec3 origin = p + n * kShadowOffset;
  const IncidentLight in = incident_light(light, origin);
  return intersect(scene, origin, in.direction, 0.0, in.distance) ? 0 : 1;
}

RenderResult render(const SceneSpec& scene, const CameraPose& cam, const LightParams& light,
                    const RenderOptions& opts) {
  cam.validate();
  scene.validate();
  light.validate();

  const CameraFrame frame(cam);
  RenderResult out{LinearImage(cam.height, cam.width, 3), GBuffer(cam.height, cam.width)};
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 dir = primary_ray(cam, frame, x, y);
      const auto hit = intersect(scene, cam.position, dir, 0.0, kInf);
      if (!hit) {
        for (int c = 0; c < 3; ++c) out.image(y, x, c) = scene.background[c];
        continue;
      }
      const Material& mat = scene.primitives[hit->primitive].material;
      const Vec3 p = cam.position + dir * hit->t;
      const IncidentLight in = incident_light(light, p);
      Vec3 radiance = shade_pixel(mat, hit->normal, -dir, in.direction, in.irradiance, opts.specular);
      if (opts.shadows && dot(hit->normal, in.direction) > 0.0 &&
          visibility(scene, p, hit->normal, light) == 0)
        radiance = {};
      for (int c = 0; c < 3; ++c) out.image(y, x, c) = radiance[c];

      GBuffer& g = out.gbuffer;
      const Vec3 nc = frame.to_camera(hit->normal);
      for (int c = 0; c < 3; ++c) {
        g.albedo(y, x, c) = mat.albedo[c];
        g.normal(y, x, c) = nc[c];
      }
      g.roughness(y, x) = mat.roughness;
      g.metallic(y, x) = mat.metallic;
      g.depth(y, x) = hit->t;
      g.coverage(y, x) = 1;
    }
  }
  return out;
}

}  // namespace relight
