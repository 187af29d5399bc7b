#pragma once

#include <optional>
#include <vector>

#include "relight/geometry.hpp"
#include "relight/image.hpp"
#include "relight/light_model.hpp"

namespace relight {

// Reference illuminance that maps onto unit irradiance.
inline constexpr double kReferenceLux = 1000.0;
// Shadow rays start this far along the surface normal.
inline constexpr double kShadowOffset = 1e-4;
inline constexpr double kMinRoughness = 0.02;

struct Material {
  Vec3 albedo{0.5, 0.5, 0.5};
  double roughness = 0.5;
  double metallic = 0.0;

  void validate() const;
  bool operator==(const Material&) const = default;
};

enum class Shape { sphere, box, plane };

// world = rotation * (scale ⊙ local) + translation.
// Local primitives: unit sphere, the cube [-1,1]^3, and the square [-1,1]^2 at z = 0.
struct Transform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation{};
  Vec3 scale{1.0, 1.0, 1.0};

  Vec3 point_to_local(const Vec3& p) const;
  Vec3 vector_to_local(const Vec3& v) const;
  Vec3 normal_to_world(const Vec3& n_local) const;
  bool operator==(const Transform&) const = default;
};

struct Primitive {
  Shape shape = Shape::sphere;
  Transform transform{};
  Material material{};
  bool operator==(const Primitive&) const = default;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  Vec3 background{0.05, 0.05, 0.05};

  void validate() const;
  bool operator==(const SceneSpec&) const = default;
};

struct CameraPose {
  Vec3 position{0.0, -3.0, 1.0};
  Vec3 look_at{};
  Vec3 up{0.0, 0.0, 1.0};
  double vfov_rad = 0.7;
  int width = 128;
  int height = 128;

  void validate() const;
  bool operator==(const CameraPose&) const = default;
};

// Orthonormal camera frame; the camera looks down -back.
struct CameraFrame {
  Vec3 right, up, back;

  explicit CameraFrame(const CameraPose& cam);
  Vec3 to_camera(const Vec3& world) const { return {dot(world, right), dot(world, up), dot(world, back)}; }
  Vec3 to_world(const Vec3& c) const { return right * c.x + up * c.y + back * c.z; }
};

// Unit primary-ray direction through the center of pixel (x, y).
Vec3 primary_ray(const CameraPose& cam, const CameraFrame& frame, int x, int y);

struct GBuffer {
  Image<double> albedo;     // H x W x 3
  Image<double> normal;     // H x W x 3, camera space
  Map roughness;            // H x W
  Map metallic;             // H x W
  Map depth;                // H x W, ray distance in meters, +inf on background
  Coverage coverage;        // H x W, 0/1

  GBuffer() = default;
  GBuffer(int h, int w);
  int height() const { return coverage.height(); }
  int width() const { return coverage.width(); }
};

struct RenderOptions {
  bool shadows = true;
  // Disabling the specular lobe leaves a pure Lambertian response.
  bool specular = true;
  bool operator==(const RenderOptions&) const = default;
};

struct RenderResult {
  LinearImage image;
  GBuffer gbuffer;
};

struct Hit {
  double t = 0.0;
  std::size_t primitive = 0;
  Vec3 normal;  // unit world-space geometric normal, facing the ray origin
};

std::optional<Hit> intersect(const SceneSpec& scene, const Vec3& origin, const Vec3& dir,
                             double t_min, double t_max);

// Incident light at a surface point: unit direction toward the light and the
// colored irradiance scale (before the cosine term).
struct IncidentLight {
  Vec3 direction;
  Vec3 irradiance;
  double distance;  // +inf for directional lights
};

IncidentLight incident_light(const LightParams& light, const Vec3& p);

Vec3 shade_pixel(const Material& mat, const Vec3& n, const Vec3& v, const Vec3& l,
                 const Vec3& irradiance, bool specular = true);

// 1 when the point sees the light, 0 otherwise.
int visibility(const SceneSpec& scene, const Vec3& p, const Vec3& n, const LightParams& light);

RenderResult render(const SceneSpec& scene, const CameraPose& cam, const LightParams& light,
                    const RenderOptions& opts = {});

}  // namespace relight
