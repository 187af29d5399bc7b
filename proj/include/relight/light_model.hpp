#pragma once

#include <array>
#include <vector>

#include "relight/geometry.hpp"

namespace relight {

using Direction = Vec3;
using ShVector = std::array<double, 9>;

inline constexpr double kMinTemperatureK = 1000.0;
inline constexpr double kMaxTemperatureK = 12000.0;
// Kelvin span that maps a temperature difference onto the dimensionless Δτ.
inline constexpr double kTemperatureScaleK = 10000.0;

enum class LightKind { directional, point };

// A single light. Yaw is the azimuth about +z, pitch the polar angle from +z.
// For point lights the position sits on the ray from the world origin along
// (yaw, pitch), so the same angles describe both kinds.
struct LightParams {
  LightKind kind = LightKind::directional;
  double yaw_rad = 0.0;
  double pitch_rad = 0.0;
  Vec3 position{};
  double energy_lux = 1000.0;
  double temperature_k = 6500.0;

  static LightParams directional(double yaw, double pitch, double energy, double temperature);
  static LightParams point(double yaw, double pitch, double distance, double energy,
                           double temperature);

  // Unit vector from the object origin toward the light.
  Direction direction() const;
  void validate() const;

  bool operator==(const LightParams&) const = default;
};

// The exact angular edit that produced a DeltaL. The SH difference is not
// invertible, so the edit rides along for apply_delta.
struct AngularEdit {
  double dyaw_rad = 0.0;
  double dpitch_rad = 0.0;
  bool operator==(const AngularEdit&) const = default;
};

struct DeltaL {
  ShVector delta_sh{};
  double delta_log_e = 0.0;
  double delta_tau = 0.0;
  AngularEdit edit{};

  // [Δs_SH(9), ΔlogE, Δτ]
  std::array<double, 11> components() const;
  bool is_zero() const;
  bool operator==(const DeltaL&) const = default;
};

Direction yaw_pitch_to_direction(double yaw_rad, double pitch_rad);
ShVector sh_project(const Direction& d);
DeltaL delta_illumination(const LightParams& source, const LightParams& target);

enum class RangePolicy { strict, clamp };

struct AppliedLight {
  LightParams light;
  bool clamped = false;
};

// Builds ℓ_t from ℓ_s and an edit. Strict policy throws RangeError when the
// result leaves the parameter domain; clamp policy pulls it back in and flags it.
AppliedLight apply_delta(const LightParams& source, const DeltaL& delta,
                         RangePolicy policy = RangePolicy::strict);

// Helper for callers that describe edits in angles, log-energy and kelvin.
DeltaL make_edit(const LightParams& source, double dyaw_rad, double dpitch_rad,
                 double dlog_e, double dtemp_k, RangePolicy policy = RangePolicy::strict);

Vec3 temperature_to_rgb(double temperature_k);

// Affine map from the 11-dim Δℓ to a conditioning token.
struct TokenProjection {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;     // out_dim

  static TokenProjection identity(int dim);
  static TokenProjection random(int in_dim, int out_dim, unsigned long long seed);
};

std::vector<double> project_token(const DeltaL& delta, const TokenProjection& proj);
std::vector<double> apply_projection(const std::vector<double>& input,
                                     const TokenProjection& proj);

}  // namespace relight
