#include "relight/light_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "relight/error.hpp"
#include "relight/random.hpp"

namespace relight {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPitchMargin = 1e-6;

std::string fmt_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

}  // namespace

LightParams LightParams::directional(double yaw, double pitch, double energy, double temperature) {
  LightParams l;
  l.kind = LightKind::directional;
  l.yaw_rad = yaw;
  l.pitch_rad = pitch;
  l.energy_lux = energy;
  l.temperature_k = temperature;
  l.validate();
  return l;
}

LightParams LightParams::point(double yaw, double pitch, double distance, double energy,
                               double temperature) {
  if (!(distance > 0.0)) throw DomainError("point light distance must be > 0, got " + fmt_value(distance));
  LightParams l;
  l.kind = LightKind::point;
  l.yaw_rad = yaw;
  l.pitch_rad = pitch;
  l.position = yaw_pitch_to_direction(yaw, pitch) * distance;
  l.energy_lux = energy;
  l.temperature_k = temperature;
  l.validate();
  return l;
}

Direction LightParams::direction() const { return yaw_pitch_to_direction(yaw_rad, pitch_rad); }

void LightParams::validate() const {
  if (!std::isfinite(yaw_rad)) throw DomainError("light yaw is not finite");
  if (!(pitch_rad > 0.0 && pitch_rad < kPi))
    throw DomainError("light pitch must lie in (0, pi), got " + fmt_value(pitch_rad));
  if (!(energy_lux > 0.0) || !std::isfinite(energy_lux))
    throw DomainError("light energy must be > 0 lux, got " + fmt_value(energy_lux));
  if (!(temperature_k >= kMinTemperatureK && temperature_k <= kMaxTemperatureK))
    throw DomainError("light temperature must lie in [1000, 12000] K, got " +
                      fmt_value(temperature_k));
  if (kind == LightKind::point) {
    const double dist = length(position);
    if (!(dist > 0.0) || !std::isfinite(dist)) throw DomainError("point light at the origin");
    const Vec3 along = position / dist - direction();
    if (length(along) > 1e-6)
      throw DomainError("point light position disagrees with its yaw/pitch");
  }
}

std::array<double, 11> DeltaL::components() const {
  std::array<double, 11> out{};
  std::copy(delta_sh.begin(), delta_sh.end(), out.begin());
  out[9] = delta_log_e;
  out[10] = delta_tau;
  return out;
}

bool DeltaL::is_zero() const {
  const auto c = components();
  return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; }) &&
         edit.dyaw_rad == 0.0 && edit.dpitch_rad == 0.0;
}

Direction yaw_pitch_to_direction(double yaw_rad, double pitch_rad) {
  if (!(pitch_rad > 0.0 && pitch_rad < kPi))
    throw DomainError("pitch must lie in (0, pi), got " + fmt_value(pitch_rad));
  if (!std::isfinite(yaw_rad)) throw DomainError("yaw is not finite: " + fmt_value(yaw_rad));
  const double sp = std::sin(pitch_rad);
  return {std::cos(yaw_rad) * sp, std::sin(yaw_rad) * sp, std::cos(pitch_rad)};
}

ShVector sh_project(const Direction& d) {
  const double n2 = dot(d, d);
  if (!(std::abs(n2 - 1.0) <= 1e-9))
    throw DomainError("sh_project needs a unit direction, |d|^2 = " + fmt_value(n2));

  // Real basis, no Condon-Shortley phase.
  const double k00 = 0.5 * std::sqrt(1.0 / kPi);
  const double k1 = std::sqrt(3.0 / (4.0 * kPi));
  const double k2 = std::sqrt(15.0 / (4.0 * kPi));
  const double k20 = 0.25 * std::sqrt(5.0 / kPi);
  const double k22 = 0.25 * std::sqrt(15.0 / kPi);
  const double x = d.x, y = d.y, z = d.z;
  return {k00,
          k1 * y,
          k1 * z,
          k1 * x,
          k2 * x * y,
          k2 * y * z,
          k20 * (3.0 * z * z - 1.0),
          k2 * x * z,
          k22 * (x * x - y * y)};
}

DeltaL delta_illumination(const LightParams& source, const LightParams& target) {
  source.validate();
  target.validate();
  DeltaL d;
  const ShVector ss = sh_project(source.direction());
  const ShVector st = sh_project(target.direction());
  for (std::size_t i = 0; i < 9; ++i) d.delta_sh[i] = st[i] - ss[i];
  d.delta_log_e = std::log(target.energy_lux) - std::log(source.energy_lux);
  d.delta_tau = (target.temperature_k - source.temperature_k) / kTemperatureScaleK;
  d.edit.dyaw_rad = target.yaw_rad - source.yaw_rad;
  d.edit.dpitch_rad = target.pitch_rad - source.pitch_rad;
  return d;
}

AppliedLight apply_delta(const LightParams& source, const DeltaL& delta, RangePolicy policy) {
  source.validate();
  AppliedLight out{source, false};
  LightParams& t = out.light;
  t.yaw_rad = source.yaw_rad + delta.edit.dyaw_rad;
  t.pitch_rad = source.pitch_rad + delta.edit.dpitch_rad;
  t.energy_lux = source.energy_lux * std::exp(delta.delta_log_e);
  t.temperature_k = source.temperature_k + delta.delta_tau * kTemperatureScaleK;

  if (!(t.pitch_rad > 0.0 && t.pitch_rad < kPi)) {
    if (policy == RangePolicy::strict)
      throw RangeError("edit moves pitch to " + fmt_value(t.pitch_rad) + " rad, outside (0, pi)");
    t.pitch_rad = std::clamp(t.pitch_rad, kPitchMargin, kPi - kPitchMargin);
    out.clamped = true;
  }
  if (!(t.temperature_k >= kMinTemperatureK && t.temperature_k <= kMaxTemperatureK)) {
    if (policy == RangePolicy::strict)
      throw RangeError("edit moves temperature to " + fmt_value(t.temperature_k) +
                       " K, outside [1000, 12000]");
    t.temperature_k = std::clamp(t.temperature_k, kMinTemperatureK, kMaxTemperatureK);
    out.clamped = true;
  }
  if (!(t.energy_lux > 0.0) || !std::isfinite(t.energy_lux))
    throw RangeError("edit moves energy to " + fmt_value(t.energy_lux) + " lux");
  if (t.kind == LightKind::point) t.position = t.direction() * length(source.position);
  return out;
}

DeltaL make_edit(const LightParams& source, double dyaw_rad, double dpitch_rad, double dlog_e,
                 double dtemp_k, RangePolicy policy) {
  DeltaL request;
  request.edit = {dyaw_rad, dpitch_rad};
  request.delta_log_e = dlog_e;
  request.delta_tau = dtemp_k / kTemperatureScaleK;
  const AppliedLight target = apply_delta(source, request, policy);
  return delta_illumination(source, target.light);
}

Vec3 temperature_to_rgb(double temperature_k) {
  if (!(temperature_k >= kMinTemperatureK && temperature_k <= kMaxTemperatureK))
    throw DomainError("temperature must lie in [1000, 12000] K, got " + fmt_value(temperature_k));

  // Helland's fit to the Planckian locus, in 8-bit display units. Its two
  // branches disagree slightly at 6600 K, so they are blended over 6500-6700 K.
  const double t = temperature_k / 100.0;
  const double warm_g = 99.4708025861 * std::log(t) - 161.1195681661;
  const double cool_r = 329.698727446 * std::pow(std::max(t - 60.0, 1.0), -0.1332047592);
  const double cool_g = 288.1221695283 * std::pow(std::max(t - 60.0, 1.0), -0.0755148492);
  const double w = std::clamp((t - 65.0) / 2.0, 0.0, 1.0);
  const double r = (1.0 - w) * 255.0 + w * std::min(cool_r, 255.0);
  const double g = (1.0 - w) * std::clamp(warm_g, 0.0, 255.0) + w * std::min(cool_g, 255.0);
  const double warm_b = t <= 19.0 ? 0.0 : std::clamp(138.5177312231 * std::log(t - 10.0) - 305.0447927307, 0.0, 255.0);
  const double b = (1.0 - w) * warm_b + w * 255.0;
  Vec3 rgb{srgb_to_linear(std::clamp(r, 0.0, 255.0) / 255.0),
           srgb_to_linear(std::clamp(g, 0.0, 255.0) / 255.0),
           srgb_to_linear(std::clamp(b, 0.0, 255.0) / 255.0)};
  const double peak = std::max({rgb.x, rgb.y, rgb.z});
  return rgb / peak;
}

TokenProjection TokenProjection::identity(int dim) {
  TokenProjection p;
  p.in_dim = p.out_dim = dim;
  p.weights.assign(static_cast<std::size_t>(dim * dim), 0.0);
  for (int i = 0; i < dim; ++i) p.weights[static_cast<std::size_t>(i * dim + i)] = 1.0;
  p.bias.assign(static_cast<std::size_t>(dim), 0.0);
  return p;
}

TokenProjection TokenProjection::random(int in_dim, int out_dim, unsigned long long seed) {
  if (in_dim <= 0 || out_dim <= 0) throw ShapeError("token projection dimensions must be positive");
  TokenProjection p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  p.weights.resize(static_cast<std::size_t>(in_dim * out_dim));
  for (double& w : p.weights) w = rng.normal() * scale;
  p.bias.resize(static_cast<std::size_t>(out_dim));
  for (double& b : p.bias) b = 0.1 * rng.normal();
  return p;
}

std::vector<double> apply_projection(const std::vector<double>& input,
                                     const TokenProjection& proj) {
  if (static_cast<int>(input.size()) != proj.in_dim ||
      proj.weights.size() != static_cast<std::size_t>(proj.in_dim * proj.out_dim) ||
      proj.bias.size() != static_cast<std::size_t>(proj.out_dim))
    throw ShapeError("projection expects " + std::to_string(proj.in_dim) + " inputs, got " +
                     std::to_string(input.size()));
  std::vector<double> out(proj.bias);
  for (int o = 0; o < proj.out_dim; ++o)
    for (int i = 0; i < proj.in_dim; ++i)
      out[static_cast<std::size_t>(o)] +=
          proj.weights[static_cast<std::size_t>(o * proj.in_dim + i)] * input[static_cast<std::size_t>(i)];
  return out;
}

std::vector<double> project_token(const DeltaL& delta, const TokenProjection& proj) {
  const auto c = delta.components();
  return apply_projection(std::vector<double>(c.begin(), c.end()), proj);
}

}  // namespace relight
